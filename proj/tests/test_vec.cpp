#include <doctest.h>

#include <cmath>

#include "pgs/core/rng.hpp"
#include "pgs/core/vec.hpp"

using namespace pgs;

TEST_CASE("vec3 basics") {
    const Vec3 a{1.0, 2.0, 3.0};
    const Vec3 b{-2.0, 0.5, 4.0};
    CHECK(a.dot(b) == doctest::Approx(-2.0 + 1.0 + 12.0));
    const Vec3 c = a.cross(b);
    // Orthogonality of the cross product to both inputs.
    CHECK(c.dot(a) == doctest::Approx(0.0));
    CHECK(c.dot(b) == doctest::Approx(0.0));
    CHECK(Vec3{3.0, 0.0, 4.0}.norm() == doctest::Approx(5.0));
    CHECK(Vec3{3.0, 0.0, 4.0}.normalized().norm() == doctest::Approx(1.0));
}

TEST_CASE("mat3 from rows and transpose multiply") {
    const Mat3 m = Mat3::from_rows({1, 2, 3}, {4, 5, 6}, {7, 8, 10});
    const Vec3 v{1.0, -1.0, 2.0};
    const Vec3 mv = m * v;
    CHECK(mv.x == doctest::Approx(5.0));
    CHECK(mv.y == doctest::Approx(11.0));
    CHECK(mv.z == doctest::Approx(19.0));
    // transpose_mul(v) == m^T v
    const Vec3 tv = m.transpose_mul(v);
    const Mat3 mt = m.transposed();
    const Vec3 ref = mt * v;
    CHECK(tv.x == doctest::Approx(ref.x));
    CHECK(tv.y == doctest::Approx(ref.y));
    CHECK(tv.z == doctest::Approx(ref.z));
}

TEST_CASE("mat2 inverse") {
    const Mat2 m{3.0, 1.0, 2.0, 4.0};
    const Mat2 inv = m.inverse();
    // m * inv = I
    CHECK(m.m00 * inv.m00 + m.m01 * inv.m10 == doctest::Approx(1.0));
    CHECK(m.m00 * inv.m01 + m.m01 * inv.m11 == doctest::Approx(0.0));
    CHECK(m.m10 * inv.m00 + m.m11 * inv.m10 == doctest::Approx(0.0));
    CHECK(m.m10 * inv.m01 + m.m11 * inv.m11 == doctest::Approx(1.0));
}

TEST_CASE("quaternion to rotation matrix is orthonormal with det 1") {
    Rng rng(7);
    for (int i = 0; i < 50; ++i) {
        Quat q{rng.normal(), rng.normal(), rng.normal(), rng.normal()};
        q = q.normalized();
        const Mat3 r = q.to_matrix();
        const Vec3 r0 = r.row(0);
        const Vec3 r1 = r.row(1);
        const Vec3 r2 = r.row(2);
        CHECK(r0.norm() == doctest::Approx(1.0));
        CHECK(r1.norm() == doctest::Approx(1.0));
        CHECK(r0.dot(r1) == doctest::Approx(0.0));
        CHECK(r0.dot(r2) == doctest::Approx(0.0));
        CHECK(r0.cross(r1).dot(r2) == doctest::Approx(1.0));
    }
}

TEST_CASE("quaternion matrix round trip recovers the canonical form") {
    Rng rng(11);
    for (int i = 0; i < 100; ++i) {
        Quat q{rng.normal(), rng.normal(), rng.normal(), rng.normal()};
        q = q.normalized().canonical();
        const Quat back = Quat::from_matrix(q.to_matrix());
        CHECK(back.w == doctest::Approx(q.w).epsilon(1e-9));
        CHECK(back.x == doctest::Approx(q.x).epsilon(1e-9));
        CHECK(back.y == doctest::Approx(q.y).epsilon(1e-9));
        CHECK(back.z == doctest::Approx(q.z).epsilon(1e-9));
    }
}

TEST_CASE("canonical quaternion has non-negative leading coefficient") {
    const Quat q{-0.5, 0.5, -0.5, 0.5};
    const Quat c = q.canonical();
    CHECK(c.w == doctest::Approx(0.5));
    CHECK(c.x == doctest::Approx(-0.5));
    // w == 0: first nonzero component decides the sign.
    const Quat z{0.0, -1.0, 0.0, 0.0};
    CHECK(z.canonical().x == doctest::Approx(1.0));
}

TEST_CASE("sigmoid and logit are inverses") {
    for (double v : {-4.0, -0.5, 0.0, 0.3, 2.0}) {
        CHECK(logit(sigmoid(v)) == doctest::Approx(v).epsilon(1e-12));
    }
    CHECK(clamp01(-0.2) == 0.0);
    CHECK(clamp01(1.7) == 1.0);
    CHECK(clamp01(0.42) == doctest::Approx(0.42));
}
