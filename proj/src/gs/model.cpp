#include "pgs/gs/model.hpp"

#include <cmath>
#include <stdexcept>

namespace pgs {

void GaussianModel::validate() const {
    if (sh_degree < 0 || sh_degree > 3)
        throw std::invalid_argument("model: sh_degree must be in 0..3");
    const size_t n = means.size();
    if (log_scales.size() != n || rotations.size() != n || opacity_logits.size() != n ||
        sh.size() != n * static_cast<size_t>(coeff_count()) * 3)
        throw std::invalid_argument("model: parameter array sizes disagree");
    for (const Vec3 &s : log_scales)
        if (!std::isfinite(s.x) || !std::isfinite(s.y) || !std::isfinite(s.z))
            throw std::invalid_argument("model: non-finite log scale");
}

Mat3 covariance_3d(const Vec3 &log_scale, const Quat &rotation) {
    const Mat3 r = rotation.normalized().to_matrix();
    const Vec3 s2{std::exp(2.0 * log_scale.x), std::exp(2.0 * log_scale.y),
                  std::exp(2.0 * log_scale.z)};
    // R diag(s2) R^T
    Mat3 out;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            out(i, j) = r(i, 0) * s2.x * r(j, 0) + r(i, 1) * s2.y * r(j, 1) +
                        r(i, 2) * s2.z * r(j, 2);
    return out;
}

Mat2 project_covariance_2d(const Mat3 &cov3, const Vec3 &mean, const CameraExtrinsics &extr,
                           const CameraIntrinsics &intr) {
    const Mat3 w = extr.rotation_matrix();
    const Vec3 t = w * mean + extr.translation;
    if (t.z <= 0.0) throw std::runtime_error("project_covariance_2d: mean behind camera");

    double J[6];
    projection_jacobian(intr, t, J);
    // M = J * W, a 2x3 in row-major.
    double M[6];
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 3; ++c)
            M[r * 3 + c] = J[r * 3 + 0] * w(0, c) + J[r * 3 + 1] * w(1, c) + J[r * 3 + 2] * w(2, c);

    // M cov3 M^T
    double MC[6];
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 3; ++c)
            MC[r * 3 + c] = M[r * 3 + 0] * cov3(0, c) + M[r * 3 + 1] * cov3(1, c) +
                            M[r * 3 + 2] * cov3(2, c);
    Mat2 out;
    out.m00 = MC[0] * M[0] + MC[1] * M[1] + MC[2] * M[2] + kCovBlur;
    out.m01 = MC[0] * M[3] + MC[1] * M[4] + MC[2] * M[5];
    out.m10 = out.m01;
    out.m11 = MC[3] * M[3] + MC[4] * M[4] + MC[5] * M[5] + kCovBlur;
    return out;
}

namespace {

// Real SH basis constants, y-first component ordering within each band.
constexpr double kSH0 = 0.28209479177387814;
constexpr double kSH1 = 0.4886025119029199;
constexpr double kSH2[5] = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005,
                            -1.0925484305920792, 0.5462742152960396};
constexpr double kSH3[7] = {-0.5900435899266435, 2.890611442640554,  -0.4570457994644658,
                            0.3731763325901154,  -0.4570457994644658, 1.445305721320277,
                            -0.5900435899266435};

}  // namespace

void sh_basis(int degree, const Vec3 &dir, double *out) {
    const double x = dir.x, y = dir.y, z = dir.z;
    out[0] = kSH0;
    if (degree < 1) return;
    out[1] = -kSH1 * y;
    out[2] = kSH1 * z;
    out[3] = -kSH1 * x;
    if (degree < 2) return;
    const double xx = x * x, yy = y * y, zz = z * z;
    out[4] = kSH2[0] * x * y;
    out[5] = kSH2[1] * y * z;
    out[6] = kSH2[2] * (2.0 * zz - xx - yy);
    out[7] = kSH2[3] * x * z;
    out[8] = kSH2[4] * (xx - yy);
    if (degree < 3) return;
    out[9] = kSH3[0] * y * (3.0 * xx - yy);
    out[10] = kSH3[1] * x * y * z;
    out[11] = kSH3[2] * y * (4.0 * zz - xx - yy);
    out[12] = kSH3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy);
    out[13] = kSH3[4] * x * (4.0 * zz - xx - yy);
    out[14] = kSH3[5] * z * (xx - yy);
    out[15] = kSH3[6] * x * (xx - 3.0 * yy);
}

void sh_basis_grad(int degree, const Vec3 &dir, Vec3 *out) {
    const double x = dir.x, y = dir.y, z = dir.z;
    out[0] = {0, 0, 0};
    if (degree < 1) return;
    out[1] = {0, -kSH1, 0};
    out[2] = {0, 0, kSH1};
    out[3] = {-kSH1, 0, 0};
    if (degree < 2) return;
    const double xx = x * x, yy = y * y, zz = z * z;
    out[4] = {kSH2[0] * y, kSH2[0] * x, 0};
    out[5] = {0, kSH2[1] * z, kSH2[1] * y};
    out[6] = {kSH2[2] * -2.0 * x, kSH2[2] * -2.0 * y, kSH2[2] * 4.0 * z};
    out[7] = {kSH2[3] * z, 0, kSH2[3] * x};
    out[8] = {kSH2[4] * 2.0 * x, kSH2[4] * -2.0 * y, 0};
    if (degree < 3) return;
    out[9] = {kSH3[0] * 6.0 * x * y, kSH3[0] * (3.0 * xx - 3.0 * yy), 0};
    out[10] = {kSH3[1] * y * z, kSH3[1] * x * z, kSH3[1] * x * y};
    out[11] = {kSH3[2] * -2.0 * x * y, kSH3[2] * (4.0 * zz - xx - 3.0 * yy), kSH3[2] * 8.0 * y * z};
    out[12] = {kSH3[3] * -6.0 * x * z, kSH3[3] * -6.0 * y * z,
               kSH3[3] * (6.0 * zz - 3.0 * xx - 3.0 * yy)};
    out[13] = {kSH3[4] * (4.0 * zz - 3.0 * xx - yy), kSH3[4] * -2.0 * x * y, kSH3[4] * 8.0 * x * z};
    out[14] = {kSH3[5] * 2.0 * x * z, kSH3[5] * -2.0 * y * z, kSH3[5] * (xx - yy)};
    out[15] = {kSH3[6] * (3.0 * xx - 3.0 * yy), kSH3[6] * -6.0 * x * y, 0};
}

Vec3 eval_sh_color(const double *coeffs, int degree, const Vec3 &view_dir) {
    double basis[16];
    sh_basis(degree, view_dir, basis);
    const int k = (degree + 1) * (degree + 1);
    Vec3 c{0.5, 0.5, 0.5};
    for (int i = 0; i < k; ++i) {
        c.x += coeffs[i * 3 + 0] * basis[i];
        c.y += coeffs[i * 3 + 1] * basis[i];
        c.z += coeffs[i * 3 + 2] * basis[i];
    }
    return {clamp01(c.x), clamp01(c.y), clamp01(c.z)};
}

}  // namespace pgs
