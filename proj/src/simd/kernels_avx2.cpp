// AVX2 variants. This TU is compiled with -mavx2 and without FMA so the op
// sequence per lane matches the scalar reference exactly; add/sub/mul/div/sqrt
// are all correctly rounded, which makes the two paths bit-identical.

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>
#include <cstddef>

#include "pgs/core/vec.hpp"

namespace pgs::simd::avx2 {

namespace {

// (l0 + l1) + (l2 + l3), matching the scalar striped-accumulator combine.
inline double combine_lanes(__m256d v) {
    alignas(32) double t[4];
    _mm256_store_pd(t, v);
    return (t[0] + t[1]) + (t[2] + t[3]);
}

inline __m256d abs_pd(__m256d v) {
    const __m256d sign = _mm256_set1_pd(-0.0);
    return _mm256_andnot_pd(sign, v);
}

}  // namespace

double abs_diff_sum(const double *a, const double *b, size_t n) {
    __m256d acc = _mm256_setzero_pd();
    const size_t n4 = n & ~size_t(3);
    for (size_t i = 0; i < n4; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc = _mm256_add_pd(acc, abs_pd(d));
    }
    double total = combine_lanes(acc);
    for (size_t i = n4; i < n; ++i) total += std::fabs(a[i] - b[i]);
    return total;
}

double sq_diff_sum(const double *a, const double *b, size_t n) {
    __m256d acc = _mm256_setzero_pd();
    const size_t n4 = n & ~size_t(3);
    for (size_t i = 0; i < n4; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
    }
    double total = combine_lanes(acc);
    for (size_t i = n4; i < n; ++i) {
        const double d = a[i] - b[i];
        total += d * d;
    }
    return total;
}

void conv11_valid(const double *src, size_t n, const double *taps, double *dst) {
    const size_t out_n = n - 10;
    const size_t out4 = out_n & ~size_t(3);
    for (size_t i = 0; i < out4; i += 4) {
        __m256d acc = _mm256_mul_pd(_mm256_loadu_pd(src + i), _mm256_set1_pd(taps[0]));
        for (int k = 1; k < 11; ++k) {
            const __m256d s = _mm256_loadu_pd(src + i + k);
            acc = _mm256_add_pd(acc, _mm256_mul_pd(s, _mm256_set1_pd(taps[k])));
        }
        _mm256_storeu_pd(dst + i, acc);
    }
    for (size_t i = out4; i < out_n; ++i) {
        double acc = src[i] * taps[0];
        for (int k = 1; k < 11; ++k) acc += src[i + k] * taps[k];
        dst[i] = acc;
    }
}

void gaussian_power_row(double a, double b, double c, double dx0, double dy, size_t n,
                        double *out) {
    const double cterm = -0.5 * (c * (dy * dy));
    const double bdy = b * dy;
    const __m256d vlane = _mm256_set_pd(3.0, 2.0, 1.0, 0.0);
    const __m256d vdx0 = _mm256_set1_pd(dx0);
    const __m256d va = _mm256_set1_pd(a);
    const __m256d vbdy = _mm256_set1_pd(bdy);
    const __m256d vc = _mm256_set1_pd(cterm);
    const __m256d vhalf = _mm256_set1_pd(-0.5);
    const size_t n4 = n & ~size_t(3);
    for (size_t i = 0; i < n4; i += 4) {
        // dx = dx0 + (i + lane); (i + lane) is exact, so one rounding as in scalar
        const __m256d vi = _mm256_add_pd(_mm256_set1_pd(static_cast<double>(i)), vlane);
        const __m256d dx = _mm256_add_pd(vdx0, vi);
        const __m256d adx2 = _mm256_mul_pd(va, _mm256_mul_pd(dx, dx));
        const __m256d t = _mm256_sub_pd(_mm256_mul_pd(vhalf, adx2), _mm256_mul_pd(vbdy, dx));
        _mm256_storeu_pd(out + i, _mm256_add_pd(t, vc));
    }
    for (size_t i = n4; i < n; ++i) {
        const double dx = dx0 + static_cast<double>(i);
        out[i] = (-0.5 * (a * (dx * dx)) - bdy * dx) + cterm;
    }
}

void aligned_dot(const Vec3 &cam, const double *px, const double *py, const double *pz,
                 const double *vx, const double *vy, const double *vz, size_t n, double *out) {
    const __m256d cx = _mm256_set1_pd(cam.x);
    const __m256d cy = _mm256_set1_pd(cam.y);
    const __m256d cz = _mm256_set1_pd(cam.z);
    const size_t n4 = n & ~size_t(3);
    for (size_t i = 0; i < n4; i += 4) {
        const __m256d ux = _mm256_sub_pd(cx, _mm256_loadu_pd(px + i));
        const __m256d uy = _mm256_sub_pd(cy, _mm256_loadu_pd(py + i));
        const __m256d uz = _mm256_sub_pd(cz, _mm256_loadu_pd(pz + i));
        const __m256d nn = _mm256_add_pd(
            _mm256_add_pd(_mm256_mul_pd(ux, ux), _mm256_mul_pd(uy, uy)), _mm256_mul_pd(uz, uz));
        const __m256d num = _mm256_add_pd(
            _mm256_add_pd(_mm256_mul_pd(ux, _mm256_loadu_pd(vx + i)),
                          _mm256_mul_pd(uy, _mm256_loadu_pd(vy + i))),
            _mm256_mul_pd(uz, _mm256_loadu_pd(vz + i)));
        _mm256_storeu_pd(out + i, _mm256_div_pd(num, _mm256_sqrt_pd(nn)));
    }
    for (size_t i = n4; i < n; ++i) {
        const double ux = cam.x - px[i];
        const double uy = cam.y - py[i];
        const double uz = cam.z - pz[i];
        const double nn = (ux * ux + uy * uy) + uz * uz;
        const double num = (ux * vx[i] + uy * vy[i]) + uz * vz[i];
        out[i] = num / std::sqrt(nn);
    }
}

}  // namespace pgs::simd::avx2

#endif  // x86_64
