#include "pgs/simd/kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <stdexcept>

namespace pgs::simd {

namespace scalar {

double abs_diff_sum(const double *a, const double *b, size_t n) {
    double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
    const size_t n4 = n & ~size_t(3);
    for (size_t i = 0; i < n4; i += 4) {
        acc0 += std::fabs(a[i + 0] - b[i + 0]);
        acc1 += std::fabs(a[i + 1] - b[i + 1]);
        acc2 += std::fabs(a[i + 2] - b[i + 2]);
        acc3 += std::fabs(a[i + 3] - b[i + 3]);
    }
    double total = (acc0 + acc1) + (acc2 + acc3);
    for (size_t i = n4; i < n; ++i) total += std::fabs(a[i] - b[i]);
    return total;
}

double sq_diff_sum(const double *a, const double *b, size_t n) {
    double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
    const size_t n4 = n & ~size_t(3);
    for (size_t i = 0; i < n4; i += 4) {
        const double d0 = a[i + 0] - b[i + 0];
        const double d1 = a[i + 1] - b[i + 1];
        const double d2 = a[i + 2] - b[i + 2];
        const double d3 = a[i + 3] - b[i + 3];
        acc0 += d0 * d0;
        acc1 += d1 * d1;
        acc2 += d2 * d2;
        acc3 += d3 * d3;
    }
    double total = (acc0 + acc1) + (acc2 + acc3);
    for (size_t i = n4; i < n; ++i) {
        const double d = a[i] - b[i];
        total += d * d;
    }
    return total;
}

void conv11_valid(const double *src, size_t n, const double *taps, double *dst) {
    const size_t out_n = n - 10;
    for (size_t i = 0; i < out_n; ++i) {
        double acc = src[i] * taps[0];
        for (int k = 1; k < 11; ++k) acc += src[i + k] * taps[k];
        dst[i] = acc;
    }
}

void gaussian_power_row(double a, double b, double c, double dx0, double dy, size_t n,
                        double *out) {
    const double cterm = -0.5 * (c * (dy * dy));
    const double bdy = b * dy;
    for (size_t i = 0; i < n; ++i) {
        const double dx = dx0 + static_cast<double>(i);
        out[i] = (-0.5 * (a * (dx * dx)) - bdy * dx) + cterm;
    }
}

void aligned_dot(const Vec3 &cam, const double *px, const double *py, const double *pz,
                 const double *vx, const double *vy, const double *vz, size_t n, double *out) {
    for (size_t i = 0; i < n; ++i) {
        const double ux = cam.x - px[i];
        const double uy = cam.y - py[i];
        const double uz = cam.z - pz[i];
        const double nn = (ux * ux + uy * uy) + uz * uz;
        const double num = (ux * vx[i] + uy * vy[i]) + uz * vz[i];
        out[i] = num / std::sqrt(nn);
    }
}

}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
double abs_diff_sum(const double *a, const double *b, size_t n);
double sq_diff_sum(const double *a, const double *b, size_t n);
void conv11_valid(const double *src, size_t n, const double *taps, double *dst);
void gaussian_power_row(double a, double b, double c, double dx0, double dy, size_t n,
                        double *out);
void aligned_dot(const Vec3 &cam, const double *px, const double *py, const double *pz,
                 const double *vx, const double *vy, const double *vz, size_t n, double *out);
}  // namespace avx2
#endif

bool avx2_supported() {
#if defined(__x86_64__) || defined(_M_X64)
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

namespace {

Level env_level() {
    const char *e = std::getenv("PGS_SIMD");
    if (e != nullptr) {
        if (std::strcmp(e, "scalar") == 0) return Level::scalar;
        if (std::strcmp(e, "avx2") == 0) {
            if (!avx2_supported()) throw std::runtime_error("PGS_SIMD=avx2 but CPU lacks AVX2");
            return Level::avx2;
        }
        if (std::strcmp(e, "auto") != 0)
            throw std::runtime_error(std::string("unknown PGS_SIMD value: ") + e);
    }
    return avx2_supported() ? Level::avx2 : Level::scalar;
}

Level g_level = Level::scalar;
bool g_resolved = false;
bool g_forced = false;

Level level() {
    if (!g_resolved) {
        g_level = env_level();
        g_resolved = true;
    }
    return g_level;
}

}  // namespace

Level active_level() { return level(); }

void force_level(Level lv) {
    if (lv == Level::avx2 && !avx2_supported())
        throw std::runtime_error("cannot force AVX2: unsupported CPU");
    g_level = lv;
    g_resolved = true;
    g_forced = true;
}

void reset_level() {
    g_resolved = false;
    g_forced = false;
}

const char *level_name(Level lv) { return lv == Level::avx2 ? "avx2" : "scalar"; }

double abs_diff_sum(const double *a, const double *b, size_t n) {
#if defined(__x86_64__) || defined(_M_X64)
    if (level() == Level::avx2) return avx2::abs_diff_sum(a, b, n);
#endif
    return scalar::abs_diff_sum(a, b, n);
}

double sq_diff_sum(const double *a, const double *b, size_t n) {
#if defined(__x86_64__) || defined(_M_X64)
    if (level() == Level::avx2) return avx2::sq_diff_sum(a, b, n);
#endif
    return scalar::sq_diff_sum(a, b, n);
}

void conv11_valid(const double *src, size_t n, const double *taps, double *dst) {
#if defined(__x86_64__) || defined(_M_X64)
    if (level() == Level::avx2) {
        avx2::conv11_valid(src, n, taps, dst);
        return;
    }
#endif
    scalar::conv11_valid(src, n, taps, dst);
}

void gaussian_power_row(double a, double b, double c, double dx0, double dy, size_t n,
                        double *out) {
#if defined(__x86_64__) || defined(_M_X64)
    if (level() == Level::avx2) {
        avx2::gaussian_power_row(a, b, c, dx0, dy, n, out);
        return;
    }
#endif
    scalar::gaussian_power_row(a, b, c, dx0, dy, n, out);
}

void aligned_dot(const Vec3 &cam, const double *px, const double *py, const double *pz,
                 const double *vx, const double *vy, const double *vz, size_t n, double *out) {
#if defined(__x86_64__) || defined(_M_X64)
    if (level() == Level::avx2) {
        avx2::aligned_dot(cam, px, py, pz, vx, vy, vz, n, out);
        return;
    }
#endif
    scalar::aligned_dot(cam, px, py, pz, vx, vy, vz, n, out);
}

}  // namespace pgs::simd
