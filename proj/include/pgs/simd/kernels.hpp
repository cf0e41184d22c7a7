#pragma once

#include <cstddef>

#include "pgs/core/vec.hpp"

namespace pgs::simd {

// Data-parallel inner loops of the pipeline. Every kernel has a scalar
// reference and an AVX2 variant selected at runtime; the two are defined to
// produce bit-identical results (fixed association order, no FMA, only
// correctly rounded ops), and the test suite holds them to that.
enum class Level { scalar, avx2 };

bool avx2_supported();

// Resolution order: force_level() > PGS_SIMD env (scalar|avx2|auto) > auto.
Level active_level();
void force_level(Level level);
void reset_level();  // back to env/auto
const char *level_name(Level level);

// sum over i of |a[i] - b[i]|, accumulated in 4 lanes striped by index
// (lane j takes i % 4 == j), lanes combined as (l0+l1)+(l2+l3).
double abs_diff_sum(const double *a, const double *b, size_t n);

// sum over i of (a[i] - b[i])^2, same accumulation scheme.
double sq_diff_sum(const double *a, const double *b, size_t n);

// Valid 11-tap correlation: dst[i] = sum_k src[i+k]*taps[k], i in [0, n-11].
// dst must hold n-10 values; requires n >= 11.
void conv11_valid(const double *src, size_t n, const double *taps, double *dst);

// out[i] = -0.5*a*dx^2 - b*dx*dy - 0.5*c*dy^2 with dx = dx0 + i, i.e. the
// exponent of a 2D Gaussian with conic (a, b, c) along one pixel row.
void gaussian_power_row(double a, double b, double c, double dx0, double dy, size_t n,
                        double *out);

// out[i] = dot(normalize(cam - p_i), v_i) for unit view directions v_i;
// positions and directions come in as separate x/y/z arrays.
void aligned_dot(const Vec3 &cam, const double *px, const double *py, const double *pz,
                 const double *vx, const double *vy, const double *vz, size_t n, double *out);

}  // namespace pgs::simd
