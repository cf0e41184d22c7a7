#pragma once

#include <vector>

#include "pgs/camera/camera.hpp"
#include "pgs/core/vec.hpp"

namespace pgs {

// Struct-of-arrays splat model. SH coefficients are stored per splat as
// (degree+1)^2 RGB triplets in basis order, so sh.size() = n * coeffs * 3.
struct GaussianModel {
    int sh_degree = 3;
    bool frozen_positions = false;

    std::vector<Vec3> means;
    std::vector<Vec3> log_scales;
    std::vector<Quat> rotations;
    std::vector<double> opacity_logits;
    std::vector<double> sh;

    size_t size() const { return means.size(); }
    int coeff_count() const { return (sh_degree + 1) * (sh_degree + 1); }

    double *sh_ptr(size_t splat) { return &sh[splat * coeff_count() * 3]; }
    const double *sh_ptr(size_t splat) const { return &sh[splat * coeff_count() * 3]; }

    double opacity(size_t splat) const { return sigmoid(opacity_logits[splat]); }

    void resize(size_t n) {
        means.resize(n);
        log_scales.resize(n);
        rotations.resize(n);
        opacity_logits.resize(n);
        sh.resize(n * coeff_count() * 3);
    }

    // Throws std::invalid_argument when array sizes disagree or sh_degree is
    // outside {0..3}.
    void validate() const;
};

// Sigma = R(q) diag(exp(2*log_scale)) R(q)^T; the quaternion is renormalized
// internally.
Mat3 covariance_3d(const Vec3 &log_scale, const Quat &rotation);

// EWA projection of a world covariance to pixel space:
// J W cov3 W^T J^T + blur*I with W the world->camera rotation. Throws when
// the mean has non-positive depth.
inline constexpr double kCovBlur = 0.3;
Mat2 project_covariance_2d(const Mat3 &cov3, const Vec3 &mean, const CameraExtrinsics &extr,
                           const CameraIntrinsics &intr);

// Real SH basis values for all (degree+1)^2 functions at a unit direction.
void sh_basis(int degree, const Vec3 &dir, double *out);

// d(basis_k)/d(dir), treating dir as a free 3-vector (the normalization
// chain is the caller's business).
void sh_basis_grad(int degree, const Vec3 &dir, Vec3 *out);

// channel = clamp(0.5 + sum_k coeffs[k][channel] * Y_k(dir), 0, 1).
// coeffs points at (degree+1)^2 RGB triplets.
Vec3 eval_sh_color(const double *coeffs, int degree, const Vec3 &view_dir);

}  // namespace pgs
