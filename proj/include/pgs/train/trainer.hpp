#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "pgs/camera/camera.hpp"
#include "pgs/core/image.hpp"
#include "pgs/core/rng.hpp"
#include "pgs/gs/model.hpp"
#include "pgs/plenoptic/cloud.hpp"

namespace pgs {

struct TrainConfig {
    int iterations = 500;

    // Per-group Adam learning rates. A rate of exactly 0 leaves that group
    // bit-untouched; frozen_positions on the model does the same for means.
    double lr_position = 1.6e-4;
    double lr_scale = 5e-3;
    double lr_rotation = 1e-3;
    double lr_opacity = 5e-2;
    double lr_sh = 2.5e-3;

    double loss_lambda = 0.2;  // D-SSIM weight; 0 = pure L1

    bool densify = false;
    int densify_interval = 100;
    double densify_grad_threshold = 2e-4;   // mean world-space ||dL/dmean||
    double prune_opacity_threshold = 5e-3;  // post-sigmoid
    double split_scale_threshold = 0.05;    // world units, max axis

    uint64_t seed = 0;
    int sh_degree = 3;

    void validate() const;  // throws std::invalid_argument
};

// Flat Adam moment buffers, one pair per parameter group, laid out exactly
// like the model arrays (means/scales 3 per splat, rotations 4, opacity 1,
// sh coeff_count*3).
struct OptimizerState {
    std::vector<double> m_means, v_means;
    std::vector<double> m_scales, v_scales;
    std::vector<double> m_rotations, v_rotations;
    std::vector<double> m_opacity, v_opacity;
    std::vector<double> m_sh, v_sh;
    int64_t step = 0;

    void init_for(const GaussianModel &model);  // zero-filled, step reset
};

struct ParamGrads {
    std::vector<Vec3> means;
    std::vector<Vec3> log_scales;
    std::vector<std::array<double, 4>> rotations;  // w,x,y,z order
    std::vector<double> opacity_logits;
    std::vector<double> sh;

    void resize_like(const GaussianModel &model);  // zero-filled
};

struct InitStrategy {
    enum class Kind { custom_from_geometry, default_from_colmap, random_sparse };
    Kind kind = Kind::custom_from_geometry;

    // custom_from_geometry
    std::vector<Vec3> points;
    std::vector<Vec3> colors;  // per-point mean-over-views RGB
    bool freeze_positions = true;

    // default_from_colmap
    std::string model_dir;

    // random_sparse
    size_t random_count = 0;
    Vec3 box_min{-1, -1, -1}, box_max{1, 1, 1};
    uint64_t seed = 0;

    static InitStrategy custom(std::vector<Vec3> points, std::vector<Vec3> colors,
                               bool freeze_positions);
    // Mean view color per point; keep_fraction < 1 takes a seeded uniform
    // subset (at least one point).
    static InitStrategy custom_from_cloud(const PlenopticPointCloud &cloud, bool freeze_positions,
                                          double keep_fraction = 1.0, uint64_t seed = 0);
    static InitStrategy from_colmap(std::string model_dir);
    static InitStrategy random_sparse(size_t n, const Vec3 &box_min, const Vec3 &box_max,
                                      uint64_t seed);
};

// One splat per point: mean = point, f_dc = (color-0.5)/Y0 so degree-0
// evaluation returns the point color, isotropic scale = log(mean distance to
// the 3 nearest neighbors) (log(1) for a single point), identity rotation,
// opacity 0.1. Throws std::invalid_argument on an empty set.
GaussianModel init_from_points(const std::vector<Vec3> &points, const std::vector<Vec3> &colors,
                               const TrainConfig &cfg, bool freeze_positions);

// Strategy dispatch; colmap init loads points3D.txt, random init draws
// positions uniformly in the box with mid-gray color.
GaussianModel initialize(const InitStrategy &init, const TrainConfig &cfg);

// Everything the backward pass needs from a forward render. Contributions
// are stored per pixel in front-to-back depth order (CSR layout).
struct RenderCache {
    struct SplatData {
        uint32_t splat = 0;  // model index
        Vec2 proj;           // projected mean, pixels
        Vec3 cam_point;      // camera-space mean
        double depth = 0.0;
        double conic_a = 0.0, conic_b = 0.0, conic_c = 0.0;  // inverse 2D covariance
        Mat3 cov3;
        double opacity = 0.0;
        Vec3 color;         // SH-evaluated, clamped
        Vec3 view_dir;      // unit(mean - camera center)
        double dir_len = 0.0;
        std::array<bool, 3> color_clamped{};
    };
    struct Contribution {
        uint32_t entry = 0;  // index into splats
        double alpha = 0.0;
    };

    std::vector<SplatData> splats;       // depth-ascending, culled set only
    std::vector<uint32_t> pixel_begin;   // size w*h+1, offsets into contribs
    std::vector<Contribution> contribs;  // grouped by pixel, front-to-back
    std::vector<double> t_final;         // per-pixel residual transmittance

    CameraIntrinsics intr;
    CameraExtrinsics extr;
    Vec3 cam_center;
    Vec3 background;
    size_t model_size = 0;  // staleness guard for backward_params
    int sh_degree = 0;
};

// Depth-sorted alpha compositing of the whole model over `background`.
// alpha = opacity * exp(-0.5 d^T conic d), clamped to 0.999 and dropped
// below 1/255; splats are culled against a 3-sigma screen rectangle.
Image forward_render(const GaussianModel &model, const CameraIntrinsics &intr,
                     const CameraExtrinsics &extr, const Vec3 &background, RenderCache &cache);

// L = (1-lambda)*mean|r-t| + lambda*(1-SSIM); grad receives dL/d(rendered).
// SSIM (and its 11x11 minimum size requirement) only enters for lambda > 0.
double compute_loss(const Image &rendered, const Image &target, double loss_lambda, Image &grad);

// Analytic dL/d(every splat parameter) given dL/d(pixel). The cache must
// come from a forward_render of this exact model state.
ParamGrads backward_params(const GaussianModel &model, const RenderCache &cache,
                           const Image &grad_image);

// One bias-corrected Adam step (beta1 0.9, beta2 0.999, eps 1e-15). Groups
// with lr 0 (and means when frozen) are skipped outright; quaternions are
// renormalized only when the rotation group moves.
void adam_step(GaussianModel &model, const ParamGrads &grads, OptimizerState &state,
               const TrainConfig &cfg);

// Positional-gradient accumulators driving densification, reset after each
// densify_and_prune call.
struct DensifyStats {
    std::vector<double> grad_norm_sum;  // sum of ||dL/dmean|| per splat
    std::vector<uint32_t> seen;         // iterations the splat was rendered

    void resize(size_t n);
    void accumulate(const ParamGrads &grads, const RenderCache &cache);
};

// Clone (small) or split (large, scales / 1.6) splats whose mean positional
// gradient exceeds the threshold, then prune by opacity. No-op when
// cfg.densify is false. Split offsets are sampled from the splat's own
// Gaussian via `rng`; frozen models keep children at the parent center.
void densify_and_prune(GaussianModel &model, DensifyStats &stats, OptimizerState &state,
                       const TrainConfig &cfg, Rng &rng);

struct TrainView {
    Camera camera;
    Image image;
};

struct TrainData {
    std::vector<TrainView> views;
    Vec3 background;
};

// Loads manifest.json + PNGs + the COLMAP model written by render_dataset.
TrainData load_train_data(const std::string &dataset_dir);

struct LossRow {
    int iteration = 0;
    int view_id = 0;
    double loss = 0.0;
};

struct TrainResult {
    GaussianModel model;
    std::vector<LossRow> log;
};

// Full optimization loop: seeded epoch shuffle over views, forward / loss /
// backward / adam per iteration, densify_and_prune every densify_interval
// iterations when enabled. Deterministic for a fixed (inputs, cfg, seed).
TrainResult train(const InitStrategy &init, const TrainData &data, const TrainConfig &cfg);

// Same loop starting from an already-built model (the staged CLI path);
// cfg.sh_degree must match the model.
TrainResult train(GaussianModel init_model, const TrainData &data, const TrainConfig &cfg);

// CSV with header iteration,view_id,loss.
void write_loss_csv(const std::string &path, const std::vector<LossRow> &log);

}  // namespace pgs
