#include "pgs/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <stdexcept>

#include "pgs/camera/colmap.hpp"
#include "pgs/core/knn.hpp"
#include "pgs/metrics/metrics.hpp"
#include "pgs/render/render.hpp"
#include "pgs/simd/kernels.hpp"

namespace pgs {

namespace {

constexpr double kY0 = 0.28209479177387814;
constexpr double kAlphaFloor = 1.0 / 255.0;
constexpr double kAlphaCeil = 0.999;

[[noreturn]] void fail(const std::string &msg) { throw std::runtime_error("train: " + msg); }

}  // namespace

void TrainConfig::validate() const {
    if (iterations < 0) throw std::invalid_argument("train: iterations must be >= 0");
    if (lr_position < 0 || lr_scale < 0 || lr_rotation < 0 || lr_opacity < 0 || lr_sh < 0)
        throw std::invalid_argument("train: learning rates must be >= 0");
    if (loss_lambda < 0.0 || loss_lambda > 1.0)
        throw std::invalid_argument("train: loss_lambda must be in [0,1]");
    if (densify_interval < 1) throw std::invalid_argument("train: densify_interval must be >= 1");
    if (densify_grad_threshold < 0 || prune_opacity_threshold < 0 || split_scale_threshold < 0)
        throw std::invalid_argument("train: densify thresholds must be >= 0");
    if (sh_degree < 0 || sh_degree > 3)
        throw std::invalid_argument("train: sh_degree must be in 0..3");
}

void OptimizerState::init_for(const GaussianModel &model) {
    const size_t n = model.size();
    m_means.assign(n * 3, 0.0);
    v_means.assign(n * 3, 0.0);
    m_scales.assign(n * 3, 0.0);
    v_scales.assign(n * 3, 0.0);
    m_rotations.assign(n * 4, 0.0);
    v_rotations.assign(n * 4, 0.0);
    m_opacity.assign(n, 0.0);
    v_opacity.assign(n, 0.0);
    m_sh.assign(model.sh.size(), 0.0);
    v_sh.assign(model.sh.size(), 0.0);
    step = 0;
}

void ParamGrads::resize_like(const GaussianModel &model) {
    const size_t n = model.size();
    means.assign(n, Vec3{});
    log_scales.assign(n, Vec3{});
    rotations.assign(n, {0.0, 0.0, 0.0, 0.0});
    opacity_logits.assign(n, 0.0);
    sh.assign(model.sh.size(), 0.0);
}

InitStrategy InitStrategy::custom(std::vector<Vec3> points, std::vector<Vec3> colors,
                                  bool freeze_positions) {
    InitStrategy s;
    s.kind = Kind::custom_from_geometry;
    s.points = std::move(points);
    s.colors = std::move(colors);
    s.freeze_positions = freeze_positions;
    return s;
}

InitStrategy InitStrategy::custom_from_cloud(const PlenopticPointCloud &cloud,
                                             bool freeze_positions, double keep_fraction,
                                             uint64_t seed) {
    cloud.validate();
    if (keep_fraction <= 0.0 || keep_fraction > 1.0)
        throw std::invalid_argument("train: keep_fraction must be in (0,1]");
    std::vector<size_t> idx(cloud.size());
    std::iota(idx.begin(), idx.end(), size_t{0});
    if (keep_fraction < 1.0 && cloud.size() > 0) {
        const size_t keep = std::max<size_t>(
            1, static_cast<size_t>(std::llround(keep_fraction * static_cast<double>(cloud.size()))));
        Rng rng(seed);
        idx = rng.sample_indices(cloud.size(), keep);
        std::sort(idx.begin(), idx.end());
    }
    std::vector<Vec3> points, colors;
    points.reserve(idx.size());
    colors.reserve(idx.size());
    for (size_t i : idx) {
        points.push_back(cloud.positions[i]);
        colors.push_back(cloud.mean_color(i));
    }
    return custom(std::move(points), std::move(colors), freeze_positions);
}

InitStrategy InitStrategy::from_colmap(std::string model_dir) {
    InitStrategy s;
    s.kind = Kind::default_from_colmap;
    s.model_dir = std::move(model_dir);
    return s;
}

InitStrategy InitStrategy::random_sparse(size_t n, const Vec3 &box_min, const Vec3 &box_max,
                                         uint64_t seed) {
    InitStrategy s;
    s.kind = Kind::random_sparse;
    s.random_count = n;
    s.box_min = box_min;
    s.box_max = box_max;
    s.seed = seed;
    return s;
}

GaussianModel init_from_points(const std::vector<Vec3> &points, const std::vector<Vec3> &colors,
                               const TrainConfig &cfg, bool freeze_positions) {
    if (points.empty()) throw std::invalid_argument("train: init needs at least one point");
    if (colors.size() != points.size())
        throw std::invalid_argument("train: init point/color counts disagree");
    cfg.validate();

    GaussianModel model;
    model.sh_degree = cfg.sh_degree;
    model.frozen_positions = freeze_positions;
    model.resize(points.size());

    const KdTree tree(points);
    const double opacity_logit = logit(0.1);
    for (size_t i = 0; i < points.size(); ++i) {
        model.means[i] = points[i];
        double mean_dist = 1.0;  // single point: log(1) = 0
        const std::vector<double> sq = tree.knn_sqdist(points[i], 3, static_cast<ptrdiff_t>(i));
        if (!sq.empty()) {
            double sum = 0.0;
            for (double d2 : sq) sum += std::sqrt(d2);
            mean_dist = sum / static_cast<double>(sq.size());
        }
        // Coincident duplicates would give log(0); floor keeps scales finite.
        const double ls = std::log(std::max(mean_dist, 1e-12));
        model.log_scales[i] = {ls, ls, ls};
        model.rotations[i] = Quat::identity();
        model.opacity_logits[i] = opacity_logit;
        double *sh = model.sh_ptr(i);
        sh[0] = (colors[i].x - 0.5) / kY0;
        sh[1] = (colors[i].y - 0.5) / kY0;
        sh[2] = (colors[i].z - 0.5) / kY0;
    }
    return model;
}

GaussianModel initialize(const InitStrategy &init, const TrainConfig &cfg) {
    switch (init.kind) {
        case InitStrategy::Kind::custom_from_geometry:
            return init_from_points(init.points, init.colors, cfg, init.freeze_positions);
        case InitStrategy::Kind::default_from_colmap: {
            const std::vector<colmap::PointEntry> pts = colmap::import_points(init.model_dir);
            std::vector<Vec3> points, colors;
            points.reserve(pts.size());
            colors.reserve(pts.size());
            for (const colmap::PointEntry &p : pts) {
                points.push_back(p.xyz);
                colors.push_back({p.rgb[0] / 255.0, p.rgb[1] / 255.0, p.rgb[2] / 255.0});
            }
            return init_from_points(points, colors, cfg, false);
        }
        case InitStrategy::Kind::random_sparse: {
            Rng rng(init.seed);
            std::vector<Vec3> points(init.random_count);
            for (Vec3 &p : points) {
                p.x = rng.uniform(init.box_min.x, init.box_max.x);
                p.y = rng.uniform(init.box_min.y, init.box_max.y);
                p.z = rng.uniform(init.box_min.z, init.box_max.z);
            }
            const std::vector<Vec3> colors(points.size(), Vec3{0.5, 0.5, 0.5});
            return init_from_points(points, colors, cfg, false);
        }
    }
    throw std::invalid_argument("train: unknown init strategy");
}

Image forward_render(const GaussianModel &model, const CameraIntrinsics &intr,
                     const CameraExtrinsics &extr, const Vec3 &background, RenderCache &cache) {
    intr.validate();
    model.validate();
    const int w = intr.width, h = intr.height;

    cache = RenderCache{};
    cache.intr = intr;
    cache.extr = extr;
    cache.background = background;
    cache.model_size = model.size();
    cache.sh_degree = model.sh_degree;

    const Mat3 rot = extr.rotation_matrix();
    cache.cam_center = -rot.transpose_mul(extr.translation);

    // Project and cull.
    struct Rect {
        int x0, x1, y0, y1;
    };
    std::vector<Rect> rects;
    for (size_t i = 0; i < model.size(); ++i) {
        const Projection proj = project_point(intr, extr, model.means[i]);
        if (proj.behind) continue;

        const Mat3 cov3 = covariance_3d(model.log_scales[i], model.rotations[i]);
        const Mat2 cov2 = project_covariance_2d(cov3, model.means[i], extr, intr);
        const Mat2 conic = cov2.inverse();

        // 3-sigma screen rectangle from the larger covariance eigenvalue.
        const double mid = 0.5 * (cov2.m00 + cov2.m11);
        const double lam = mid + std::sqrt(std::max(0.0, mid * mid - cov2.det()));
        const double radius = 3.0 * std::sqrt(lam);
        const int x0 = std::max(0, static_cast<int>(std::ceil(proj.pixel.x - radius - 0.5)));
        const int x1 = std::min(w - 1, static_cast<int>(std::floor(proj.pixel.x + radius - 0.5)));
        const int y0 = std::max(0, static_cast<int>(std::ceil(proj.pixel.y - radius - 0.5)));
        const int y1 = std::min(h - 1, static_cast<int>(std::floor(proj.pixel.y + radius - 0.5)));
        if (x0 > x1 || y0 > y1) continue;

        RenderCache::SplatData sd;
        sd.splat = static_cast<uint32_t>(i);
        sd.proj = proj.pixel;
        sd.depth = proj.depth;
        sd.cam_point = rot * model.means[i] + extr.translation;
        sd.conic_a = conic.m00;
        sd.conic_b = conic.m01;
        sd.conic_c = conic.m11;
        sd.cov3 = cov3;
        sd.opacity = model.opacity(i);

        const Vec3 u = model.means[i] - cache.cam_center;
        sd.dir_len = u.norm();
        sd.view_dir = u / sd.dir_len;
        double basis[16];
        sh_basis(model.sh_degree, sd.view_dir, basis);
        const double *coeffs = model.sh_ptr(i);
        const int k = model.coeff_count();
        for (int ch = 0; ch < 3; ++ch) {
            double raw = 0.5;
            for (int j = 0; j < k; ++j) raw += coeffs[j * 3 + ch] * basis[j];
            sd.color[ch] = clamp01(raw);
            sd.color_clamped[ch] = raw < 0.0 || raw > 1.0;
        }

        cache.splats.push_back(sd);
        rects.push_back({x0, x1, y0, y1});
    }

    // Depth sort; stable so equal depths keep model order.
    std::vector<uint32_t> order(cache.splats.size());
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) {
        return cache.splats[a].depth < cache.splats[b].depth;
    });
    {
        std::vector<RenderCache::SplatData> sorted_splats(cache.splats.size());
        std::vector<Rect> sorted_rects(rects.size());
        for (size_t i = 0; i < order.size(); ++i) {
            sorted_splats[i] = cache.splats[order[i]];
            sorted_rects[i] = rects[order[i]];
        }
        cache.splats = std::move(sorted_splats);
        rects = std::move(sorted_rects);
    }

    // Rasterize front-to-back into a flat (pixel, entry, alpha) list, then
    // counting-sort by pixel. Emission in depth order keeps each pixel's
    // bucket depth-sorted.
    struct RawContrib {
        uint32_t pixel;
        uint32_t entry;
        double alpha;
    };
    std::vector<RawContrib> raw;
    std::vector<double> powers(static_cast<size_t>(w));
    for (size_t e = 0; e < cache.splats.size(); ++e) {
        const RenderCache::SplatData &sd = cache.splats[e];
        const Rect &rc = rects[e];
        for (int y = rc.y0; y <= rc.y1; ++y) {
            const double dy = (y + 0.5) - sd.proj.y;
            const double dx0 = (rc.x0 + 0.5) - sd.proj.x;
            const size_t len = static_cast<size_t>(rc.x1 - rc.x0 + 1);
            simd::gaussian_power_row(sd.conic_a, sd.conic_b, sd.conic_c, dx0, dy, len,
                                     powers.data());
            for (size_t i = 0; i < len; ++i) {
                double alpha = sd.opacity * std::exp(powers[i]);
                if (alpha < kAlphaFloor) continue;
                if (alpha > kAlphaCeil) alpha = kAlphaCeil;
                raw.push_back({static_cast<uint32_t>(y * w + rc.x0) + static_cast<uint32_t>(i),
                               static_cast<uint32_t>(e), alpha});
            }
        }
    }

    cache.pixel_begin.assign(static_cast<size_t>(w) * h + 1, 0);
    for (const RawContrib &r : raw) ++cache.pixel_begin[r.pixel + 1];
    for (size_t i = 1; i < cache.pixel_begin.size(); ++i)
        cache.pixel_begin[i] += cache.pixel_begin[i - 1];
    cache.contribs.resize(raw.size());
    {
        std::vector<uint32_t> cursor(cache.pixel_begin.begin(), cache.pixel_begin.end() - 1);
        for (const RawContrib &r : raw) cache.contribs[cursor[r.pixel]++] = {r.entry, r.alpha};
    }

    // Composite.
    Image img(w, h);
    cache.t_final.assign(static_cast<size_t>(w) * h, 1.0);
    for (size_t px = 0; px < static_cast<size_t>(w) * h; ++px) {
        double t = 1.0;
        Vec3 color{};
        for (uint32_t c = cache.pixel_begin[px]; c < cache.pixel_begin[px + 1]; ++c) {
            const RenderCache::Contribution &rc = cache.contribs[c];
            color += cache.splats[rc.entry].color * (rc.alpha * t);
            t *= 1.0 - rc.alpha;
        }
        color += background * t;
        cache.t_final[px] = t;
        img.data[px * 3 + 0] = color.x;
        img.data[px * 3 + 1] = color.y;
        img.data[px * 3 + 2] = color.z;
    }
    return img;
}

double compute_loss(const Image &rendered, const Image &target, double loss_lambda, Image &grad) {
    if (rendered.width != target.width || rendered.height != target.height)
        throw std::invalid_argument("train: loss image dimensions disagree");
    if (loss_lambda < 0.0 || loss_lambda > 1.0)
        throw std::invalid_argument("train: loss_lambda must be in [0,1]");

    const size_t n = rendered.data.size();
    const double l1 =
        simd::abs_diff_sum(rendered.data.data(), target.data.data(), n) / static_cast<double>(n);
    double loss = (1.0 - loss_lambda) * l1;

    grad = Image(rendered.width, rendered.height);
    const double gl1 = (1.0 - loss_lambda) / static_cast<double>(n);
    for (size_t i = 0; i < n; ++i) {
        const double d = rendered.data[i] - target.data[i];
        grad.data[i] = d > 0.0 ? gl1 : (d < 0.0 ? -gl1 : 0.0);
    }

    if (loss_lambda > 0.0) {
        Image sgrad;
        const double s = ssim_with_gradient(rendered, target, sgrad);
        loss += loss_lambda * (1.0 - s);
        for (size_t i = 0; i < n; ++i) grad.data[i] -= loss_lambda * sgrad.data[i];
    }
    return loss;
}

namespace {

// d(rotation matrix)/d(unit quaternion component), matching Quat::to_matrix.
void quat_matrix_partials(const Quat &q, Mat3 out[4]) {
    const double w = q.w, x = q.x, y = q.y, z = q.z;
    out[0] = Mat3{{0, -2 * z, 2 * y, 2 * z, 0, -2 * x, -2 * y, 2 * x, 0}};
    out[1] = Mat3{{0, 2 * y, 2 * z, 2 * y, -4 * x, -2 * w, 2 * z, 2 * w, -4 * x}};
    out[2] = Mat3{{-4 * y, 2 * x, 2 * w, 2 * x, 0, 2 * z, -2 * w, 2 * z, -4 * y}};
    out[3] = Mat3{{-4 * z, -2 * w, 2 * x, 2 * w, -4 * z, 2 * y, 2 * x, 2 * y, 0}};
}

}  // namespace

ParamGrads backward_params(const GaussianModel &model, const RenderCache &cache,
                           const Image &grad_image) {
    if (cache.model_size != model.size() || cache.sh_degree != model.sh_degree)
        throw std::logic_error("train: render cache is stale");
    if (grad_image.width != cache.intr.width || grad_image.height != cache.intr.height)
        throw std::invalid_argument("train: gradient image dimensions disagree");

    ParamGrads grads;
    grads.resize_like(model);

    // Per-pixel compositing pass: walk contributions back-to-front, peeling
    // transmittance off t_final, and fold everything into per-splat-entry
    // accumulators in screen space.
    struct EntryAcc {
        double conic_a = 0, conic_b = 0, conic_c = 0;
        double proj_x = 0, proj_y = 0;
        double opacity = 0;
        Vec3 color;
    };
    std::vector<EntryAcc> acc(cache.splats.size());

    const int w = cache.intr.width, h = cache.intr.height;
    for (size_t px = 0; px < static_cast<size_t>(w) * h; ++px) {
        const uint32_t begin = cache.pixel_begin[px], end = cache.pixel_begin[px + 1];
        if (begin == end) continue;
        const Vec3 dldc{grad_image.data[px * 3 + 0], grad_image.data[px * 3 + 1],
                        grad_image.data[px * 3 + 2]};
        const double pcx = static_cast<double>(px % w) + 0.5;
        const double pcy = static_cast<double>(px / w) + 0.5;

        double t_run = cache.t_final[px];
        Vec3 suffix = cache.background * t_run;  // color accumulated behind the current splat
        for (uint32_t c = end; c-- > begin;) {
            const RenderCache::Contribution &rc = cache.contribs[c];
            const RenderCache::SplatData &sd = cache.splats[rc.entry];
            EntryAcc &a = acc[rc.entry];
            const double alpha = rc.alpha;
            const double one_minus = 1.0 - alpha;
            const double t_k = t_run / one_minus;

            a.color += dldc * (alpha * t_k);
            const double dldalpha = dldc.x * (sd.color.x * t_k - suffix.x / one_minus) +
                                    dldc.y * (sd.color.y * t_k - suffix.y / one_minus) +
                                    dldc.z * (sd.color.z * t_k - suffix.z / one_minus);

            suffix += sd.color * (alpha * t_k);
            t_run = t_k;

            if (alpha >= kAlphaCeil) continue;  // clamped: d(alpha)/d(params) = 0
            // alpha = opacity * G, so dL/dpower = dL/dalpha * alpha and
            // dL/dopacity = dL/dalpha * G = dL/dalpha * alpha / opacity.
            a.opacity += dldalpha * (alpha / sd.opacity);
            const double dldpower = dldalpha * alpha;
            const double dx = pcx - sd.proj.x, dy = pcy - sd.proj.y;
            a.conic_a += dldpower * (-0.5 * dx * dx);
            a.conic_b += dldpower * (-dx * dy);
            a.conic_c += dldpower * (-0.5 * dy * dy);
            // power depends on delta = pixel - proj, so d(delta)/d(proj) = -1.
            a.proj_x += dldpower * (sd.conic_a * dx + sd.conic_b * dy);
            a.proj_y += dldpower * (sd.conic_b * dx + sd.conic_c * dy);
        }
    }

    // Per-splat chains from screen space back to the parameters.
    const Mat3 rot = cache.extr.rotation_matrix();
    for (size_t e = 0; e < cache.splats.size(); ++e) {
        const RenderCache::SplatData &sd = cache.splats[e];
        const EntryAcc &a = acc[e];
        const size_t i = sd.splat;

        // SH color and view direction.
        Vec3 dlddir{};
        {
            double basis[16];
            Vec3 dbasis[16];
            sh_basis(model.sh_degree, sd.view_dir, basis);
            sh_basis_grad(model.sh_degree, sd.view_dir, dbasis);
            const double *coeffs = model.sh_ptr(i);
            const int k = model.coeff_count();
            double *gsh = &grads.sh[i * static_cast<size_t>(k) * 3];
            for (int ch = 0; ch < 3; ++ch) {
                const double dc = a.color[ch];
                if (sd.color_clamped[ch] || dc == 0.0) continue;
                for (int j = 0; j < k; ++j) {
                    gsh[j * 3 + ch] += dc * basis[j];
                    dlddir += dbasis[j] * (dc * coeffs[j * 3 + ch]);
                }
            }
        }
        // dir = u/|u|: project out the radial component.
        const Vec3 dmean_dir =
            (dlddir - sd.view_dir * sd.view_dir.dot(dlddir)) / sd.dir_len;

        // Opacity logit.
        grads.opacity_logits[i] += a.opacity * sd.opacity * (1.0 - sd.opacity);

        // conic = cov2^{-1}: dL/dP = -Q dLdQ Q with both sides symmetric.
        const Mat2 q{sd.conic_a, sd.conic_b, sd.conic_b, sd.conic_c};
        const Mat2 dldq{a.conic_a, 0.5 * a.conic_b, 0.5 * a.conic_b, a.conic_c};
        const Mat2 dldp = (q * dldq * q) * -1.0;

        // cov2 = M cov3 M^T + blur I with M = J rot.
        double jac[6];
        projection_jacobian(cache.intr, sd.cam_point, jac);
        double m[6];
        for (int r = 0; r < 2; ++r)
            for (int col = 0; col < 3; ++col)
                m[r * 3 + col] = jac[r * 3 + 0] * rot(0, col) + jac[r * 3 + 1] * rot(1, col) +
                                 jac[r * 3 + 2] * rot(2, col);

        Mat3 dldcov3;
        for (int r = 0; r < 3; ++r)
            for (int col = 0; col < 3; ++col)
                dldcov3(r, col) = m[r] * (dldp.m00 * m[col] + dldp.m01 * m[3 + col]) +
                                  m[3 + r] * (dldp.m10 * m[col] + dldp.m11 * m[3 + col]);

        // dL/dM = 2 dLdP M cov3.
        double mc[6];
        for (int r = 0; r < 2; ++r)
            for (int col = 0; col < 3; ++col)
                mc[r * 3 + col] = m[r * 3 + 0] * sd.cov3(0, col) + m[r * 3 + 1] * sd.cov3(1, col) +
                                  m[r * 3 + 2] * sd.cov3(2, col);
        double dldm[6];
        for (int col = 0; col < 3; ++col) {
            dldm[col] = 2.0 * (dldp.m00 * mc[col] + dldp.m01 * mc[3 + col]);
            dldm[3 + col] = 2.0 * (dldp.m10 * mc[col] + dldp.m11 * mc[3 + col]);
        }
        // dL/dJ = dLdM rot^T.
        double dldj[6];
        for (int r = 0; r < 2; ++r)
            for (int col = 0; col < 3; ++col)
                dldj[r * 3 + col] = dldm[r * 3 + 0] * rot(col, 0) + dldm[r * 3 + 1] * rot(col, 1) +
                                    dldm[r * 3 + 2] * rot(col, 2);

        // J's own dependence on the camera-space point.
        const double tx = sd.cam_point.x, ty = sd.cam_point.y, tz = sd.cam_point.z;
        const double inv_z2 = 1.0 / (tz * tz);
        const double inv_z3 = inv_z2 / tz;
        const double fx = cache.intr.fx, fy = cache.intr.fy, skew = cache.intr.skew;
        Vec3 dldt{
            dldj[2] * (-fx * inv_z2),
            dldj[2] * (-skew * inv_z2) + dldj[5] * (-fy * inv_z2),
            dldj[0] * (-fx * inv_z2) + dldj[1] * (-skew * inv_z2) +
                dldj[2] * (2.0 * (fx * tx + skew * ty) * inv_z3) + dldj[4] * (-fy * inv_z2) +
                dldj[5] * (2.0 * fy * ty * inv_z3)};

        // Projected-mean chain: d(proj)/d(t) is exactly J.
        dldt.x += jac[0] * a.proj_x + jac[3] * a.proj_y;
        dldt.y += jac[1] * a.proj_x + jac[4] * a.proj_y;
        dldt.z += jac[2] * a.proj_x + jac[5] * a.proj_y;

        // t = rot mean + translation.
        grads.means[i] += rot.transpose_mul(dldt) + dmean_dir;

        // cov3 = R D R^T with D = diag(exp(2 log_scale)).
        const Quat qn = model.rotations[i].normalized();
        const Mat3 r3 = qn.to_matrix();
        const Vec3 ls = model.log_scales[i];
        const Vec3 s2{std::exp(2.0 * ls.x), std::exp(2.0 * ls.y), std::exp(2.0 * ls.z)};
        for (int axis = 0; axis < 3; ++axis) {
            const Vec3 rcol = r3.col(axis);
            const double dldd = rcol.dot(dldcov3 * rcol);
            grads.log_scales[i][axis] += dldd * 2.0 * s2[axis];
        }
        // dL/dR = 2 dLdcov3 R D.
        Mat3 dldr = dldcov3 * r3;
        for (int r = 0; r < 3; ++r)
            for (int col = 0; col < 3; ++col) dldr(r, col) *= 2.0 * s2[col];

        Mat3 partials[4];
        quat_matrix_partials(qn, partials);
        double dldqn[4];
        for (int comp = 0; comp < 4; ++comp) {
            double sum = 0.0;
            for (int j = 0; j < 9; ++j) sum += dldr.m[j] * partials[comp].m[j];
            dldqn[comp] = sum;
        }
        // Chain through the normalization q -> q/|q|.
        const double qnorm = model.rotations[i].norm();
        const double qhat[4] = {qn.w, qn.x, qn.y, qn.z};
        const double radial =
            qhat[0] * dldqn[0] + qhat[1] * dldqn[1] + qhat[2] * dldqn[2] + qhat[3] * dldqn[3];
        for (int comp = 0; comp < 4; ++comp)
            grads.rotations[i][comp] += (dldqn[comp] - qhat[comp] * radial) / qnorm;
    }
    return grads;
}

namespace {

void adam_group(double *param, const double *grad, double *m, double *v, size_t count, double lr,
                double bc1, double bc2) {
    constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-15;
    for (size_t i = 0; i < count; ++i) {
        m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * grad[i];
        v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * grad[i] * grad[i];
        param[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + kEps);
    }
}

}  // namespace

void adam_step(GaussianModel &model, const ParamGrads &grads, OptimizerState &state,
               const TrainConfig &cfg) {
    const size_t n = model.size();
    if (grads.means.size() != n || grads.sh.size() != model.sh.size() ||
        state.m_means.size() != n * 3 || state.m_sh.size() != model.sh.size())
        throw std::invalid_argument("train: adam shapes disagree with the model");
    if (n == 0) return;

    state.step += 1;
    const double bc1 = 1.0 - std::pow(0.9, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(0.999, static_cast<double>(state.step));

    if (cfg.lr_position > 0.0 && !model.frozen_positions)
        adam_group(&model.means[0].x, &grads.means[0].x, state.m_means.data(),
                   state.v_means.data(), n * 3, cfg.lr_position, bc1, bc2);
    if (cfg.lr_scale > 0.0)
        adam_group(&model.log_scales[0].x, &grads.log_scales[0].x, state.m_scales.data(),
                   state.v_scales.data(), n * 3, cfg.lr_scale, bc1, bc2);
    if (cfg.lr_rotation > 0.0) {
        // Renormalize only quats the step actually moved, so a zero-gradient
        // step leaves the group bit-identical.
        const std::vector<Quat> before = model.rotations;
        adam_group(&model.rotations[0].w, grads.rotations[0].data(), state.m_rotations.data(),
                   state.v_rotations.data(), n * 4, cfg.lr_rotation, bc1, bc2);
        for (size_t i = 0; i < n; ++i)
            if (std::memcmp(&model.rotations[i], &before[i], sizeof(Quat)) != 0)
                model.rotations[i] = model.rotations[i].normalized();
    }
    if (cfg.lr_opacity > 0.0)
        adam_group(model.opacity_logits.data(), grads.opacity_logits.data(),
                   state.m_opacity.data(), state.v_opacity.data(), n, cfg.lr_opacity, bc1, bc2);
    if (cfg.lr_sh > 0.0)
        adam_group(model.sh.data(), grads.sh.data(), state.m_sh.data(), state.v_sh.data(),
                   model.sh.size(), cfg.lr_sh, bc1, bc2);
}

void DensifyStats::resize(size_t n) {
    grad_norm_sum.assign(n, 0.0);
    seen.assign(n, 0);
}

void DensifyStats::accumulate(const ParamGrads &grads, const RenderCache &cache) {
    for (const RenderCache::SplatData &sd : cache.splats) {
        grad_norm_sum[sd.splat] += grads.means[sd.splat].norm();
        seen[sd.splat] += 1;
    }
}

void densify_and_prune(GaussianModel &model, DensifyStats &stats, OptimizerState &state,
                       const TrainConfig &cfg, Rng &rng) {
    if (!cfg.densify) return;
    const size_t n = model.size();
    if (stats.grad_norm_sum.size() != n) throw std::logic_error("train: densify stats are stale");

    const int k3 = model.coeff_count() * 3;
    GaussianModel out;
    out.sh_degree = model.sh_degree;
    out.frozen_positions = model.frozen_positions;
    OptimizerState ns;

    auto emit = [&](size_t src, const Vec3 &mean, const Vec3 &log_scale, bool keep_moments) {
        out.means.push_back(mean);
        out.log_scales.push_back(log_scale);
        out.rotations.push_back(model.rotations[src]);
        out.opacity_logits.push_back(model.opacity_logits[src]);
        const double *sh = model.sh_ptr(src);
        out.sh.insert(out.sh.end(), sh, sh + k3);
        auto copy_slice = [&](std::vector<double> &dst, const std::vector<double> &sm, size_t width) {
            if (keep_moments)
                dst.insert(dst.end(), sm.begin() + src * width, sm.begin() + (src + 1) * width);
            else
                dst.insert(dst.end(), width, 0.0);
        };
        copy_slice(ns.m_means, state.m_means, 3);
        copy_slice(ns.v_means, state.v_means, 3);
        copy_slice(ns.m_scales, state.m_scales, 3);
        copy_slice(ns.v_scales, state.v_scales, 3);
        copy_slice(ns.m_rotations, state.m_rotations, 4);
        copy_slice(ns.v_rotations, state.v_rotations, 4);
        copy_slice(ns.m_opacity, state.m_opacity, 1);
        copy_slice(ns.v_opacity, state.v_opacity, 1);
        copy_slice(ns.m_sh, state.m_sh, static_cast<size_t>(k3));
        copy_slice(ns.v_sh, state.v_sh, static_cast<size_t>(k3));
    };

    std::vector<size_t> clones;
    const double log_split = std::log(1.6);
    for (size_t i = 0; i < n; ++i) {
        if (model.opacity(i) < cfg.prune_opacity_threshold) continue;

        const double mean_grad =
            stats.seen[i] > 0 ? stats.grad_norm_sum[i] / static_cast<double>(stats.seen[i]) : 0.0;
        const Vec3 ls = model.log_scales[i];
        const double max_scale = std::exp(std::max({ls.x, ls.y, ls.z}));

        if (mean_grad <= cfg.densify_grad_threshold) {
            emit(i, model.means[i], ls, true);
        } else if (max_scale < cfg.split_scale_threshold) {
            emit(i, model.means[i], ls, true);
            clones.push_back(i);
        } else {
            // Split: two children sampled from the parent Gaussian, scales
            // shrunk by 1.6. Frozen models keep both children on the parent
            // center so initialization positions survive densification.
            const Mat3 r3 = model.rotations[i].normalized().to_matrix();
            const Vec3 scale{std::exp(ls.x), std::exp(ls.y), std::exp(ls.z)};
            const Vec3 child_ls = ls - Vec3{log_split, log_split, log_split};
            for (int child = 0; child < 2; ++child) {
                Vec3 mean = model.means[i];
                if (!model.frozen_positions) {
                    const Vec3 nrm{rng.normal(), rng.normal(), rng.normal()};
                    mean += r3 * nrm.cwise_mul(scale);
                }
                emit(i, mean, child_ls, false);
            }
        }
    }
    for (size_t i : clones) emit(i, model.means[i], model.log_scales[i], false);

    ns.step = state.step;
    model = std::move(out);
    state = std::move(ns);
    stats.resize(model.size());
}

TrainData load_train_data(const std::string &dataset_dir) {
    const std::filesystem::path dir(dataset_dir);
    const DatasetManifest manifest = read_manifest((dir / "manifest.json").string());
    const colmap::TextModel text = colmap::read_model(manifest.colmap_dir);

    std::map<int, CameraIntrinsics> intrinsics;
    for (const colmap::CameraEntry &ce : text.cameras) intrinsics[ce.camera_id] = ce.intrinsics;
    std::map<std::string, const colmap::ImageEntry *> by_name;
    for (const colmap::ImageEntry &ie : text.images) by_name[ie.name] = &ie;

    TrainData data;
    data.background = manifest.background;
    for (const DatasetManifest::Entry &entry : manifest.entries) {
        const auto it = by_name.find(entry.image_name);
        if (it == by_name.end()) fail("image missing from colmap model: " + entry.image_name);
        const colmap::ImageEntry &ie = *it->second;
        const auto ci = intrinsics.find(ie.camera_id);
        if (ci == intrinsics.end()) fail("image references unknown camera id " + entry.image_name);

        TrainView view;
        view.camera.id = ie.image_id;
        view.camera.intrinsics = ci->second;
        view.camera.extrinsics = ie.extrinsics;
        view.camera.image_name = ie.name;
        view.image = read_png((dir / entry.image_name).string());
        if (view.image.width != ci->second.width || view.image.height != ci->second.height)
            fail("image size disagrees with camera: " + entry.image_name);
        data.views.push_back(std::move(view));
    }
    return data;
}

TrainResult train(const InitStrategy &init, const TrainData &data, const TrainConfig &cfg) {
    TrainConfig checked = cfg;
    checked.validate();
    return train(initialize(init, checked), data, checked);
}

TrainResult train(GaussianModel init_model, const TrainData &data, const TrainConfig &cfg) {
    cfg.validate();
    init_model.validate();
    if (init_model.sh_degree != cfg.sh_degree)
        throw std::invalid_argument("train: model degree disagrees with the config");
    if (data.views.empty()) throw std::invalid_argument("train: dataset has no views");

    TrainResult result;
    result.model = std::move(init_model);
    OptimizerState state;
    state.init_for(result.model);
    DensifyStats stats;
    stats.resize(result.model.size());
    Rng rng(cfg.seed);

    std::vector<size_t> order;
    RenderCache cache;
    Image grad;
    for (int it = 1; it <= cfg.iterations; ++it) {
        if (order.empty()) {
            order.resize(data.views.size());
            std::iota(order.begin(), order.end(), size_t{0});
            rng.shuffle(order);
        }
        const TrainView &view = data.views[order.back()];
        order.pop_back();

        const Image rendered = forward_render(result.model, view.camera.intrinsics,
                                              view.camera.extrinsics, data.background, cache);
        const double loss = compute_loss(rendered, view.image, cfg.loss_lambda, grad);
        const ParamGrads grads = backward_params(result.model, cache, grad);
        stats.accumulate(grads, cache);
        adam_step(result.model, grads, state, cfg);
        if (cfg.densify && it % cfg.densify_interval == 0)
            densify_and_prune(result.model, stats, state, cfg, rng);

        result.log.push_back({it, view.camera.id, loss});
    }
    return result;
}

void write_loss_csv(const std::string &path, const std::vector<LossRow> &log) {
    std::ofstream out(path);
    if (!out) fail("cannot write loss log " + path);
    out << "iteration,view_id,loss\n";
    char buf[64];
    for (const LossRow &row : log) {
        std::snprintf(buf, sizeof(buf), "%.17g", row.loss);
        out << row.iteration << "," << row.view_id << "," << buf << "\n";
    }
}

}  // namespace pgs
