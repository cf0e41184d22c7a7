#include "pgs/metrics/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "pgs/core/knn.hpp"
#include "pgs/gs/gs_ply.hpp"
#include "pgs/plenoptic/ply.hpp"
#include "pgs/simd/kernels.hpp"

namespace pgs {

namespace {

void require_same_size(const Image &a, const Image &b) {
    if (a.width != b.width || a.height != b.height)
        throw std::invalid_argument("metrics: image dimensions differ");
}

constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

// 11-tap Gaussian, sigma 1.5, normalized.
const double *gauss_taps() {
    static const auto taps = [] {
        std::array<double, 11> t{};
        double sum = 0.0;
        for (int i = 0; i < 11; ++i) {
            const double d = i - 5.0;
            t[i] = std::exp(-(d * d) / (2.0 * 1.5 * 1.5));
            sum += t[i];
        }
        for (double &v : t) v /= sum;
        return t;
    }();
    return taps.data();
}

// Valid separable Gaussian filter: (w,h) -> (w-10, h-10).
void gauss_valid(const std::vector<double> &src, int w, int h, std::vector<double> &dst) {
    const int vw = w - 10, vh = h - 10;
    const double *taps = gauss_taps();
    std::vector<double> tmp(static_cast<size_t>(vw) * h);
    for (int y = 0; y < h; ++y)
        simd::conv11_valid(&src[static_cast<size_t>(y) * w], static_cast<size_t>(w), taps,
                           &tmp[static_cast<size_t>(y) * vw]);
    dst.assign(static_cast<size_t>(vw) * vh, 0.0);
    std::vector<double> col(h), out(vh);
    for (int x = 0; x < vw; ++x) {
        for (int y = 0; y < h; ++y) col[y] = tmp[static_cast<size_t>(y) * vw + x];
        simd::conv11_valid(col.data(), static_cast<size_t>(h), taps, out.data());
        for (int y = 0; y < vh; ++y) dst[static_cast<size_t>(y) * vw + x] = out[y];
    }
}

// Adjoint of gauss_valid: scatters a (w-10, h-10) map back to (w, h).
void gauss_valid_adjoint(const std::vector<double> &src, int w, int h, std::vector<double> &dst) {
    const int vw = w - 10, vh = h - 10;
    const double *taps = gauss_taps();
    std::vector<double> tmp(static_cast<size_t>(vw) * h, 0.0);
    for (int y = 0; y < vh; ++y)
        for (int k = 0; k < 11; ++k) {
            const double g = taps[k];
            const size_t src_row = static_cast<size_t>(y) * vw;
            const size_t dst_row = static_cast<size_t>(y + k) * vw;
            for (int x = 0; x < vw; ++x) tmp[dst_row + x] += g * src[src_row + x];
        }
    dst.assign(static_cast<size_t>(w) * h, 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < vw; ++x) {
            const double v = tmp[static_cast<size_t>(y) * vw + x];
            if (v == 0.0) continue;
            for (int k = 0; k < 11; ++k) dst[static_cast<size_t>(y) * w + x + k] += taps[k] * v;
        }
}

void extract_channel(const Image &img, int c, std::vector<double> &plane) {
    plane.resize(img.pixel_count());
    for (size_t i = 0; i < plane.size(); ++i) plane[i] = img.data[i * 3 + c];
}

// Shared SSIM core; when grad != nullptr it accumulates d(mean SSIM)/d(a).
double ssim_impl(const Image &a, const Image &b, Image *grad) {
    require_same_size(a, b);
    const int w = a.width, h = a.height;
    if (w < 11 || h < 11)
        throw std::invalid_argument("metrics: images must be at least 11x11 for ssim");
    const int vw = w - 10, vh = h - 10;
    const size_t nvalid = static_cast<size_t>(vw) * vh;

    if (grad != nullptr) {
        grad->width = w;
        grad->height = h;
        grad->data.assign(static_cast<size_t>(w) * h * 3, 0.0);
    }

    std::vector<double> pa, pb, prod, mu_a, mu_b, e_aa, e_bb, e_ab;
    std::vector<double> map_u, map_va, map_vb, adj;
    double total = 0.0;
    for (int c = 0; c < 3; ++c) {
        extract_channel(a, c, pa);
        extract_channel(b, c, pb);
        gauss_valid(pa, w, h, mu_a);
        gauss_valid(pb, w, h, mu_b);
        prod.resize(pa.size());
        for (size_t i = 0; i < pa.size(); ++i) prod[i] = pa[i] * pa[i];
        gauss_valid(prod, w, h, e_aa);
        for (size_t i = 0; i < pb.size(); ++i) prod[i] = pb[i] * pb[i];
        gauss_valid(prod, w, h, e_bb);
        for (size_t i = 0; i < pa.size(); ++i) prod[i] = pa[i] * pb[i];
        gauss_valid(prod, w, h, e_ab);

        if (grad != nullptr) {
            map_u.assign(nvalid, 0.0);
            map_va.assign(nvalid, 0.0);
            map_vb.assign(nvalid, 0.0);
        }
        double channel_sum = 0.0;
        for (size_t i = 0; i < nvalid; ++i) {
            const double ma = mu_a[i], mb = mu_b[i];
            const double va = e_aa[i] - ma * ma;
            const double vb = e_bb[i] - mb * mb;
            const double cov = e_ab[i] - ma * mb;
            const double a1 = 2.0 * ma * mb + kC1;
            const double a2 = 2.0 * cov + kC2;
            const double b1 = ma * ma + mb * mb + kC1;
            const double b2 = va + vb + kC2;
            const double d = b1 * b2;
            const double s = (a1 * a2) / d;
            channel_sum += s;
            if (grad != nullptr) {
                map_u[i] = (2.0 * mb * (a2 - a1) + 2.0 * s * ma * (b1 - b2)) / d;
                map_vb[i] = 2.0 * a1 / d;
                map_va[i] = -2.0 * s * b1 / d;
            }
        }
        total += channel_sum / static_cast<double>(nvalid);

        if (grad != nullptr) {
            // d(mean ssim)/da = [adj(U) + b.*adj(Vb) + a.*adj(Va)] / (nvalid*3)
            const double scale = 1.0 / (static_cast<double>(nvalid) * 3.0);
            gauss_valid_adjoint(map_u, w, h, adj);
            for (size_t i = 0; i < adj.size(); ++i) grad->data[i * 3 + c] += scale * adj[i];
            gauss_valid_adjoint(map_vb, w, h, adj);
            for (size_t i = 0; i < adj.size(); ++i)
                grad->data[i * 3 + c] += scale * adj[i] * pb[i];
            gauss_valid_adjoint(map_va, w, h, adj);
            for (size_t i = 0; i < adj.size(); ++i)
                grad->data[i * 3 + c] += scale * adj[i] * pa[i];
        }
    }
    return total / 3.0;
}

}  // namespace

double mse(const Image &a, const Image &b) {
    require_same_size(a, b);
    if (a.data.empty()) return 0.0;
    return simd::sq_diff_sum(a.data.data(), b.data.data(), a.data.size()) /
           static_cast<double>(a.data.size());
}

double psnr(const Image &a, const Image &b) {
    const double m = mse(a, b);
    if (m == 0.0) return std::numeric_limits<double>::infinity();
    return -10.0 * std::log10(m);
}

double ssim(const Image &a, const Image &b) { return ssim_impl(a, b, nullptr); }

double ssim_with_gradient(const Image &a, const Image &b, Image &grad) {
    return ssim_impl(a, b, &grad);
}

ImageMetrics image_metrics(const Image &a, const Image &b) {
    return {psnr(a, b), ssim(a, b)};
}

SurfaceDistanceStats surface_distance_stats(const GaussianModel &model,
                                            const PlenopticPointCloud &reference) {
    if (reference.positions.empty())
        throw std::invalid_argument("metrics: reference cloud is empty");
    SurfaceDistanceStats stats;
    if (model.size() == 0) return stats;

    const KdTree tree(reference.positions);
    stats.distances.reserve(model.size());
    for (const Vec3 &mean : model.means)
        stats.distances.push_back(std::sqrt(tree.nearest_sqdist(mean)));

    std::vector<double> sorted = stats.distances;
    std::sort(sorted.begin(), sorted.end());
    const size_t n = sorted.size();
    double sum = 0.0;
    for (double d : sorted) sum += d;
    stats.mean = sum / static_cast<double>(n);
    stats.median =
        n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    const size_t rank = static_cast<size_t>(std::ceil(0.95 * static_cast<double>(n)));
    stats.p95 = sorted[rank == 0 ? 0 : rank - 1];
    stats.max = sorted.back();
    return stats;
}

SizeReport size_report(const GaussianModel &model, const PlenopticPointCloud &cloud) {
    SizeReport report;
    report.gs_bytes = gs_ply::to_bytes(model).size();
    report.plenoptic_bytes = ply::to_bytes(cloud).size();
    report.splat_count = model.size();
    report.point_count = cloud.size();
    report.gs_to_plenoptic_ratio =
        report.plenoptic_bytes == 0
            ? 0.0
            : static_cast<double>(report.gs_bytes) / static_cast<double>(report.plenoptic_bytes);
    return report;
}

}  // namespace pgs
