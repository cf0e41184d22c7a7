#pragma once

#include <cstddef>
#include <vector>

#include "pgs/core/image.hpp"
#include "pgs/gs/model.hpp"
#include "pgs/plenoptic/cloud.hpp"

namespace pgs {

struct ImageMetrics {
    double psnr_db = 0.0;  // +inf for identical images
    double ssim = 0.0;
};

// Mean squared error over all pixels and channels ([0,1] scale).
double mse(const Image &a, const Image &b);
double psnr(const Image &a, const Image &b);

// Mean SSIM over the valid 11x11-window region (Gaussian weights, sigma 1.5),
// averaged across channels. Images must be at least 11x11.
double ssim(const Image &a, const Image &b);

// Same, also filling d(SSIM)/d(a) into grad (sized like a).
double ssim_with_gradient(const Image &a, const Image &b, Image &grad);

ImageMetrics image_metrics(const Image &a, const Image &b);

struct SurfaceDistanceStats {
    std::vector<double> distances;  // per splat, world units
    double mean = 0.0;
    double median = 0.0;
    double p95 = 0.0;  // nearest-rank percentile
    double max = 0.0;
};

// Exact nearest-neighbor distance from each splat mean to the reference
// cloud. Throws std::invalid_argument when the reference is empty.
SurfaceDistanceStats surface_distance_stats(const GaussianModel &model,
                                            const PlenopticPointCloud &reference);

struct SizeReport {
    size_t plenoptic_bytes = 0;
    size_t gs_bytes = 0;
    size_t splat_count = 0;
    size_t point_count = 0;
    double gs_to_plenoptic_ratio = 0.0;
};

SizeReport size_report(const GaussianModel &model, const PlenopticPointCloud &cloud);

}  // namespace pgs
