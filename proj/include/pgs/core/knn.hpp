#pragma once

#include <cstddef>
#include <vector>

#include "pgs/core/vec.hpp"

namespace pgs {

// Exact nearest-neighbor queries over a fixed point set (median-split
// kd-tree). Results match a brute-force scan including duplicate points.
class KdTree {
  public:
    explicit KdTree(std::vector<Vec3> points);

    size_t size() const { return points_.size(); }

    // Squared distance to the nearest point; `exclude` skips one index
    // (pass the query's own index for self-queries). Empty tree → +inf.
    double nearest_sqdist(const Vec3 &q, std::ptrdiff_t exclude = -1) const;

    // The k smallest squared distances in ascending order (fewer when the
    // tree holds fewer eligible points).
    std::vector<double> knn_sqdist(const Vec3 &q, int k, std::ptrdiff_t exclude = -1) const;

  private:
    struct Node {
        int axis = -1;      // -1 marks a leaf
        double split = 0.0;
        int left = -1, right = -1;
        int begin = 0, end = 0;  // leaf range into order_
    };

    int build(int begin, int end, int depth);
    void search(int node, const Vec3 &q, std::ptrdiff_t exclude, int k,
                std::vector<double> &heap) const;

    std::vector<Vec3> points_;
    std::vector<int> order_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

}  // namespace pgs
