#include "pgs/core/knn.hpp"

#include <algorithm>
#include <limits>

namespace pgs {

namespace {

double axis_value(const Vec3 &p, int axis) { return axis == 0 ? p.x : axis == 1 ? p.y : p.z; }

constexpr int kLeafSize = 16;

}  // namespace

KdTree::KdTree(std::vector<Vec3> points) : points_(std::move(points)) {
    order_.resize(points_.size());
    for (size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<int>(i);
    if (!points_.empty()) root_ = build(0, static_cast<int>(points_.size()), 0);
}

int KdTree::build(int begin, int end, int depth) {
    Node node;
    if (end - begin <= kLeafSize) {
        node.begin = begin;
        node.end = end;
        nodes_.push_back(node);
        return static_cast<int>(nodes_.size()) - 1;
    }
    const int axis = depth % 3;
    const int mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](int a, int b) {
                         return axis_value(points_[a], axis) < axis_value(points_[b], axis);
                     });
    node.axis = axis;
    node.split = axis_value(points_[order_[mid]], axis);
    const int self = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    const int left = build(begin, mid, depth + 1);
    const int right = build(mid, end, depth + 1);
    nodes_[self].left = left;
    nodes_[self].right = right;
    return self;
}

void KdTree::search(int node_idx, const Vec3 &q, std::ptrdiff_t exclude, int k,
                    std::vector<double> &heap) const {
    const Node &node = nodes_[node_idx];
    if (node.axis < 0) {
        for (int i = node.begin; i < node.end; ++i) {
            const int idx = order_[i];
            if (idx == exclude) continue;
            const Vec3 d = points_[idx] - q;
            const double sq = d.dot(d);
            if (static_cast<int>(heap.size()) < k) {
                heap.push_back(sq);
                std::push_heap(heap.begin(), heap.end());
            } else if (sq < heap.front()) {
                std::pop_heap(heap.begin(), heap.end());
                heap.back() = sq;
                std::push_heap(heap.begin(), heap.end());
            }
        }
        return;
    }
    const double diff = axis_value(q, node.axis) - node.split;
    const int near = diff < 0.0 ? node.left : node.right;
    const int far = diff < 0.0 ? node.right : node.left;
    search(near, q, exclude, k, heap);
    if (static_cast<int>(heap.size()) < k || diff * diff <= heap.front())
        search(far, q, exclude, k, heap);
}

double KdTree::nearest_sqdist(const Vec3 &q, std::ptrdiff_t exclude) const {
    const auto d = knn_sqdist(q, 1, exclude);
    return d.empty() ? std::numeric_limits<double>::infinity() : d[0];
}

std::vector<double> KdTree::knn_sqdist(const Vec3 &q, int k, std::ptrdiff_t exclude) const {
    std::vector<double> heap;
    if (root_ >= 0 && k > 0) {
        heap.reserve(static_cast<size_t>(k) + 1);
        search(root_, q, exclude, k, heap);
    }
    std::sort_heap(heap.begin(), heap.end());
    return heap;
}

}  // namespace pgs
