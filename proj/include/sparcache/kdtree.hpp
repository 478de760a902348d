#pragma once

// Exact k-nearest-neighbour search over fixed-dimension points. Built by
// recursive median split cycling through dimensions. Results are the true
// top-k under the total order (squared distance, tie rank); no approximate
// shortcuts, so a linear scan with the same order returns exactly the same
// list.

#include <algorithm>
#include <cstdint>
#include <queue>
#include <stdexcept>
#include <vector>

namespace sparcache {

inline double squaredDistance(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

class KdTree {
public:
    /// `tieRank[i]` orders points with equal distance (lower rank wins); it
    /// must be a permutation of [0, n).
    KdTree(const std::vector<std::vector<double>>* points, std::vector<int> tieRank, size_t dimension)
        : points_(points), rank_(std::move(tieRank)), dim_(dimension) {
        size_t n = points_->size();
        std::vector<int> idx(n);
        for (size_t i = 0; i < n; ++i) idx[i] = static_cast<int>(i);
        nodes_.reserve(n);
        root_ = build(idx, 0, static_cast<int>(n), 0);
    }

    /// Indices of the k nearest points to `probe`, ascending by
    /// (squared distance, tie rank).
    std::vector<int> nearest(const std::vector<double>& probe, size_t k) const {
        if (probe.size() != dim_) throw std::invalid_argument("probe dimension mismatch");
        Heap heap;
        if (root_ >= 0 && k > 0) search(root_, probe, k, heap);
        std::vector<Entry> entries;
        entries.reserve(heap.size());
        while (!heap.empty()) {
            entries.push_back(heap.top());
            heap.pop();
        }
        std::reverse(entries.begin(), entries.end());
        std::vector<int> out;
        out.reserve(entries.size());
        for (const auto& e : entries) out.push_back(e.index);
        return out;
    }

private:
    struct Node {
        int point;
        int axis;
        int left = -1, right = -1;
    };
    struct Entry {
        double dist2;
        int rank;
        int index;
        bool operator<(const Entry& o) const {  // max-heap: worst on top
            if (dist2 != o.dist2) return dist2 < o.dist2;
            return rank < o.rank;
        }
    };
    using Heap = std::priority_queue<Entry>;

    const std::vector<std::vector<double>>* points_;
    std::vector<int> rank_;
    size_t dim_;
    std::vector<Node> nodes_;
    int root_ = -1;

    int build(std::vector<int>& idx, int lo, int hi, int depth) {
        if (lo >= hi) return -1;
        int axis = dim_ == 0 ? 0 : depth % static_cast<int>(dim_);
        int mid = (lo + hi) / 2;
        std::nth_element(idx.begin() + lo, idx.begin() + mid, idx.begin() + hi, [&](int a, int b) {
            double va = (*points_)[static_cast<size_t>(a)][static_cast<size_t>(axis)];
            double vb = (*points_)[static_cast<size_t>(b)][static_cast<size_t>(axis)];
            if (va != vb) return va < vb;
            return rank_[static_cast<size_t>(a)] < rank_[static_cast<size_t>(b)];
        });
        int id = static_cast<int>(nodes_.size());
        nodes_.push_back(Node{idx[mid], axis});
        int left = build(idx, lo, mid, depth + 1);
        int right = build(idx, mid + 1, hi, depth + 1);
        nodes_[static_cast<size_t>(id)].left = left;
        nodes_[static_cast<size_t>(id)].right = right;
        return id;
    }

    void consider(int pointIndex, const std::vector<double>& probe, size_t k, Heap& heap) const {
        Entry e{squaredDistance(probe, (*points_)[static_cast<size_t>(pointIndex)]),
                rank_[static_cast<size_t>(pointIndex)], pointIndex};
        if (heap.size() < k) {
            heap.push(e);
        } else if (e < heap.top()) {
            heap.pop();
            heap.push(e);
        }
    }

    void search(int nodeId, const std::vector<double>& probe, size_t k, Heap& heap) const {
        const Node& n = nodes_[static_cast<size_t>(nodeId)];
        consider(n.point, probe, k, heap);
        double split = (*points_)[static_cast<size_t>(n.point)][static_cast<size_t>(n.axis)];
        double diff = probe[static_cast<size_t>(n.axis)] - split;
        int nearSide = diff < 0 ? n.left : n.right;
        int farSide = diff < 0 ? n.right : n.left;
        if (nearSide >= 0) search(nearSide, probe, k, heap);
        // the far side may still hold an equal-distance, lower-rank point, so
        // prune only on a strictly larger plane distance
        if (farSide >= 0 && (heap.size() < k || diff * diff <= heap.top().dist2))
            search(farSide, probe, k, heap);
    }
};

}  // namespace sparcache
