#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "imbo/linalg.hpp"

namespace imbo {

struct Neighbor {
    std::size_t index;
    double distance2;
};

/// Exact k-nearest-neighbor search over a fixed point set (Euclidean metric).
/// Distance ties are broken by ascending original row index, so results are
/// deterministic and identical to a brute-force scan with the same rule.
/// Internally a median-split kd-tree; small inputs fall back to a flat scan.
class NeighborIndex {
public:
    static NeighborIndex build(const Matrix& points) {
        if (points.rows() == 0) throw std::invalid_argument("NeighborIndex: empty point set");
        if (!points.all_finite()) throw std::invalid_argument("NeighborIndex: non-finite point");
        NeighborIndex idx;
        idx.points_ = points;
        idx.order_.resize(points.rows());
        for (std::size_t i = 0; i < points.rows(); ++i) idx.order_[i] = i;
        if (points.rows() > kBruteForceLimit) idx.root_ = idx.build_node(0, points.rows());
        return idx;
    }

    std::size_t n() const { return points_.rows(); }
    std::size_t dim() const { return points_.cols(); }
    const Matrix& points() const { return points_; }

    /// k nearest stored points to `query`, ascending (distance, index).
    /// `exclude` removes one row (by index, so coincident duplicates stay
    /// eligible).
    std::vector<Neighbor> nearest(std::span<const double> query, std::size_t k,
                                  std::optional<std::size_t> exclude = std::nullopt) const {
        if (query.size() != dim()) throw std::invalid_argument("NeighborIndex: query dimension mismatch");
        const std::size_t available = n() - (exclude ? 1 : 0);
        if (k < 1 || k > available) throw std::invalid_argument("NeighborIndex: k out of range");
        SearchState st{query, k, exclude, {}};
        st.heap.reserve(k);
        if (root_ < 0)
            scan_range(0, n(), st);
        else
            search_node(static_cast<std::size_t>(root_), st);
        std::sort(st.heap.begin(), st.heap.end(), [](const Neighbor& a, const Neighbor& b) {
            return a.distance2 != b.distance2 ? a.distance2 < b.distance2 : a.index < b.index;
        });
        return st.heap;
    }

    /// The k nearest rows to a member point, excluding the member itself.
    std::vector<std::size_t> knn_of_member(std::size_t member_row, std::size_t k) const {
        if (member_row >= n()) throw std::invalid_argument("NeighborIndex: member_row out of range");
        if (n() < 2 || k < 1 || k > n() - 1) throw std::invalid_argument("NeighborIndex: k out of range");
        const auto found = nearest(points_.row(member_row), k, member_row);
        std::vector<std::size_t> out(found.size());
        for (std::size_t i = 0; i < found.size(); ++i) out[i] = found[i].index;
        return out;
    }

    /// Euclidean distance from an arbitrary query to its k-th closest stored
    /// point (no exclusion).
    double kth_neighbor_distance(std::span<const double> query, std::size_t k) const {
        if (k < 1 || k > n()) throw std::invalid_argument("NeighborIndex: k out of range");
        return std::sqrt(nearest(query, k).back().distance2);
    }

private:
    static constexpr std::size_t kBruteForceLimit = 64;
    static constexpr std::size_t kLeafSize = 16;

    struct Node {
        std::size_t begin, end; // range in order_
        std::size_t axis = 0;
        double split = 0.0;
        std::size_t pivot = 0;  // row index stored at this node
        std::ptrdiff_t left = -1, right = -1;
        bool leaf = false;
    };

    struct SearchState {
        std::span<const double> query;
        std::size_t k;
        std::optional<std::size_t> exclude;
        std::vector<Neighbor> heap; // max-heap on (distance2, index)
    };

    static bool heap_less(const Neighbor& a, const Neighbor& b) {
        return a.distance2 != b.distance2 ? a.distance2 < b.distance2 : a.index < b.index;
    }

    void consider(std::size_t row, SearchState& st) const {
        if (st.exclude && *st.exclude == row) return;
        const Neighbor cand{row, squared_distance(st.query, points_.row(row))};
        if (st.heap.size() < st.k) {
            st.heap.push_back(cand);
            std::push_heap(st.heap.begin(), st.heap.end(), heap_less);
        } else if (heap_less(cand, st.heap.front())) {
            std::pop_heap(st.heap.begin(), st.heap.end(), heap_less);
            st.heap.back() = cand;
            std::push_heap(st.heap.begin(), st.heap.end(), heap_less);
        }
    }

    void scan_range(std::size_t begin, std::size_t end, SearchState& st) const {
        for (std::size_t i = begin; i < end; ++i) consider(order_[i], st);
    }

    std::ptrdiff_t build_node(std::size_t begin, std::size_t end) {
        Node node;
        node.begin = begin;
        node.end = end;
        if (end - begin <= kLeafSize) {
            node.leaf = true;
            nodes_.push_back(node);
            return static_cast<std::ptrdiff_t>(nodes_.size() - 1);
        }
        // split on the axis with the widest spread
        const std::size_t d = dim();
        std::vector<double> lo(d, std::numeric_limits<double>::infinity());
        std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
        for (std::size_t i = begin; i < end; ++i) {
            auto p = points_.row(order_[i]);
            for (std::size_t j = 0; j < d; ++j) {
                lo[j] = std::min(lo[j], p[j]);
                hi[j] = std::max(hi[j], p[j]);
            }
        }
        std::size_t axis = 0;
        for (std::size_t j = 1; j < d; ++j)
            if (hi[j] - lo[j] > hi[axis] - lo[axis]) axis = j;
        const std::size_t mid = begin + (end - begin) / 2;
        std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                         order_.begin() + static_cast<std::ptrdiff_t>(mid),
                         order_.begin() + static_cast<std::ptrdiff_t>(end), [&](std::size_t a, std::size_t b) {
                             const double va = points_(a, axis), vb = points_(b, axis);
                             return va != vb ? va < vb : a < b;
                         });
        node.axis = axis;
        node.pivot = order_[mid];
        node.split = points_(node.pivot, axis);
        const std::size_t self = nodes_.size();
        nodes_.push_back(node);
        const auto left = build_node(begin, mid);
        const auto right = (mid + 1 < end) ? build_node(mid + 1, end) : -1;
        nodes_[self].left = left;
        nodes_[self].right = right;
        return static_cast<std::ptrdiff_t>(self);
    }

    void search_node(std::size_t ni, SearchState& st) const {
        const Node& node = nodes_[ni];
        if (node.leaf) {
            scan_range(node.begin, node.end, st);
            return;
        }
        consider(node.pivot, st);
        const double delta = st.query[node.axis] - node.split;
        const std::ptrdiff_t near = delta < 0.0 ? node.left : node.right;
        const std::ptrdiff_t far = delta < 0.0 ? node.right : node.left;
        if (near >= 0) search_node(static_cast<std::size_t>(near), st);
        // The far side must also be visited on exact plane-distance ties: a
        // tied point with a smaller row index outranks the current worst.
        if (far >= 0 && (st.heap.size() < st.k || delta * delta <= st.heap.front().distance2))
            search_node(static_cast<std::size_t>(far), st);
    }

    Matrix points_;
    std::vector<std::size_t> order_;
    std::vector<Node> nodes_;
    std::ptrdiff_t root_ = -1;
};

inline NeighborIndex build_index(const Matrix& points) { return NeighborIndex::build(points); }

} // namespace imbo
