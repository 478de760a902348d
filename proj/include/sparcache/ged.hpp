#pragma once

// Graph edit distance between query graphs.
//
// approxGed: assignment-based upper bound. Nodes of both graphs are matched
// by solving one optimal linear assignment over a cost matrix (substitution
// block padded with per-node deletion/insertion entries); the returned value
// is the cost of the edit path implied by that node mapping, so it can never
// undershoot the exact distance.
//
// exactGed: exact minimum edit path via best-first search over partial node
// mappings with an admissible lower bound; intended for small graphs only
// (test oracle and ad-hoc CLI use).

#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <stdexcept>
#include <vector>

#include "sparcache/assignment.hpp"
#include "sparcache/query_graph.hpp"

namespace sparcache {

struct EditCostScheme {
    double nodeInsert = 1.0;
    double nodeDelete = 1.0;
    double nodeSubstituteDifferentLabel = 1.0;
    double nodeSubstituteSameLabel = 0.0;
    double edgeInsert = 1.0;
    double edgeDelete = 1.0;

    /// Swapped-direction view: deleting from A equals inserting into B.
    EditCostScheme transposed() const {
        EditCostScheme t = *this;
        std::swap(t.nodeInsert, t.nodeDelete);
        std::swap(t.edgeInsert, t.edgeDelete);
        return t;
    }
};

struct SizeExceeded : std::runtime_error {
    SizeExceeded(size_t nodes, int limit)
        : std::runtime_error("graph with " + std::to_string(nodes) +
                             " nodes exceeds exact-GED node limit " + std::to_string(limit)) {}
};

/// Process-wide count of approxGed invocations; tests and the training-cost
/// comparison read it. Safe to bump from concurrent calls.
inline std::atomic<uint64_t>& gedCallCounter() {
    static std::atomic<uint64_t> counter{0};
    return counter;
}
inline uint64_t gedCallCount() { return gedCallCounter().load(std::memory_order_relaxed); }
inline void resetGedCallCount() { gedCallCounter().store(0, std::memory_order_relaxed); }

namespace geddetail {

// Simple-digraph adjacency; duplicate edges in the input collapse.
inline std::vector<std::vector<char>> adjacency(const QueryGraph& g) {
    size_t n = g.nodeCount();
    std::vector<std::vector<char>> adj(n, std::vector<char>(n, 0));
    for (auto [a, b] : g.edges) adj[static_cast<size_t>(a)][static_cast<size_t>(b)] = 1;
    return adj;
}

inline std::vector<int> adjacencyDegrees(const std::vector<std::vector<char>>& adj) {
    size_t n = adj.size();
    std::vector<int> deg(n, 0);
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < n; ++j)
            if (adj[i][j]) {
                deg[i]++;
                deg[j]++;
            }
    return deg;
}

inline size_t adjacencyEdgeCount(const std::vector<std::vector<char>>& adj) {
    size_t m = 0;
    for (const auto& row : adj)
        for (char c : row) m += static_cast<size_t>(c);
    return m;
}

// Cost of the edit path implied by a full node mapping. phi[i] is the image
// of node i of A in B, or -1 for deletion; unmapped B nodes are insertions.
inline double impliedPathCost(const QueryGraph& a, const QueryGraph& b,
                              const std::vector<std::vector<char>>& adjA,
                              const std::vector<std::vector<char>>& adjB,
                              const std::vector<int>& phi, const EditCostScheme& c) {
    size_t n1 = a.nodeCount(), n2 = b.nodeCount();
    double total = 0.0;
    std::vector<char> covered(n2, 0);
    for (size_t i = 0; i < n1; ++i) {
        if (phi[i] < 0) {
            total += c.nodeDelete;
        } else {
            covered[static_cast<size_t>(phi[i])] = 1;
            total += (a.labels[i] == b.labels[static_cast<size_t>(phi[i])])
                         ? c.nodeSubstituteSameLabel
                         : c.nodeSubstituteDifferentLabel;
        }
    }
    for (size_t j = 0; j < n2; ++j)
        if (!covered[j]) total += c.nodeInsert;

    // edges of A: matched if both endpoints map and the image edge exists
    std::vector<std::vector<char>> consumed(n2, std::vector<char>(n2, 0));
    for (size_t i = 0; i < n1; ++i) {
        for (size_t j = 0; j < n1; ++j) {
            if (!adjA[i][j]) continue;
            int u = phi[i], v = phi[j];
            if (u >= 0 && v >= 0 && adjB[static_cast<size_t>(u)][static_cast<size_t>(v)]) {
                consumed[static_cast<size_t>(u)][static_cast<size_t>(v)] = 1;
            } else {
                total += c.edgeDelete;
            }
        }
    }
    for (size_t u = 0; u < n2; ++u)
        for (size_t v = 0; v < n2; ++v)
            if (adjB[u][v] && !consumed[u][v]) total += c.edgeInsert;
    return total;
}

inline double approxOriented(const QueryGraph& a, const QueryGraph& b, const EditCostScheme& c) {
    const size_t n1 = a.nodeCount(), n2 = b.nodeCount();
    auto adjA = adjacency(a), adjB = adjacency(b);
    if (n1 == 0 && n2 == 0) return 0.0;

    auto degA = adjacencyDegrees(adjA);
    auto degB = adjacencyDegrees(adjB);
    const size_t dim = n1 + n2;
    const double big = static_cast<double>(dim) * (c.nodeInsert + c.nodeDelete +
                                                   c.nodeSubstituteDifferentLabel + 1.0) +
                       static_cast<double>(adjacencyEdgeCount(adjA) + adjacencyEdgeCount(adjB)) *
                           (c.edgeInsert + c.edgeDelete + 1.0) +
                       1.0;

    std::vector<std::vector<double>> cost(dim, std::vector<double>(dim, 0.0));
    for (size_t i = 0; i < n1; ++i) {
        for (size_t j = 0; j < n2; ++j) {
            double label = (a.labels[i] == b.labels[j]) ? c.nodeSubstituteSameLabel
                                                        : c.nodeSubstituteDifferentLabel;
            int dd = degA[i] - degB[j];
            double structural = 0.5 * std::abs(dd) * (dd > 0 ? c.edgeDelete : c.edgeInsert);
            cost[i][j] = label + structural;
        }
    }
    for (size_t i = 0; i < n1; ++i)
        for (size_t k = 0; k < n1; ++k)
            cost[i][n2 + k] = (i == k) ? c.nodeDelete + 0.5 * degA[i] * c.edgeDelete : big;
    for (size_t k = 0; k < n2; ++k)
        for (size_t j = 0; j < n2; ++j)
            cost[n1 + k][j] = (k == j) ? c.nodeInsert + 0.5 * degB[j] * c.edgeInsert : big;

    std::vector<int> rowToCol = solveAssignment(cost);
    std::vector<int> phi(n1, -1);
    for (size_t i = 0; i < n1; ++i)
        if (rowToCol[i] < static_cast<int>(n2)) phi[i] = rowToCol[i];
    return impliedPathCost(a, b, adjA, adjB, phi, c);
}

}  // namespace geddetail

/// Assignment-based GED approximation; always an upper bound on exactGed and
/// zero exactly when the graphs are label-isomorphic.
inline double approxGed(const QueryGraph& a, const QueryGraph& b, const EditCostScheme& costs = {}) {
    gedCallCounter().fetch_add(1, std::memory_order_relaxed);
    if (graphEquals(a, b)) return 0.0;
    // fixed orientation keeps the result symmetric in its arguments
    std::string sa = graphSignature(a), sb = graphSignature(b);
    if (sb < sa) return geddetail::approxOriented(b, a, costs.transposed());
    return geddetail::approxOriented(a, b, costs);
}

/// Exact minimum edit path cost. Throws SizeExceeded when either graph has
/// more than nodeLimit nodes.
inline double exactGed(const QueryGraph& a, const QueryGraph& b, const EditCostScheme& costs = {},
                       int nodeLimit = 10) {
    const size_t n1 = a.nodeCount(), n2 = b.nodeCount();
    if (n1 > static_cast<size_t>(nodeLimit)) throw SizeExceeded(n1, nodeLimit);
    if (n2 > static_cast<size_t>(nodeLimit)) throw SizeExceeded(n2, nodeLimit);

    auto adjA = geddetail::adjacency(a);
    auto adjB = geddetail::adjacency(b);
    const EditCostScheme& c = costs;

    // pendingEdgesA[k]: edges of A whose later endpoint is >= k (not yet
    // charged once nodes [0,k) are decided)
    std::vector<int> pendingEdgesA(n1 + 1, 0);
    for (size_t k = 0; k <= n1; ++k) {
        int m = 0;
        for (size_t i = 0; i < n1; ++i)
            for (size_t j = 0; j < n1; ++j)
                if (adjA[i][j] && (i >= k || j >= k)) ++m;
        pendingEdgesA[k] = m;
    }

    struct State {
        double f = 0.0, g = 0.0;
        uint32_t k = 0;
        uint64_t used = 0;  // bitmask over B nodes
        uint64_t seq = 0;
        std::vector<int> phi;
    };
    struct Cmp {
        bool operator()(const State& x, const State& y) const {
            if (x.f != y.f) return x.f > y.f;
            return x.seq > y.seq;
        }
    };

    auto labelCount = [](const QueryGraph& g, size_t from, uint64_t usedMask, bool masked) {
        std::array<int, 11> cnt{};
        for (size_t i = from; i < g.nodeCount(); ++i) {
            if (masked && (usedMask >> i) & 1) continue;
            cnt[static_cast<size_t>(g.labels[i])]++;
        }
        return cnt;
    };

    auto heuristic = [&](uint32_t k, uint64_t used) {
        auto ra = labelCount(a, k, 0, false);
        auto rb = labelCount(b, 0, used, true);
        int same = 0, totalA = 0, totalB = 0;
        for (size_t l = 0; l < 11; ++l) {
            same += std::min(ra[l], rb[l]);
            totalA += ra[l];
            totalB += rb[l];
        }
        double subBoth = std::min(c.nodeSubstituteDifferentLabel, c.nodeDelete + c.nodeInsert);
        double sameCost = std::min(c.nodeSubstituteSameLabel, c.nodeDelete + c.nodeInsert);
        int cross = std::min(totalA, totalB) - same;
        double nodePart = same * sameCost + cross * subBoth;
        if (totalA > totalB) nodePart += (totalA - totalB) * c.nodeDelete;
        if (totalB > totalA) nodePart += (totalB - totalA) * c.nodeInsert;

        int pb = 0;
        for (size_t u = 0; u < n2; ++u)
            for (size_t v = 0; v < n2; ++v)
                if (adjB[u][v] && (!((used >> u) & 1) || !((used >> v) & 1))) ++pb;
        int pa = pendingEdgesA[k];
        double edgePart = 0.0;
        if (pa > pb) edgePart = (pa - pb) * c.edgeDelete;
        if (pb > pa) edgePart = (pb - pa) * c.edgeInsert;
        return nodePart + edgePart;
    };

    // edge cost incurred by deciding node k of A (image v, or -1) given the
    // partial mapping phi over [0,k)
    auto edgeDelta = [&](const std::vector<int>& phi, uint32_t k, int v) {
        double d = 0.0;
        for (uint32_t i = 0; i < k; ++i) {
            for (int dir = 0; dir < 2; ++dir) {
                bool aHas = dir == 0 ? adjA[i][k] : adjA[k][i];
                bool bHas = false;
                if (phi[i] >= 0 && v >= 0) {
                    size_t w = static_cast<size_t>(phi[i]), x = static_cast<size_t>(v);
                    bHas = dir == 0 ? adjB[w][x] : adjB[x][w];
                }
                if (aHas && !bHas) d += c.edgeDelete;
                if (!aHas && bHas) d += c.edgeInsert;
            }
        }
        return d;
    };

    // completing cost once all A nodes are decided: insert unused B nodes and
    // every B edge not consumed by the mapping
    auto completion = [&](const std::vector<int>& phi, uint64_t used) {
        double d = 0.0;
        for (size_t j = 0; j < n2; ++j)
            if (!((used >> j) & 1)) d += c.nodeInsert;
        for (size_t u = 0; u < n2; ++u) {
            for (size_t v = 0; v < n2; ++v) {
                if (!adjB[u][v]) continue;
                if (!((used >> u) & 1) || !((used >> v) & 1)) {
                    d += c.edgeInsert;
                    continue;
                }
                bool matched = false;
                for (size_t i = 0; i < n1 && !matched; ++i)
                    for (size_t j = 0; j < n1 && !matched; ++j)
                        if (adjA[i][j] && phi[i] == static_cast<int>(u) && phi[j] == static_cast<int>(v))
                            matched = true;
                if (!matched) d += c.edgeInsert;
            }
        }
        return d;
    };

    double best = std::numeric_limits<double>::max();
    uint64_t seq = 0;
    std::priority_queue<State, std::vector<State>, Cmp> open;
    State start;
    start.g = 0.0;
    start.f = heuristic(0, 0);
    open.push(start);

    while (!open.empty()) {
        State s = open.top();
        open.pop();
        if (s.f >= best) continue;
        if (s.k == n1) {
            double total = s.g + completion(s.phi, s.used);
            if (total < best) best = total;
            continue;
        }
        uint32_t k = s.k;
        auto expand = [&](int v) {
            double nodeCost;
            if (v < 0) {
                nodeCost = c.nodeDelete;
            } else {
                nodeCost = (a.labels[k] == b.labels[static_cast<size_t>(v)])
                               ? c.nodeSubstituteSameLabel
                               : c.nodeSubstituteDifferentLabel;
            }
            State t;
            t.g = s.g + nodeCost + edgeDelta(s.phi, k, v);
            t.k = k + 1;
            t.used = v >= 0 ? (s.used | (1ULL << v)) : s.used;
            t.phi = s.phi;
            t.phi.push_back(v);
            t.f = t.g + heuristic(t.k, t.used);
            t.seq = ++seq;
            if (t.f < best) open.push(std::move(t));
        };
        for (size_t v = 0; v < n2; ++v)
            if (!((s.used >> v) & 1)) expand(static_cast<int>(v));
        expand(-1);
    }
    return best;
}

}  // namespace sparcache
