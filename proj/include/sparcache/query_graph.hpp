#pragma once

// Structural graph encoding of a parsed query. Each triple pattern becomes a
// conjunction hub with three leaves labeled by position and boundness; group
// hierarchy (OPTIONAL / UNION / nested groups) becomes inner nodes under a
// single root. Concrete IRIs and literals are not recorded.

#include <algorithm>
#include <array>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sparcache/sparql.hpp"

namespace sparcache {

enum class NodeLabel : uint8_t {
    Root,
    Group,
    Optional,
    Union,
    Conj,
    SVar,
    SBound,
    PVar,
    PBound,
    OVar,
    OBound,
};

inline const char* nodeLabelName(NodeLabel l) {
    switch (l) {
        case NodeLabel::Root: return "ROOT";
        case NodeLabel::Group: return "GROUP";
        case NodeLabel::Optional: return "OPTIONAL";
        case NodeLabel::Union: return "UNION";
        case NodeLabel::Conj: return "CONJ";
        case NodeLabel::SVar: return "S_VAR";
        case NodeLabel::SBound: return "S_BOUND";
        case NodeLabel::PVar: return "P_VAR";
        case NodeLabel::PBound: return "P_BOUND";
        case NodeLabel::OVar: return "O_VAR";
        case NodeLabel::OBound: return "O_BOUND";
    }
    return "?";
}

/// Labeled directed graph; node id is the index into `labels`.
struct QueryGraph {
    std::vector<NodeLabel> labels;
    std::vector<std::pair<int, int>> edges;

    size_t nodeCount() const { return labels.size(); }
    size_t edgeCount() const { return edges.size(); }

    /// In-degree + out-degree per node.
    std::vector<int> degrees() const {
        std::vector<int> d(labels.size(), 0);
        for (auto [a, b] : edges) {
            d[static_cast<size_t>(a)]++;
            d[static_cast<size_t>(b)]++;
        }
        return d;
    }
};

namespace graphdetail {

struct TreeNode {
    NodeLabel label;
    std::vector<TreeNode> children;
};

inline TreeNode patternNode(const TriplePattern& tp) {
    TreeNode conj{NodeLabel::Conj, {}};
    conj.children.push_back({tp.subject.isVariableLike() ? NodeLabel::SVar : NodeLabel::SBound, {}});
    conj.children.push_back({tp.predicate.isVariableLike() ? NodeLabel::PVar : NodeLabel::PBound, {}});
    conj.children.push_back({tp.object.isVariableLike() ? NodeLabel::OVar : NodeLabel::OBound, {}});
    return conj;
}

inline TreeNode groupNode(const PatternGroup& g, bool isRoot) {
    NodeLabel label = NodeLabel::Group;
    if (isRoot) {
        label = NodeLabel::Root;
    } else if (g.kind == GroupKind::Optional) {
        label = NodeLabel::Optional;
    } else if (g.kind == GroupKind::UnionBranches) {
        label = NodeLabel::Union;
    }
    TreeNode n{label, {}};
    for (const auto& p : g.patterns) n.children.push_back(patternNode(p));
    for (const auto& c : g.children) n.children.push_back(groupNode(c, false));
    return n;
}

// Signature uniquely identifying a labeled tree up to child order.
inline std::string signature(const TreeNode& n) {
    std::vector<std::string> kids;
    kids.reserve(n.children.size());
    for (const auto& c : n.children) kids.push_back(signature(c));
    std::sort(kids.begin(), kids.end());
    std::string out(1, static_cast<char>('A' + static_cast<int>(n.label)));
    out.push_back('(');
    for (const auto& k : kids) out += k;
    out.push_back(')');
    return out;
}

inline void sortCanonical(TreeNode& n) {
    for (auto& c : n.children) sortCanonical(c);
    std::sort(n.children.begin(), n.children.end(),
              [](const TreeNode& a, const TreeNode& b) { return signature(a) < signature(b); });
}

inline void emit(const TreeNode& n, int parent, QueryGraph& g) {
    int id = static_cast<int>(g.labels.size());
    g.labels.push_back(n.label);
    if (parent >= 0) g.edges.emplace_back(parent, id);
    for (const auto& c : n.children) emit(c, id, g);
}

}  // namespace graphdetail

/// Maps a parsed query to its structural graph. Children are ordered
/// canonically (by subtree signature), so structurally identical queries map
/// to identical node/edge lists regardless of pattern order in the source.
inline QueryGraph buildGraph(const ParsedQuery& q) {
    graphdetail::TreeNode root = graphdetail::groupNode(q.tree, true);
    graphdetail::sortCanonical(root);
    QueryGraph g;
    graphdetail::emit(root, -1, g);
    return g;
}

/// Canonical signature of an arbitrary QueryGraph (treats it as a forest of
/// in-degree-0 roots; back edges in malformed input are cut, not followed).
inline std::string graphSignature(const QueryGraph& g) {
    size_t n = g.nodeCount();
    std::vector<std::vector<int>> children(n);
    std::vector<int> indeg(n, 0);
    for (auto [a, b] : g.edges) {
        children[static_cast<size_t>(a)].push_back(b);
        indeg[static_cast<size_t>(b)]++;
    }
    std::vector<char> visiting(n, 0);
    std::string out;
    auto rec = [&](auto&& self, int id) -> std::string {
        if (visiting[static_cast<size_t>(id)]) return "@";
        visiting[static_cast<size_t>(id)] = 1;
        std::vector<std::string> kids;
        for (int c : children[static_cast<size_t>(id)]) kids.push_back(self(self, c));
        std::sort(kids.begin(), kids.end());
        std::string s(1, static_cast<char>('A' + static_cast<int>(g.labels[static_cast<size_t>(id)])));
        s.push_back('(');
        for (const auto& k : kids) s += k;
        s.push_back(')');
        visiting[static_cast<size_t>(id)] = 0;
        return s;
    };
    std::vector<std::string> roots;
    for (size_t i = 0; i < n; ++i)
        if (indeg[i] == 0) roots.push_back(rec(rec, static_cast<int>(i)));
    std::sort(roots.begin(), roots.end());
    for (const auto& r : roots) out += r;
    return out;
}

/// Label-preserving isomorphism on the restricted tree shapes this module
/// produces.
inline bool graphEquals(const QueryGraph& a, const QueryGraph& b) {
    if (a.nodeCount() != b.nodeCount() || a.edgeCount() != b.edgeCount()) return false;
    return graphSignature(a) == graphSignature(b);
}

/// Line-based debug serialization (used by test fixtures and the `ged` CLI).
inline std::string formatGraphText(const QueryGraph& g) {
    std::ostringstream os;
    os << "graph v1\n";
    os << "nodes " << g.nodeCount() << "\n";
    for (size_t i = 0; i < g.nodeCount(); ++i) os << i << " " << nodeLabelName(g.labels[i]) << "\n";
    os << "edges " << g.edgeCount() << "\n";
    for (auto [a, b] : g.edges) os << a << " " << b << "\n";
    return os.str();
}

inline QueryGraph parseGraphText(const std::string& text) {
    std::istringstream is(text);
    std::string word;
    auto need = [&](const std::string& expect) {
        if (!(is >> word) || word != expect)
            throw std::runtime_error("bad graph text: expected '" + expect + "'");
    };
    need("graph");
    need("v1");
    need("nodes");
    size_t n = 0;
    if (!(is >> n)) throw std::runtime_error("bad graph text: node count");
    QueryGraph g;
    g.labels.resize(n);
    for (size_t i = 0; i < n; ++i) {
        size_t id;
        std::string label;
        if (!(is >> id >> label) || id >= n) throw std::runtime_error("bad graph text: node line");
        bool found = false;
        for (int l = 0; l <= static_cast<int>(NodeLabel::OBound); ++l) {
            if (label == nodeLabelName(static_cast<NodeLabel>(l))) {
                g.labels[id] = static_cast<NodeLabel>(l);
                found = true;
                break;
            }
        }
        if (!found) throw std::runtime_error("bad graph text: unknown label '" + label + "'");
    }
    need("edges");
    size_t m = 0;
    if (!(is >> m)) throw std::runtime_error("bad graph text: edge count");
    for (size_t i = 0; i < m; ++i) {
        int a, b;
        if (!(is >> a >> b) || a < 0 || b < 0 || static_cast<size_t>(a) >= n || static_cast<size_t>(b) >= n)
            throw std::runtime_error("bad graph text: edge line");
        g.edges.emplace_back(a, b);
    }
    return g;
}

}  // namespace sparcache
