#pragma once

// Seeded random inputs shared across test suites.

#include <random>
#include <string>

#include "sparcache/query_graph.hpp"
#include "sparcache/sparql.hpp"

namespace sparcache::testsupport {

inline Term randomTermFor(std::mt19937_64& rng, int position, bool variable) {
    if (variable) {
        return Term{TermKind::Variable, "v" + std::to_string(rng() % 6), "", "", false};
    }
    const char* base = position == 0 ? "http://t/s" : position == 1 ? "http://t/p" : "http://t/o";
    return Term{TermKind::Iri, std::string(base) + std::to_string(rng() % 4), "", "", false};
}

inline TriplePattern randomPattern(std::mt19937_64& rng) {
    int type = static_cast<int>(rng() % 8);
    TriplePattern tp;
    tp.subject = randomTermFor(rng, 0, (type & 4) != 0);
    tp.predicate = randomTermFor(rng, 1, (type & 2) != 0);
    tp.object = randomTermFor(rng, 2, (type & 1) != 0);
    return tp;
}

/// Random pattern tree with up to `patternBudget` triple patterns and nested
/// OPTIONAL / UNION / plain groups up to `depth`.
inline PatternGroup randomGroup(std::mt19937_64& rng, int patternBudget, int depth) {
    PatternGroup g;
    int direct = patternBudget > 0 ? static_cast<int>(rng() % static_cast<uint64_t>(patternBudget + 1)) : 0;
    for (int i = 0; i < direct; ++i) g.patterns.push_back(randomPattern(rng));
    patternBudget -= direct;
    while (depth > 0 && patternBudget > 0 && rng() % 3 == 0) {
        int kind = static_cast<int>(rng() % 3);
        if (kind == 2 && patternBudget >= 2) {
            PatternGroup u;
            u.kind = GroupKind::UnionBranches;
            int take = 1 + static_cast<int>(rng() % static_cast<uint64_t>(patternBudget / 2));
            PatternGroup b1 = randomGroup(rng, take, depth - 1);
            PatternGroup b2 = randomGroup(rng, patternBudget - take, depth - 1);
            patternBudget = 0;
            u.children.push_back(std::move(b1));
            u.children.push_back(std::move(b2));
            g.children.push_back(std::move(u));
        } else {
            int take = 1 + static_cast<int>(rng() % static_cast<uint64_t>(patternBudget));
            PatternGroup child = randomGroup(rng, take, depth - 1);
            child.kind = kind == 1 ? GroupKind::Optional : GroupKind::Group;
            patternBudget -= take;
            g.children.push_back(std::move(child));
        }
    }
    return g;
}

inline ParsedQuery randomQuery(std::mt19937_64& rng, int maxPatterns, int maxDepth) {
    ParsedQuery q;
    q.projection.star = true;
    q.tree = randomGroup(rng, 1 + static_cast<int>(rng() % static_cast<uint64_t>(maxPatterns)), maxDepth);
    return q;
}

/// Independent node/edge counter over the pattern tree: every non-root group
/// is one node, every pattern is a conjunction hub plus three leaves.
inline int expectedGraphNodes(const PatternGroup& g, bool isRoot) {
    int n = isRoot ? 1 : 1;
    n += 4 * static_cast<int>(g.patterns.size());
    for (const auto& c : g.children) n += expectedGraphNodes(c, false);
    return n;
}

/// Small random QueryGraph (possibly empty) built directly, staying within
/// `maxNodes`; used where the exact-GED oracle needs tiny graphs.
inline QueryGraph randomSmallGraph(std::mt19937_64& rng, int maxNodes) {
    for (int attempt = 0; attempt < 64; ++attempt) {
        if (maxNodes >= 1 && rng() % 8 == 0) {
            QueryGraph g;
            if (rng() % 3 == 0) return g;  // empty graph
            g.labels.push_back(NodeLabel::Root);
            return g;
        }
        int budget = 1 + static_cast<int>(rng() % 2);
        ParsedQuery q = randomQuery(rng, budget, 2);
        QueryGraph g = buildGraph(q);
        if (static_cast<int>(g.nodeCount()) <= maxNodes) return g;
    }
    QueryGraph g;
    g.labels.push_back(NodeLabel::Root);
    return g;
}

}  // namespace sparcache::testsupport
