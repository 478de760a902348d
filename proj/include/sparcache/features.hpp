#pragma once

// Feature modeling: a query graph becomes a fixed-dimension vector of
// approximate edit distances, either to a fixed template set (cheap, linear
// in the training size) or to the medoids of a clustered training set (the
// quadratic baseline kept for benchmarking).

#include <algorithm>
#include <fstream>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sparcache/ged.hpp"
#include "sparcache/query_graph.hpp"
#include "sparcache/sparql.hpp"
#include "sparcache/util.hpp"

namespace sparcache {

using FeatureVector = std::vector<double>;

struct Template {
    std::string name;
    std::string queryText;  // canonical form
    QueryGraph graph;
};

struct TemplateSet {
    std::vector<Template> templates;
    std::string version;

    size_t size() const { return templates.size(); }
};

struct InvalidK : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Builds a template set from (name, queryText) pairs; every query must parse
/// under the supported subset. The version pins template identity and order.
inline TemplateSet makeTemplateSet(const std::vector<std::pair<std::string, std::string>>& entries,
                                   const std::string& versionPrefix = "tv1") {
    if (entries.empty()) throw std::invalid_argument("template set must not be empty");
    TemplateSet set;
    std::string versionFeed;
    for (size_t i = 0; i < entries.size(); ++i) {
        const auto& [name, text] = entries[i];
        ParsedQuery q;
        try {
            q = parse(text);
        } catch (const ParseError& e) {
            throw std::runtime_error("template " + std::to_string(i) + " (" + name +
                                     ") does not parse: " + e.what());
        }
        Template t;
        t.name = name.empty() ? "t" + std::to_string(i) : name;
        t.queryText = serializeCanonical(q);
        t.graph = buildGraph(q);
        versionFeed += t.queryText;
        versionFeed.push_back('\n');
        set.templates.push_back(std::move(t));
    }
    set.version = versionPrefix + "-" + toHex(fnv1a64(versionFeed));
    return set;
}

/// The bundled default set: 18 SELECT shapes spanning pattern counts 1-5,
/// all 8 triple-pattern boundness types, OPTIONAL and UNION.
inline const TemplateSet& defaultTemplateSet() {
    static const TemplateSet set = [] {
        const std::string prologue =
            "PREFIX rdf: <http://www.w3.org/1999/02/22-rdf-syntax-ns#> "
            "PREFIX rdfs: <http://www.w3.org/2000/01/rdf-schema#> "
            "PREFIX foaf: <http://xmlns.com/foaf/0.1/> "
            "PREFIX dbo: <http://dbpedia.org/ontology/> "
            "PREFIX dbr: <http://dbpedia.org/resource/> ";
        std::vector<std::pair<std::string, std::string>> entries = {
            {"spo-open", "SELECT * WHERE { ?s ?p ?o } LIMIT 100"},
            {"instances-of-class", prologue + "SELECT ?s WHERE { ?s rdf:type dbo:Person }"},
            {"labels", prologue + "SELECT ?s ?label WHERE { ?s rdfs:label ?label }"},
            {"property-of-resource", prologue + "SELECT ?pop WHERE { dbr:Berlin dbo:populationTotal ?pop }"},
            {"incoming-links", prologue + "SELECT ?s ?p WHERE { ?s ?p dbr:Berlin }"},
            {"fact-check", prologue + "SELECT * WHERE { dbr:Berlin rdf:type dbo:City }"},
            {"relation-between", prologue + "SELECT ?p WHERE { dbr:Berlin ?p dbr:Germany }"},
            {"describe-resource", prologue + "SELECT ?p ?o WHERE { dbr:Berlin ?p ?o }"},
            {"typed-with-link", prologue + "SELECT ?film ?dir WHERE { ?film rdf:type dbo:Film . ?film dbo:director ?dir }"},
            {"capital-label",
             prologue + "SELECT ?l WHERE { dbr:Germany dbo:capital ?c . ?c rdfs:label ?l . FILTER (lang(?l) = \"en\") }"},
            {"birthplace-chain",
             prologue + "SELECT ?p ?country WHERE { ?p rdf:type dbo:Person . ?p dbo:birthPlace ?place . "
                        "?place dbo:country ?country }"},
            {"resource-star",
             prologue + "SELECT ?s WHERE { ?s rdfs:label ?l . ?s dbo:abstract ?a . ?s foaf:depiction ?img }"},
            {"optional-genre", prologue + "SELECT ?band ?g WHERE { ?band rdf:type dbo:Band . OPTIONAL { ?band dbo:genre ?g } }"},
            {"optional-isbn",
             prologue + "SELECT ?book WHERE { ?book rdf:type dbo:Book . ?book dbo:author ?a . "
                        "OPTIONAL { ?book dbo:isbn ?isbn } }"},
            {"union-types",
             prologue + "SELECT ?s WHERE { { ?s rdf:type dbo:City } UNION { ?s rdf:type dbo:Town } }"},
            {"union-contributors",
             prologue + "SELECT ?w ?n WHERE { { ?w dbo:author ?a . ?a foaf:name ?n } UNION "
                        "{ ?w dbo:editor ?e . ?e foaf:name ?n } }"},
            {"film-cast-origin",
             prologue + "SELECT DISTINCT ?f WHERE { ?f rdf:type dbo:Film . ?f dbo:starring ?actor . "
                        "?actor dbo:birthPlace ?bp . ?bp dbo:country dbr:United_States }"},
            {"athlete-team-league",
             prologue + "SELECT ?a ?name WHERE { ?a rdf:type dbo:Athlete . ?a dbo:team ?t . "
                        "?t dbo:league ?lg . ?lg rdfs:label ?name . ?a dbo:birthDate ?bd }"},
        };
        return makeTemplateSet(entries, "default");
    }();
    return set;
}

/// Loads a template file: queries separated by a line containing only `---`,
/// each optionally preceded by a `# name: <text>` comment line.
inline TemplateSet loadTemplateSetFile(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open template file: " + path);
    std::vector<std::pair<std::string, std::string>> entries;
    std::string line, name, body;
    auto flush = [&] {
        if (!trim(body).empty()) entries.emplace_back(name, body);
        name.clear();
        body.clear();
    };
    while (std::getline(in, line)) {
        std::string t = trim(line);
        if (t == "---") {
            flush();
        } else if (t.rfind("# name:", 0) == 0) {
            name = trim(t.substr(7));
        } else {
            body += line;
            body.push_back('\n');
        }
    }
    flush();
    if (entries.empty()) throw std::runtime_error("template file is empty: " + path);
    return makeTemplateSet(entries, "file");
}

/// values[i] = approxGed(g, templates[i].graph), in template order.
inline FeatureVector featurize(const QueryGraph& g, const TemplateSet& t,
                               const EditCostScheme& costs = {}) {
    FeatureVector v;
    v.reserve(t.templates.size());
    for (const auto& tpl : t.templates) v.push_back(approxGed(g, tpl.graph, costs));
    return v;
}

// ---------------------------------------------------------------------------
// Cluster-based baseline

struct ClusterModel {
    struct Medoid {
        std::string queryText;
        QueryGraph graph;
    };
    std::vector<Medoid> medoids;
    int k = 0;
    uint64_t seed = 0;
    std::string version;
};

/// k-medoids over pairwise approximate GED: seeded initialization followed by
/// a PAM-style swap phase (best improving swap per iteration, max 50).
/// Deterministic for a fixed seed. The full pairwise matrix is computed up
/// front, so this costs n*(n-1)/2 distance calls.
inline ClusterModel buildClusterModel(
    const std::vector<std::pair<std::string, QueryGraph>>& trainingGraphs, int k, uint64_t seed,
    const EditCostScheme& costs = {}) {
    const int n = static_cast<int>(trainingGraphs.size());
    if (n == 0) throw InvalidK("cluster training set is empty");
    if (k <= 0 || k > n) throw InvalidK("cluster count k must be in [1, training size]");

    std::vector<std::vector<double>> dist(static_cast<size_t>(n), std::vector<double>(static_cast<size_t>(n), 0.0));
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            double d = approxGed(trainingGraphs[static_cast<size_t>(i)].second,
                                 trainingGraphs[static_cast<size_t>(j)].second, costs);
            dist[static_cast<size_t>(i)][static_cast<size_t>(j)] = d;
            dist[static_cast<size_t>(j)][static_cast<size_t>(i)] = d;
        }

    std::vector<int> order(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<int> medoids(order.begin(), order.begin() + k);
    std::vector<char> isMedoid(static_cast<size_t>(n), 0);
    for (int m : medoids) isMedoid[static_cast<size_t>(m)] = 1;

    // nearest / second-nearest medoid distance per point
    std::vector<double> d1(static_cast<size_t>(n)), d2(static_cast<size_t>(n));
    std::vector<int> near(static_cast<size_t>(n));
    auto recompute = [&] {
        for (int p = 0; p < n; ++p) {
            double best = std::numeric_limits<double>::max(), second = best;
            int who = -1;
            for (int mi = 0; mi < k; ++mi) {
                double d = dist[static_cast<size_t>(p)][static_cast<size_t>(medoids[static_cast<size_t>(mi)])];
                if (d < best) {
                    second = best;
                    best = d;
                    who = medoids[static_cast<size_t>(mi)];
                } else if (d < second) {
                    second = d;
                }
            }
            d1[static_cast<size_t>(p)] = best;
            d2[static_cast<size_t>(p)] = second;
            near[static_cast<size_t>(p)] = who;
        }
    };
    recompute();

    for (int iter = 0; iter < 50; ++iter) {
        double bestDelta = -1e-12;
        int bestM = -1, bestO = -1;
        for (int mi = 0; mi < k; ++mi) {
            int m = medoids[static_cast<size_t>(mi)];
            for (int o = 0; o < n; ++o) {
                if (isMedoid[static_cast<size_t>(o)]) continue;
                double delta = 0.0;
                for (int p = 0; p < n; ++p) {
                    double dpo = dist[static_cast<size_t>(p)][static_cast<size_t>(o)];
                    double cur = d1[static_cast<size_t>(p)];
                    double next = (near[static_cast<size_t>(p)] == m)
                                      ? std::min(d2[static_cast<size_t>(p)], dpo)
                                      : std::min(cur, dpo);
                    delta += next - cur;
                }
                if (delta < bestDelta) {
                    bestDelta = delta;
                    bestM = mi;
                    bestO = o;
                }
            }
        }
        if (bestM < 0) break;
        isMedoid[static_cast<size_t>(medoids[static_cast<size_t>(bestM)])] = 0;
        medoids[static_cast<size_t>(bestM)] = bestO;
        isMedoid[static_cast<size_t>(bestO)] = 1;
        recompute();
    }

    ClusterModel model;
    model.k = k;
    model.seed = seed;
    std::string versionFeed = "k=" + std::to_string(k) + ";seed=" + std::to_string(seed) + "\n";
    for (int m : medoids) {
        const auto& [text, graph] = trainingGraphs[static_cast<size_t>(m)];
        model.medoids.push_back({text, graph});
        versionFeed += text;
        versionFeed.push_back('\n');
    }
    model.version = "cluster-" + toHex(fnv1a64(versionFeed));
    return model;
}

/// values[i] = approxGed(g, medoids[i].graph).
inline FeatureVector featurizeCluster(const QueryGraph& g, const ClusterModel& m,
                                      const EditCostScheme& costs = {}) {
    FeatureVector v;
    v.reserve(m.medoids.size());
    for (const auto& med : m.medoids) v.push_back(approxGed(g, med.graph, costs));
    return v;
}

/// A cluster model doubles as a template set (the medoids are the targets),
/// which lets the suggestion model and replay tooling treat both feature
/// modelings uniformly.
inline TemplateSet toTemplateSet(const ClusterModel& m) {
    TemplateSet set;
    for (size_t i = 0; i < m.medoids.size(); ++i)
        set.templates.push_back({"medoid" + std::to_string(i), m.medoids[i].queryText, m.medoids[i].graph});
    set.version = m.version;
    return set;
}

}  // namespace sparcache
