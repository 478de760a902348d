#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <set>

#include "generators.hpp"
#include "parser_corpus.hpp"
#include "sparcache/features.hpp"

using namespace sparcache;

namespace {

QueryGraph graphOf(const std::string& text) { return buildGraph(parse(text)); }

}  // namespace

TEST_CASE("default template set shape", "[features]") {
    const TemplateSet& t = defaultTemplateSet();
    REQUIRE(t.size() == 18);
    CHECK(!t.version.empty());

    // all 8 boundness types appear somewhere
    std::set<int> types;
    std::function<void(const PatternGroup&)> walk = [&](const PatternGroup& g) {
        for (const auto& p : g.patterns) types.insert(tripleTypeId(p));
        for (const auto& c : g.children) walk(c);
    };
    int maxPatterns = 0;
    bool sawOptional = false, sawUnion = false;
    for (const auto& tpl : t.templates) {
        ParsedQuery q = parse(tpl.queryText);
        walk(q.tree);
        maxPatterns = std::max(maxPatterns, testsupport::countPatterns(q.tree));
        std::function<void(const PatternGroup&)> kinds = [&](const PatternGroup& g) {
            for (const auto& c : g.children) {
                if (c.kind == GroupKind::Optional) sawOptional = true;
                if (c.kind == GroupKind::UnionBranches) sawUnion = true;
                kinds(c);
            }
        };
        kinds(q.tree);
    }
    CHECK(types.size() == 8);
    CHECK(maxPatterns == 5);
    CHECK(sawOptional);
    CHECK(sawUnion);
}

TEST_CASE("featurize returns per-template distances in order", "[features]") {
    const TemplateSet& t = defaultTemplateSet();
    SECTION("vector length is 18 and entries are non-negative") {
        FeatureVector v = featurize(graphOf("SELECT * WHERE { ?a ?b ?c }"), t);
        REQUIRE(v.size() == 18);
        for (double d : v) CHECK(d >= 0.0);
    }
    SECTION("a template's own structure gets a zero in its slot") {
        for (size_t i : {size_t(0), size_t(3), size_t(12)}) {
            FeatureVector v = featurize(t.templates[i].graph, t);
            CHECK(v[i] == 0.0);
        }
    }
    SECTION("matches direct recomputation") {
        QueryGraph g = graphOf("SELECT ?x WHERE { ?x <http://p> ?y . OPTIONAL { ?y <http://q> ?z } }");
        FeatureVector v = featurize(g, t);
        for (size_t i = 0; i < t.size(); ++i) CHECK(v[i] == approxGed(g, t.templates[i].graph));
    }
}

TEST_CASE("structurally identical queries featurize identically", "[features]") {
    const TemplateSet& t = defaultTemplateSet();
    QueryGraph a = graphOf("SELECT * WHERE { ?s <http://p> <http://o> . <http://a> ?p ?o }");
    QueryGraph b = graphOf("SELECT * WHERE { <http://zz> ?x ?y . ?q <http://other> <http://v> }");
    REQUIRE(graphEquals(a, b));
    CHECK(featurize(a, t) == featurize(b, t));
}

TEST_CASE("template file loader", "[features]") {
    std::string path = "test_templates_tmp.txt";
    {
        std::ofstream out(path);
        out << "# name: one\n"
            << "SELECT ?s WHERE { ?s <http://p> ?o }\n"
            << "---\n"
            << "PREFIX ex: <http://e/>\n"
            << "SELECT * WHERE { ex:a ex:b ?x }\n"
            << "---\n";
    }
    TemplateSet t = loadTemplateSetFile(path);
    REQUIRE(t.size() == 2);
    CHECK(t.templates[0].name == "one");
    CHECK(t.templates[1].name == "t1");
    CHECK(t.templates[1].queryText == "SELECT * WHERE { <http://e/a> <http://e/b> ?x }");
    CHECK(t.version.rfind("file-", 0) == 0);

    SECTION("loader validates queries") {
        std::ofstream out(path);
        out << "ASK { ?s ?p ?o }\n";
        out.close();
        CHECK_THROWS(loadTemplateSetFile(path));
    }
    std::remove(path.c_str());
}

TEST_CASE("version pins template content and order", "[features]") {
    auto a = makeTemplateSet({{"x", "SELECT ?s WHERE { ?s <http://p> ?o }"},
                              {"y", "SELECT ?s WHERE { ?s ?p ?o }"}});
    auto b = makeTemplateSet({{"y", "SELECT ?s WHERE { ?s ?p ?o }"},
                              {"x", "SELECT ?s WHERE { ?s <http://p> ?o }"}});
    auto c = makeTemplateSet({{"x", "SELECT ?s WHERE { ?s <http://p> ?o }"},
                              {"y", "SELECT ?s WHERE { ?s ?p ?o }"}});
    CHECK(a.version != b.version);
    CHECK(a.version == c.version);
}

TEST_CASE("cluster model separates structural families", "[features]") {
    // two well-separated families: single-pattern vs five-pattern queries
    std::vector<std::pair<std::string, QueryGraph>> training;
    for (int i = 0; i < 6; ++i) {
        std::string q = "SELECT * WHERE { ?a" + std::to_string(i) + " <http://p> ?b }";
        training.emplace_back(q, graphOf(q));
    }
    std::string big = "SELECT * WHERE { ?a <http://p> ?b . ?b <http://q> ?c . ?c <http://r> ?d . "
                      "?d <http://s> ?e . ?e <http://t> ?f }";
    for (int i = 0; i < 6; ++i) {
        std::string q = big;
        q.replace(big.find("?f"), 2, "?f" + std::to_string(i));
        training.emplace_back(q, graphOf(q));
    }

    ClusterModel m = buildClusterModel(training, 2, 99);
    REQUIRE(m.medoids.size() == 2);
    size_t small0 = m.medoids[0].graph.nodeCount();
    size_t small1 = m.medoids[1].graph.nodeCount();
    CHECK(std::min(small0, small1) == 5);
    CHECK(std::max(small0, small1) == 21);

    // exhaustive medoid-pair oracle: PAM must reach the optimal total cost
    double bestTotal = std::numeric_limits<double>::max();
    for (size_t i = 0; i < training.size(); ++i) {
        for (size_t j = i + 1; j < training.size(); ++j) {
            double total = 0;
            for (const auto& [text, g] : training) {
                (void)text;
                total += std::min(approxGed(g, training[i].second), approxGed(g, training[j].second));
            }
            bestTotal = std::min(bestTotal, total);
        }
    }
    double pamTotal = 0;
    for (const auto& [text, g] : training) {
        (void)text;
        pamTotal += std::min(approxGed(g, m.medoids[0].graph), approxGed(g, m.medoids[1].graph));
    }
    CHECK(pamTotal == bestTotal);
}

TEST_CASE("cluster model edge cases", "[features]") {
    std::vector<std::pair<std::string, QueryGraph>> training;
    for (int i = 0; i < 4; ++i) {
        std::string q = "SELECT * WHERE { ?v" + std::to_string(i) + " <http://p" + std::to_string(i) +
                        "> <http://o> }";
        training.emplace_back(q, graphOf(q));
    }
    SECTION("k equal to training size makes every point a medoid") {
        ClusterModel m = buildClusterModel(training, 4, 7);
        REQUIRE(m.medoids.size() == 4);
        double total = 0;
        for (const auto& [text, g] : training) {
            (void)text;
            double best = std::numeric_limits<double>::max();
            for (const auto& med : m.medoids) best = std::min(best, approxGed(g, med.graph));
            total += best;
        }
        CHECK(total == 0.0);
    }
    SECTION("invalid k") {
        CHECK_THROWS_AS(buildClusterModel(training, 0, 1), InvalidK);
        CHECK_THROWS_AS(buildClusterModel(training, 5, 1), InvalidK);
        CHECK_THROWS_AS(buildClusterModel({}, 1, 1), InvalidK);
    }
    SECTION("deterministic given seed") {
        ClusterModel a = buildClusterModel(training, 2, 5);
        ClusterModel b = buildClusterModel(training, 2, 5);
        CHECK(a.version == b.version);
        for (size_t i = 0; i < a.medoids.size(); ++i)
            CHECK(a.medoids[i].queryText == b.medoids[i].queryText);
    }
}

TEST_CASE("featurizeCluster matches brute-force recomputation", "[features]") {
    std::mt19937_64 rng(51);
    std::vector<std::pair<std::string, QueryGraph>> training;
    for (int i = 0; i < 10; ++i) {
        ParsedQuery q = testsupport::randomQuery(rng, 4, 2);
        training.emplace_back(serializeCanonical(q), buildGraph(q));
    }
    ClusterModel m = buildClusterModel(training, 3, 123);
    QueryGraph probe = buildGraph(testsupport::randomQuery(rng, 3, 2));
    FeatureVector v = featurizeCluster(probe, m);
    REQUIRE(v.size() == 3);
    for (size_t i = 0; i < 3; ++i) CHECK(v[i] == approxGed(probe, m.medoids[i].graph));
    CHECK(v[0] >= 0.0);

    SECTION("a medoid's own graph gets zero in its slot") {
        FeatureVector self = featurizeCluster(m.medoids[1].graph, m);
        CHECK(self[1] == 0.0);
    }
}

TEST_CASE("training cost asymmetry: template is linear, cluster quadratic", "[features]") {
    std::mt19937_64 rng(53);
    std::vector<std::pair<std::string, QueryGraph>> training;
    for (int i = 0; i < 40; ++i) {
        ParsedQuery q = testsupport::randomQuery(rng, 3, 2);
        training.emplace_back(serializeCanonical(q), buildGraph(q));
    }
    const TemplateSet& t = defaultTemplateSet();

    resetGedCallCount();
    for (const auto& [text, g] : training) {
        (void)text;
        featurize(g, t);
    }
    CHECK(gedCallCount() == training.size() * t.size());

    resetGedCallCount();
    buildClusterModel(training, 5, 1);
    CHECK(gedCallCount() == training.size() * (training.size() - 1) / 2);
}
