#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "generators.hpp"
#include "sparcache/ged.hpp"

using namespace sparcache;

namespace {

QueryGraph graphOf(const std::string& text) { return buildGraph(parse(text)); }

EditCostScheme randomScheme(std::mt19937_64& rng) {
    // quarter-step values keep sums exact in binary floating point
    auto q = [&](int lo, int hi) { return static_cast<double>(lo + static_cast<int>(rng() % static_cast<uint64_t>(hi - lo + 1))) / 4.0; };
    EditCostScheme c;
    c.nodeDelete = q(2, 8);
    c.nodeInsert = q(2, 8);
    c.nodeSubstituteSameLabel = 0.0;
    c.nodeSubstituteDifferentLabel = std::min(q(1, 8), c.nodeDelete + c.nodeInsert);
    c.edgeDelete = q(1, 6);
    c.edgeInsert = q(1, 6);
    return c;
}

}  // namespace

TEST_CASE("identity distance is zero", "[ged]") {
    std::mt19937_64 rng(23);
    for (int iter = 0; iter < 30; ++iter) {
        QueryGraph g = buildGraph(testsupport::randomQuery(rng, 5, 2));
        CHECK(approxGed(g, g) == 0.0);
        if (g.nodeCount() <= 10) CHECK(exactGed(g, g) == 0.0);
    }
}

TEST_CASE("one-label substitution costs one", "[ged]") {
    QueryGraph a = graphOf("SELECT * WHERE { ?s <http://p> <http://o> }");
    QueryGraph b = graphOf("SELECT * WHERE { ?s ?p <http://o> }");
    CHECK(exactGed(a, b) == 1.0);
    CHECK(approxGed(a, b) == 1.0);
}

TEST_CASE("adding one pattern costs four node and four edge insertions", "[ged]") {
    QueryGraph g = graphOf("SELECT * WHERE { ?s <http://p> <http://o> }");
    QueryGraph g2 = graphOf("SELECT * WHERE { ?s <http://p> <http://o> . ?s <http://q> ?v }");
    CHECK(exactGed(g, g2) == 8.0);
    CHECK(approxGed(g, g2) == 8.0);
}

TEST_CASE("empty graph to single pattern inserts everything", "[ged]") {
    QueryGraph empty;
    QueryGraph one = graphOf("SELECT * WHERE { ?s <http://p> <http://o> }");
    CHECK(one.nodeCount() == 5);
    CHECK(one.edgeCount() == 4);
    CHECK(exactGed(empty, one) == 9.0);
    CHECK(exactGed(one, empty) == 9.0);
    CHECK(approxGed(empty, one) == 9.0);
}

TEST_CASE("exact distance is symmetric under symmetric costs", "[ged]") {
    std::mt19937_64 rng(29);
    for (int iter = 0; iter < 40; ++iter) {
        QueryGraph a = testsupport::randomSmallGraph(rng, 8);
        QueryGraph b = testsupport::randomSmallGraph(rng, 8);
        CHECK(exactGed(a, b) == exactGed(b, a));
    }
}

TEST_CASE("approx distance is symmetric", "[ged]") {
    std::mt19937_64 rng(31);
    for (int iter = 0; iter < 60; ++iter) {
        QueryGraph a = buildGraph(testsupport::randomQuery(rng, 5, 2));
        QueryGraph b = buildGraph(testsupport::randomQuery(rng, 5, 2));
        CHECK(approxGed(a, b) == approxGed(b, a));
    }
}

TEST_CASE("approx upper-bounds exact on random pairs", "[ged]") {
    std::mt19937_64 rng(37);
    int equal = 0, total = 0;
    for (int iter = 0; iter < 150; ++iter) {
        QueryGraph a = testsupport::randomSmallGraph(rng, 9);
        QueryGraph b = testsupport::randomSmallGraph(rng, 9);
        double approx = approxGed(a, b);
        double exact = exactGed(a, b);
        REQUIRE(approx >= exact);
        REQUIRE(exact >= 0.0);
        ++total;
        if (approx == exact) ++equal;
    }
    INFO("approx == exact on " << equal << "/" << total);
    CHECK(equal > total / 2);
}

TEST_CASE("upper bound holds for random cost schemes", "[ged]") {
    std::mt19937_64 rng(41);
    for (int iter = 0; iter < 60; ++iter) {
        EditCostScheme c = randomScheme(rng);
        QueryGraph a = testsupport::randomSmallGraph(rng, 8);
        QueryGraph b = testsupport::randomSmallGraph(rng, 8);
        CHECK(approxGed(a, b, c) >= exactGed(a, b, c));
    }
}

TEST_CASE("zero approx distance means isomorphic", "[ged]") {
    std::mt19937_64 rng(43);
    for (int iter = 0; iter < 80; ++iter) {
        QueryGraph a = buildGraph(testsupport::randomQuery(rng, 4, 2));
        QueryGraph b = buildGraph(testsupport::randomQuery(rng, 4, 2));
        CHECK((approxGed(a, b) == 0.0) == graphEquals(a, b));
    }
    // isomorphic graphs from reordered patterns
    QueryGraph a = graphOf("SELECT * WHERE { ?s <http://p> <http://o> . <http://a> ?p ?o }");
    QueryGraph b = graphOf("SELECT * WHERE { <http://a> ?p ?o . ?s <http://p> <http://o> }");
    CHECK(approxGed(a, b) == 0.0);
}

TEST_CASE("node limit is enforced", "[ged]") {
    QueryGraph big = graphOf(
        "SELECT * WHERE { ?a <http://p> ?b . ?c <http://p> ?d . ?e <http://p> ?f }");  // 13 nodes
    QueryGraph small = graphOf("SELECT * WHERE { ?s <http://p> <http://o> }");
    CHECK_THROWS_AS(exactGed(big, small), SizeExceeded);
    CHECK_THROWS_AS(exactGed(small, big), SizeExceeded);
    CHECK_NOTHROW(exactGed(big, small, EditCostScheme{}, 16));
}

TEST_CASE("approx is deterministic and counts calls", "[ged]") {
    QueryGraph a = graphOf("SELECT * WHERE { ?s <http://p> ?o . ?o ?q <http://c> }");
    QueryGraph b = graphOf("SELECT * WHERE { ?s ?p ?o }");
    resetGedCallCount();
    double d1 = approxGed(a, b);
    double d2 = approxGed(a, b);
    CHECK(d1 == d2);
    CHECK(gedCallCount() == 2);
}

TEST_CASE("cost scheme sanity", "[ged]") {
    EditCostScheme c;
    CHECK(c.nodeSubstituteDifferentLabel <= c.nodeDelete + c.nodeInsert);
    CHECK(c.nodeSubstituteSameLabel == 0.0);
}
