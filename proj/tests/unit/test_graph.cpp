#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "brute_force.hpp"
#include "fixtures.hpp"
#include "losam/graph.hpp"
#include "losam/rng.hpp"

using namespace losam;
using namespace losam::graph;
using namespace fixtures;

namespace {

Dag random_small_dag(Rng& rng, std::size_t max_d, std::uint64_t seed) {
    const std::size_t d = 1 + static_cast<std::size_t>(rng.below(max_d));
    const double max_edges = static_cast<double>(d * (d - 1) / 2);
    const double avg = std::min(max_edges, rng.uniform(0.0, 2.0) * static_cast<double>(d));
    return er_random_dag(d, avg, seed);
}

// Root-ancestor count from the ancestor relation alone.
std::size_t count_root_ancestors(const Dag& dag, Vertex v) {
    std::size_t c = 0;
    for (Vertex a : dag.ancestors(v)) c += dag.parents(a).empty();
    return c;
}

}  // namespace

TEST_CASE("dag construction rejects cycles, self loops and bad indices") {
    CHECK_THROWS_AS(Dag(2, {{0, 1}, {1, 0}}), ParameterError);
    CHECK_THROWS_AS(Dag(3, {{0, 1}, {1, 2}, {2, 0}}), ParameterError);
    CHECK_THROWS_AS(Dag(2, {{1, 1}}), ParameterError);
    CHECK_THROWS_AS(Dag(2, {{0, 2}}), ParameterError);
    CHECK_NOTHROW(Dag(3, {{0, 1}, {0, 1}, {1, 2}}));
    CHECK(Dag(3, {{0, 1}, {0, 1}}).num_edges() == 1);
}

TEST_CASE("labels fall back to x<index>") {
    const Dag g(2, {{0, 1}});
    CHECK(g.label(1) == "x1");
    CHECK(vp_example().label(VP_H) == "x_h");
}

TEST_CASE("chain structural queries") {
    const Dag g = chain(3);
    CHECK(g.ancestors(2) == VertexSet{0, 1});
    CHECK(g.descendants(0) == VertexSet{1, 2});
    CHECK(g.parents(1) == VertexSet{0});
    CHECK(g.children(1) == VertexSet{2});
    CHECK(g.roots() == VertexSet{0});
    CHECK(g.leaves() == VertexSet{2});
    CHECK(g.has_path(0, 2));
    CHECK_FALSE(g.has_path(2, 0));
    CHECK_FALSE(g.has_path(1, 1));
    CHECK_THROWS_AS(g.parents(3), ParameterError);
}

TEST_CASE("two-collider example roots") {
    CHECK(vp_example().roots() == VertexSet{VP_I, VP_J, VP_K});
}

TEST_CASE("d-separation examples") {
    const Dag c = chain(3);
    const std::vector<Vertex> z1{1};
    CHECK(d_separated(c, 0, 2, z1));
    CHECK_FALSE(d_separated(c, 0, 2));

    const Dag v = collider();
    const std::vector<Vertex> z2{2};
    CHECK(d_separated(v, 0, 1));
    CHECK_FALSE(d_separated(v, 0, 1, z2));

    const Dag f = vp_example();
    CHECK(d_separated(f, VP_I, VP_J));
    CHECK_FALSE(d_separated(f, VP_N, VP_I));
    // Conditioning on a descendant of a collider opens it.
    const std::vector<Vertex> zh{VP_H};
    CHECK_FALSE(d_separated(f, VP_I, VP_J, zh));
}

TEST_CASE("d-separation agrees with path enumeration") {
    Rng rng(11);
    std::size_t checked = 0;
    for (std::uint64_t s = 0; s < 300; ++s) {
        const Dag g = random_small_dag(rng, 6, s);
        const std::size_t d = g.num_vertices();
        if (d < 2) continue;
        for (Vertex a = 0; a < d; ++a) {
            for (Vertex b = a + 1; b < d; ++b) {
                std::vector<Vertex> rest;
                for (Vertex v = 0; v < d; ++v) {
                    if (v != a && v != b) rest.push_back(v);
                }
                for (std::uint32_t mask = 0; mask < (1u << rest.size()); ++mask) {
                    std::vector<Vertex> z;
                    for (std::size_t k = 0; k < rest.size(); ++k) {
                        if (mask & (1u << k)) z.push_back(rest[k]);
                    }
                    REQUIRE(d_separated(g, a, b, z) == brute::d_separated(g, a, b, z));
                    REQUIRE(d_separated(g, b, a, z) == d_separated(g, a, b, z));
                    ++checked;
                }
            }
        }
    }
    CHECK(checked > 10000);
}

TEST_CASE("mrd and srd examples") {
    const Dag f = vp_example();
    CHECK(mrd_set(f) == VertexSet{VP_N, VP_H});
    CHECK(srd_set(f) == VertexSet{VP_M});
    CHECK(mrd_set(chain(3)).empty());
    CHECK(srd_set(chain(3)) == VertexSet{1, 2});
    CHECK(mrd_set(collider()) == VertexSet{2});
    CHECK(root_ancestor_counts(f) == std::vector<std::size_t>{0, 0, 0, 1, 2, 3});
}

TEST_CASE("roots, srds and mrds partition the vertices") {
    Rng rng(5);
    for (std::uint64_t s = 0; s < 1000; ++s) {
        const Dag g = random_small_dag(rng, 8, s);
        const auto roots = g.roots(), srd = srd_set(g), mrd = mrd_set(g);
        VertexSet all;
        all.insert(all.end(), roots.begin(), roots.end());
        all.insert(all.end(), srd.begin(), srd.end());
        all.insert(all.end(), mrd.begin(), mrd.end());
        std::sort(all.begin(), all.end());
        VertexSet expect(g.num_vertices());
        std::iota(expect.begin(), expect.end(), 0);
        REQUIRE(all == expect);
        for (Vertex v : srd) REQUIRE(count_root_ancestors(g, v) == 1);
        for (Vertex v : mrd) REQUIRE(count_root_ancestors(g, v) >= 2);
    }
}

TEST_CASE("v-pattern inducers from d-separation equal the mrd set") {
    Rng rng(17);
    for (std::uint64_t s = 0; s < 500; ++s) {
        const Dag g = random_small_dag(rng, 8, s);
        const std::size_t d = g.num_vertices();
        VertexSet vp;
        for (Vertex v = 0; v < d; ++v) {
            bool found = false;
            for (Vertex a = 0; a < d && !found; ++a) {
                for (Vertex b = 0; b < d && !found; ++b) {
                    if (a == v || b == v || a == b) continue;
                    found = !d_separated(g, v, a) && !d_separated(g, v, b) && d_separated(g, a, b);
                }
            }
            if (found) vp.push_back(v);
        }
        REQUIRE(vp == mrd_set(g));
    }
}

TEST_CASE("is_valid_order examples") {
    const Dag c = chain(3);
    CHECK(is_valid_order(c, {{0, 1, 2}}));
    CHECK_FALSE(is_valid_order(c, {{2, 1, 0}}));
    CHECK(is_valid_order(Dag(3), {{2, 0, 1}}));
    CHECK_THROWS_AS(is_valid_order(c, {{0, 0, 1}}), ParameterError);
    CHECK_THROWS_AS(is_valid_order(c, {{0, 1}}), ParameterError);
}

TEST_CASE("topological sort of random dags is valid") {
    Rng rng(23);
    for (std::uint64_t s = 0; s < 500; ++s) {
        const Dag g = random_small_dag(rng, 10, s);
        const TopologicalOrder t{g.topological_order()};
        REQUIRE(is_valid_order(g, t));
        REQUIRE(brute::brute_valid(g, t.order));
    }
}

TEST_CASE("er_random_dag examples") {
    for (std::uint64_t s = 0; s < 50; ++s) CHECK(er_random_dag(2, 1.0, s).num_edges() == 1);
    CHECK(er_random_dag(1, 0.0, 3).num_edges() == 0);
    CHECK_THROWS_AS(er_random_dag(3, 3.5, 0), ParameterError);
    CHECK_THROWS_AS(er_random_dag(3, -1.0, 0), ParameterError);
    CHECK_THROWS_AS(er_random_dag(0, 0.0, 0), ParameterError);
}

TEST_CASE("er_random_dag mean edge count") {
    double total = 0.0;
    for (std::uint64_t s = 0; s < 10000; ++s) total += static_cast<double>(er_random_dag(10, 10.0, s).num_edges());
    CHECK(total / 10000.0 == doctest::Approx(10.0).epsilon(0.03));
}

TEST_CASE("er_random_dag is deterministic and not always identity ordered") {
    CHECK(er_random_dag(8, 8.0, 42) == er_random_dag(8, 8.0, 42));
    bool backward = false;
    for (std::uint64_t s = 0; s < 50 && !backward; ++s) {
        for (auto [p, c] : er_random_dag(6, 6.0, s).edges()) backward |= p > c;
    }
    CHECK(backward);
}

TEST_CASE("relabeled dag maps edges") {
    const Dag g = chain(3);
    const std::vector<Vertex> m{2, 0, 1};
    const Dag r = g.relabeled(m);
    CHECK(r.has_edge(2, 0));
    CHECK(r.has_edge(0, 1));
    CHECK(r.num_edges() == 2);
}

TEST_CASE("ancestor matrix matches ancestors") {
    const Dag f = vp_example();
    const auto m = f.ancestor_matrix();
    for (Vertex v = 0; v < f.num_vertices(); ++v) {
        for (Vertex u = 0; u < f.num_vertices(); ++u) CHECK(m[v][u] == contains(f.ancestors(v), u));
    }
}
