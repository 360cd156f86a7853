#include <doctest.h>

#include "fixtures.hpp"
#include "losam/oracle.hpp"
#include "losam/rng.hpp"

using namespace losam;
using namespace losam::discovery;
using graph::Dag;

namespace {

bool resid_indep(StatOracle& o, Vertex target, std::vector<Vertex> covs, Vertex probe) {
    return o.residual_test(target, covs, probe).independent;
}

synth::Dataset fixture_data(const Dag& dag, double lp, std::size_t n, std::uint64_t seed) {
    return synth::standardize(synth::sample_dataset(synth::sample_anm_spec(dag, lp, seed), n, seed));
}

}  // namespace

TEST_CASE("graph-truth marginal and conditional tests are d-separation") {
    Rng rng(3);
    for (std::uint64_t s = 0; s < 200; ++s) {
        const std::size_t d = 2 + static_cast<std::size_t>(rng.below(6));
        const Dag g = graph::er_random_dag(d, std::min<double>(d, d * (d - 1) / 2.0), s);
        GraphTruthOracle o(g);
        for (Vertex a = 0; a < d; ++a) {
            for (Vertex b = 0; b < d; ++b) {
                if (a == b) continue;
                REQUIRE(o.marginal_test(a, b).independent == graph::d_separated(g, a, b));
                for (Vertex c = 0; c < d; ++c) {
                    if (c == a || c == b) continue;
                    const std::vector<Vertex> z{c};
                    REQUIRE(o.conditional_test(a, b, c).independent == graph::d_separated(g, a, b, z));
                }
            }
        }
    }
}

TEST_CASE("graph-truth p-values encode the decision") {
    GraphTruthOracle o(fixtures::collider());
    const auto ind = o.marginal_test(0, 1), dep = o.marginal_test(0, 2);
    CHECK(ind.independent);
    CHECK(ind.p_value > ind.level);
    CHECK_FALSE(dep.independent);
    CHECK(dep.p_value <= dep.level);
}

TEST_CASE("graph-truth residual tests on nonlinear fixtures") {
    GraphTruthOracle chain(fixtures::chain(3));
    CHECK(resid_indep(chain, 1, {0}, 0));
    CHECK_FALSE(resid_indep(chain, 0, {1}, 1));
    CHECK_FALSE(resid_indep(chain, 2, {0}, 0));
    CHECK(resid_indep(chain, 2, {1}, 1));
    CHECK(resid_indep(chain, 2, {0, 1}, 0));

    GraphTruthOracle ex2(fixtures::example2());
    CHECK(resid_indep(ex2, 3, {0}, 0));
    CHECK_FALSE(resid_indep(ex2, 2, {0}, 0));
    CHECK_FALSE(resid_indep(ex2, 0, {3}, 3));
    CHECK(resid_indep(ex2, 2, {0, 1}, 0));
    // Unrelated probe: x2 is d-separated from x1 and x4.
    CHECK(resid_indep(ex2, 1, {0}, 0));
}

TEST_CASE("graph-truth residual tests on linear chains") {
    const Dag g = fixtures::chain(3);
    LinearCoefficients lin(3);
    lin[1] = std::vector<double>{0.9};
    lin[2] = std::vector<double>{-1.2};
    GraphTruthOracle o(g, lin);
    CHECK(resid_indep(o, 2, {0}, 0));
    CHECK(resid_indep(o, 1, {0}, 0));
    CHECK_FALSE(resid_indep(o, 0, {1}, 1));
}

TEST_CASE("graph-truth residual forms") {
    GraphTruthOracle o(fixtures::ld_example(), fixtures::ld_example_linear());
    const std::vector<Vertex> pi{fixtures::LD_I};
    const auto forms = o.residual_forms(pi);
    using R = GraphTruthOracle::Relation;
    // k = 1.1 j + e_k, so regressing on i leaves 1.1 e_j + e_k.
    CHECK(forms[fixtures::LD_J].relation == R::Additive);
    CHECK(forms[fixtures::LD_K].relation == R::Additive);
    CHECK(forms[fixtures::LD_H].relation == R::Mixed);
    CHECK(forms[fixtures::LD_K].linear);
    CHECK(forms[fixtures::LD_K].coefficients[fixtures::LD_J] == doctest::Approx(1.1));
    CHECK(forms[fixtures::LD_K].coefficients[fixtures::LD_K] == doctest::Approx(1.0));
    CHECK_FALSE(forms[fixtures::LD_H].linear);

    GraphTruthOracle sep(Dag(3, {{0, 1}}));
    const std::vector<Vertex> s0{0};
    CHECK(sep.residual_forms(s0)[2].relation == R::Independent);
}

TEST_CASE("graph-truth residual sets") {
    GraphTruthOracle o(fixtures::ld_example(), fixtures::ld_example_linear());
    const std::vector<Vertex> pi{fixtures::LD_I};
    const std::vector<Vertex> u{fixtures::LD_J, fixtures::LD_K, fixtures::LD_H};
    auto rs = o.residualize(pi, u);
    CHECK(rs->t_star(fixtures::LD_J) == 0.0);
    CHECK(rs->t_star(fixtures::LD_K) == 0.0);
    CHECK(rs->t_star(fixtures::LD_H) >= 1.0);
    CHECK_FALSE(rs->residual(fixtures::LD_J).has_value());
    // k is linear in j: removing e_j leaves a residual independent of e_j.
    CHECK(rs->linear_residual_test(fixtures::LD_J, fixtures::LD_K).independent);
    CHECK_FALSE(rs->linear_residual_test(fixtures::LD_J, fixtures::LD_H).independent);
    CHECK_FALSE(rs->linear_residual_test(fixtures::LD_K, fixtures::LD_J).independent);
}

TEST_CASE("graph-truth oracle from a spec reads linear coefficients") {
    const Dag g = fixtures::chain(3);
    const auto spec = fixtures::spec_with(g, [](Vertex v) { return v == 2; }, 5);
    GraphTruthOracle o(spec);
    const std::vector<Vertex> s{0};
    const auto forms = o.residual_forms(s);
    const double c = std::get<losam::synth::LinearMech>(spec.mechanisms[2]).coefficients[0];
    using R = GraphTruthOracle::Relation;
    CHECK(forms[2].relation == R::Additive);
    CHECK(forms[2].coefficients[1] == doctest::Approx(c));
    CHECK(o.residual_forms(std::vector<Vertex>{})[2].relation == R::Independent);
    GraphTruthOracle all_nonlinear(g);
    CHECK(all_nonlinear.residual_forms(s)[2].relation == R::Mixed);
    CHECK(o.mode_name() == "graph_truth");
    CHECK(o.num_vertices() == 3);
}

TEST_CASE("empirical oracle configuration checks") {
    const auto data = fixture_data(fixtures::chain(2), 0.0, 100, 1);
    EmpiricalConfig c;
    c.permutations = 0;
    CHECK_THROWS_AS(EmpiricalOracle(data, c), ParameterError);
    c = {};
    c.level = 1.0;
    CHECK_THROWS_AS(EmpiricalOracle(data, c), ParameterError);
    c = {};
    c.hsic_bandwidth_scale = 0.0;
    CHECK_THROWS_AS(EmpiricalOracle(data, c), ParameterError);
    c = {};
    c.marginal_bandwidth_scale = -1.0;
    CHECK_THROWS_AS(EmpiricalOracle(data, c), ParameterError);
}

TEST_CASE("empirical oracle subsamples rows once") {
    const auto data = fixture_data(fixtures::chain(2), 0.0, 2500, 2);
    EmpiricalOracle o(data);
    CHECK(o.data().rows() == 2000);
    CHECK(o.num_vertices() == 2);
    CHECK(o.mode_name() == "empirical");
}

TEST_CASE("empirical decisions do not depend on query order") {
    const auto data = fixture_data(fixtures::vp_example(), 0.0, 300, 3);
    EmpiricalConfig c;
    c.seed = 9;
    EmpiricalOracle a(data, c), b(data, c);
    const auto first = a.marginal_test(0, 4);
    (void)b.marginal_test(2, 5);
    (void)b.residual_test(4, std::vector<Vertex>{0}, 0);
    CHECK(b.marginal_test(4, 0).p_value == first.p_value);
    const std::vector<Vertex> c01{0, 1}, c10{1, 0};
    CHECK(a.residual_test(4, c01, 0).p_value == b.residual_test(4, c10, 0).p_value);
    CHECK(a.conditional_test(0, 3, 4).p_value == b.conditional_test(3, 0, 4).p_value);
}

TEST_CASE("empirical oracle reuses one fit per covariate set") {
    const auto data = fixture_data(fixtures::vp_example(), 0.0, 200, 4);
    EmpiricalOracle o(data);
    const std::vector<Vertex> s{0};
    (void)o.residual_test(3, s, 0);
    (void)o.residual_test(4, s, 0);
    (void)o.residual_test(3, s, 0);
    CHECK(o.regressions_fitted() == 1);
    const std::vector<Vertex> u{3, 4, 5};
    auto rs = o.residualize(s, u);
    CHECK(o.regressions_fitted() == 2);
    CHECK(rs->residual(3).has_value());
    CHECK(rs->residual(3)->size() == 200);
    CHECK(rs->t_star(3) >= 0.0);
    CHECK_THROWS_AS(o.residualize(std::vector<Vertex>{}, u), ParameterError);
}

TEST_CASE("empirical oracle recovers a nonlinear pair direction") {
    int forward = 0, reverse = 0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto data = fixture_data(Dag(2, {{0, 1}}), 0.0, 500, 100 + s);
        EmpiricalConfig c;
        c.seed = s;
        EmpiricalOracle o(data, c);
        forward += resid_indep(o, 1, {0}, 0);
        reverse += !resid_indep(o, 0, {1}, 1);
    }
    CHECK(forward >= 18);
    CHECK(reverse >= 16);
}

TEST_CASE("empirical oracle sees separate components as independent") {
    int ok = 0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto data = fixture_data(Dag(4, {{0, 1}, {2, 3}}), 0.5, 300, 200 + s);
        EmpiricalConfig c;
        c.seed = s;
        EmpiricalOracle o(data, c);
        ok += o.marginal_test(1, 3).independent && !o.marginal_test(0, 1).independent;
    }
    CHECK(ok >= 18);
}
