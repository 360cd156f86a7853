#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "losam/stats.hpp"
#include "losam/synth.hpp"

using namespace losam;
using namespace losam::synth;
using graph::Dag;

namespace {

double variance(const Eigen::VectorXd& x) { return (x.array() - x.mean()).square().mean(); }

double excess_kurtosis(const Eigen::VectorXd& x) {
    const Eigen::ArrayXd c = x.array() - x.mean();
    const double m2 = c.square().mean();
    return c.pow(4).mean() / (m2 * m2) - 3.0;
}

Dataset from_columns(std::vector<std::vector<double>> cols) {
    Dataset d;
    d.values.resize(static_cast<Eigen::Index>(cols.front().size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) {
        for (std::size_t i = 0; i < cols[j].size(); ++i) {
            d.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cols[j][i];
        }
    }
    d.column_labels = default_labels(cols.size());
    return d;
}

}  // namespace

TEST_CASE("noise family names") {
    CHECK(parse_noise_family("uniform") == NoiseFamily::Uniform);
    CHECK(parse_noise_family("LAPLACE") == NoiseFamily::Laplace);
    CHECK(parse_noise_family("Gaussian") == NoiseFamily::Gaussian);
    CHECK(to_string(NoiseFamily::Laplace) == "laplace");
    CHECK_THROWS_AS(parse_noise_family("cauchy"), ParameterError);
}

TEST_CASE("all-linear specs have coefficients of magnitude 0.5..1.5") {
    const Dag g = fixtures::fully_connected(6);
    bool negative = false, positive = false;
    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto spec = sample_anm_spec(g, 1.0, s);
        CHECK_NOTHROW(spec.validate());
        for (Vertex v = 1; v < 6; ++v) {
            REQUIRE(spec.is_linear(v));
            const auto& c = std::get<LinearMech>(spec.mechanisms[v]).coefficients;
            REQUIRE(c.size() == g.parents(v).size());
            for (double x : c) {
                REQUIRE(std::abs(x) >= 0.5);
                REQUIRE(std::abs(x) <= 1.5);
                negative |= x < 0;
                positive |= x > 0;
            }
        }
        CHECK(std::holds_alternative<std::monostate>(spec.mechanisms[0]));
    }
    CHECK(negative);
    CHECK(positive);
}

TEST_CASE("all-nonlinear specs are ten-unit tanh networks") {
    const Dag g = fixtures::fully_connected(5);
    const auto spec = sample_anm_spec(g, 0.0, 3);
    for (Vertex v = 1; v < 5; ++v) {
        const auto* m = std::get_if<MlpMech>(&spec.mechanisms[v]);
        REQUIRE(m != nullptr);
        CHECK(m->input_weights.rows() == static_cast<Eigen::Index>(g.parents(v).size()));
        CHECK(m->input_weights.cols() == static_cast<Eigen::Index>(kHiddenUnits));
        CHECK(m->output_weights.size() == static_cast<Eigen::Index>(kHiddenUnits));
        CHECK(m->input_weights.cwiseAbs().maxCoeff() <= 5.0);
        CHECK(m->output_weights.cwiseAbs().maxCoeff() <= 5.0);
    }
}

TEST_CASE("edgeless dag gets no mechanisms") {
    const auto spec = sample_anm_spec(Dag(4), 0.5, 1);
    for (const auto& m : spec.mechanisms) CHECK(std::holds_alternative<std::monostate>(m));
    CHECK_THROWS_AS(sample_anm_spec(Dag(2), 1.5, 0), ParameterError);
}

TEST_CASE("mlp evaluation matches the closed form") {
    const Dag g(3, {{0, 2}, {1, 2}});
    const auto spec = sample_anm_spec(g, 0.0, 9);
    const auto& m = std::get<MlpMech>(spec.mechanisms[2]);
    const std::vector<double> pv{0.3, -0.2};
    double expect = 0.0;
    for (std::size_t h = 0; h < kHiddenUnits; ++h) {
        const auto hh = static_cast<Eigen::Index>(h);
        expect += m.output_weights(hh) * std::tanh(m.input_weights(0, hh) * 0.3 - m.input_weights(1, hh) * 0.2);
    }
    CHECK(spec.evaluate(2, pv) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("spec validation") {
    AnmSpec spec;
    spec.dag = Dag(2, {{0, 1}});
    spec.mechanisms = {std::monostate{}, LinearMech{{2.0}}};
    CHECK_THROWS_AS(spec.validate(), ParameterError);
    spec.mechanisms = {std::monostate{}, LinearMech{{1.0, 1.0}}};
    CHECK_THROWS_AS(spec.validate(), ParameterError);
    spec.mechanisms = {LinearMech{{1.0}}, LinearMech{{1.0}}};
    CHECK_THROWS_AS(spec.validate(), ParameterError);
    spec.mechanisms = {std::monostate{}, std::monostate{}};
    CHECK_THROWS_AS(spec.validate(), ParameterError);
    spec.mechanisms = {std::monostate{}, LinearMech{{-0.7}}};
    CHECK_NOTHROW(spec.validate());
}

TEST_CASE("noise variances match 1/12") {
    const Dag g(1);
    const auto uni = sample_dataset(sample_anm_spec(g, 0.0, 0, NoiseFamily::Uniform), 100000, 1);
    CHECK(std::abs(variance(uni.values.col(0)) - 1.0 / 12.0) < 0.002);
    CHECK(uni.values.cwiseAbs().maxCoeff() <= 0.5);

    const auto lap = sample_dataset(sample_anm_spec(g, 0.0, 0, NoiseFamily::Laplace), 100000, 2);
    CHECK(std::abs(variance(lap.values.col(0)) - 1.0 / 12.0) < 0.003);
    CHECK(excess_kurtosis(lap.values.col(0)) == doctest::Approx(3.0).epsilon(0.15));

    const auto gau = sample_dataset(sample_anm_spec(g, 0.0, 0, NoiseFamily::Gaussian), 100000, 3);
    CHECK(std::abs(variance(gau.values.col(0)) - 1.0 / 12.0) < 0.002);
    CHECK(std::abs(excess_kurtosis(gau.values.col(0))) < 0.1);
}

TEST_CASE("zero-noise override copies a unit linear parent") {
    AnmSpec spec;
    spec.dag = Dag(2, {{0, 1}});
    spec.mechanisms = {std::monostate{}, LinearMech{{1.0}}};
    spec.noise_variance = 0.0;
    CHECK_THROWS_AS(sample_dataset(spec, 10, 0), ParameterError);
    SampleOptions opt;
    opt.testing_allow_zero_noise = true;
    const auto d = sample_dataset(spec, 50, 0, opt);
    CHECK(d.values.col(0) == d.values.col(1));
}

TEST_CASE("non-finite mechanism output names the vertex") {
    AnmSpec spec;
    spec.dag = Dag(2, {{0, 1}});
    MlpMech m;
    m.input_weights = Eigen::MatrixXd::Constant(1, kHiddenUnits, 1.0);
    m.output_weights = Eigen::VectorXd::Constant(kHiddenUnits, 1e308);
    spec.mechanisms = {std::monostate{}, m};
    try {
        (void)sample_dataset(spec, 20, 0);
        FAIL("expected GenerationError");
    } catch (const GenerationError& e) {
        CHECK(e.vertex() == 1);
    }
}

TEST_CASE("generation is deterministic") {
    const auto spec = sample_anm_spec(fixtures::vp_example(), 0.5, 4);
    CHECK(sample_dataset(spec, 100, 7).values == sample_dataset(spec, 100, 7).values);
    CHECK(sample_dataset(spec, 100, 7).values != sample_dataset(spec, 100, 8).values);
    CHECK_THROWS_AS(sample_dataset(spec, 0, 7), ParameterError);
}

TEST_CASE("standardize") {
    const auto s = standardize(from_columns({{1.0, 2.0, 3.0}}));
    CHECK(std::abs(s.values.col(0).mean()) < 1e-10);
    CHECK(std::abs(variance(s.values.col(0)) - 1.0) < 1e-10);

    const auto spec = sample_anm_spec(fixtures::vp_example(), 0.5, 1);
    const auto once = standardize(sample_dataset(spec, 500, 2));
    const auto twice = standardize(once);
    CHECK((once.values - twice.values).cwiseAbs().maxCoeff() < 1e-10);

    try {
        (void)standardize(from_columns({{1.0, 2.0}, {4.0, 4.0}}));
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("x1") != std::string::npos);
    }
}

TEST_CASE("dataset validation") {
    auto d = from_columns({{1.0, NAN}});
    CHECK_THROWS_AS(d.validate(), DataError);
    d = from_columns({{1.0, 2.0}});
    d.column_labels = {"a", "b"};
    CHECK_THROWS_AS(d.validate(), DataError);
}

TEST_CASE("var_sortability examples") {
    // Raw linear chain with coefficients 1.5: variance grows along the chain.
    AnmSpec spec;
    spec.dag = fixtures::chain(4);
    spec.mechanisms = {std::monostate{}, LinearMech{{1.5}}, LinearMech{{1.5}}, LinearMech{{1.5}}};
    const auto raw = sample_dataset(spec, 2000, 0);
    CHECK(var_sortability(raw, spec.dag).value() == doctest::Approx(1.0));

    const Dag one(2, {{0, 1}});
    CHECK(var_sortability(from_columns({{0.0, 1.0, 0.0, 1.0}, {0.0, 2.0, 0.0, 2.0}}), one).value() == 1.0);
    CHECK(var_sortability(from_columns({{0.0, 2.0}, {0.0, 1.0}}), one).value() == 0.0);
    CHECK_FALSE(var_sortability(raw, Dag(4)).has_value());
    CHECK_FALSE(r2_sortability(raw, Dag(4)).has_value());
}

TEST_CASE("var_sortability after standardize averages one half") {
    double total = 0.0;
    const int seeds = 200;
    for (int s = 0; s < seeds; ++s) {
        const auto spec = sample_anm_spec(fixtures::chain(4), 1.0, static_cast<std::uint64_t>(s));
        const auto data = standardize(sample_dataset(spec, 200, static_cast<std::uint64_t>(s)));
        total += var_sortability(data, spec.dag).value();
    }
    CHECK(total / seeds == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("r2_sortability is a fraction and needs n > d") {
    const auto spec = sample_anm_spec(fixtures::vp_example(), 0.5, 2);
    const auto data = standardize(sample_dataset(spec, 300, 2));
    const double r = r2_sortability(data, spec.dag).value();
    CHECK(r >= 0.0);
    CHECK(r <= 1.0);
    const auto tiny = sample_dataset(spec, 6, 2);
    CHECK_THROWS_AS(r2_sortability(tiny, spec.dag), ParameterError);
}

TEST_CASE("generate_filtered thresholds") {
    GenerateParams p;
    p.d = 5;
    p.avg_edges = 5;
    p.n = 200;
    p.seed = 3;
    p.threshold = 1.01;
    const auto first = generate_filtered(p);
    CHECK(first.attempts == 1);
    CHECK_FALSE(first.threshold_warning);
    p.threshold = 1.0;
    CHECK(generate_filtered(p).attempts == 1);

    p.threshold = 0.0;
    const auto exhausted = generate_filtered(p);
    CHECK(exhausted.attempts == 100);
    CHECK(exhausted.threshold_warning);

    GenerateParams q;
    q.d = 10;
    q.avg_edges = 10;
    q.linear_prob = 0.0;
    q.n = 500;
    q.seed = 1;
    const auto ok = generate_filtered(q);
    CHECK(ok.r2_sortability.value() < 0.75);
    CHECK_FALSE(ok.threshold_warning);
    for (Eigen::Index j = 0; j < ok.data.values.cols(); ++j) {
        CHECK(std::abs(ok.data.values.col(j).mean()) < 1e-10);
    }
    CHECK(generate_filtered(q).data.values == ok.data.values);
}

TEST_CASE("root noise is independent of another component") {
    const Dag g(4, {{0, 1}, {2, 3}});
    int accepted = 0;
    const int seeds = 100;
    for (int s = 0; s < seeds; ++s) {
        const auto spec = sample_anm_spec(g, 0.5, static_cast<std::uint64_t>(s));
        const auto data = sample_dataset(spec, 300, static_cast<std::uint64_t>(s));
        const stats::Vector a = data.values.col(0), b = data.values.col(3);
        accepted += stats::independence_test(a, b, {}, static_cast<std::uint64_t>(s)).independent;
    }
    CHECK(accepted >= 95);
}
