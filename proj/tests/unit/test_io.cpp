#include <doctest.h>

#include <filesystem>
#include <random>

#include "fixtures.hpp"
#include "losam/io.hpp"

using namespace losam;
using graph::Dag;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        std::random_device rd;
        path = fs::temp_directory_path() / ("losam_io_" + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("dag json round trip") {
    const Dag f = fixtures::vp_example();
    const auto j = io::dag_to_json(f);
    CHECK(j.at("d") == 6);
    CHECK(j.at("edges").size() == 5);
    CHECK(j.at("labels")[5] == "x_h");
    const Dag back = io::dag_from_json(j);
    CHECK(back == f);
    CHECK(back.labels() == f.labels());
}

TEST_CASE("dag json rejects malformed input") {
    CHECK_THROWS_AS(io::dag_from_json(io::Json::parse(R"({"edges": []})")), DataError);
    CHECK_THROWS_AS(io::dag_from_json(io::Json::parse(R"({"d": 2, "edges": [[0]]})")), DataError);
    CHECK_THROWS_AS(io::dag_from_json(io::Json::parse(R"({"d": 2, "edges": [[0,1],[1,0]]})")), DataError);
}

TEST_CASE("adjacency csv round trip") {
    const Dag f = fixtures::vp_example();
    const auto text = io::dag_to_adjacency_csv(f);
    CHECK(text.rfind("x_i,x_j", 0) == 0);
    CHECK(io::dag_from_adjacency_csv(text) == f);
    CHECK(io::dag_from_adjacency_csv("0,1\n0,0\n") == Dag(2, {{0, 1}}));
    CHECK_THROWS_AS(io::dag_from_adjacency_csv("0,1\n0\n"), DataError);
    CHECK_THROWS_AS(io::dag_from_adjacency_csv("0,1\n1,0\n"), DataError);
    CHECK_THROWS_AS(io::dag_from_adjacency_csv("0,x\n0,0\n"), DataError);
}

TEST_CASE("dataset csv round trip is exact") {
    const auto spec = synth::sample_anm_spec(fixtures::vp_example(), 0.5, 3);
    const auto data = synth::sample_dataset(spec, 50, 3);
    const auto back = io::dataset_from_csv(io::dataset_to_csv(data));
    CHECK(back.values == data.values);
    CHECK(back.column_labels == data.column_labels);
}

TEST_CASE("dataset csv errors name line and column") {
    try {
        (void)io::dataset_from_csv("a,b\n1,2\n3,oops\n");
        FAIL("expected DataError");
    } catch (const DataError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("line 3") != std::string::npos);
        CHECK(msg.find("b") != std::string::npos);
    }
    CHECK_THROWS_AS(io::dataset_from_csv("a,b\n1\n"), DataError);
    CHECK_THROWS_AS(io::dataset_from_csv("a,b\n"), DataError);
    CHECK_THROWS_AS(io::dataset_from_csv(""), DataError);
    CHECK_THROWS_AS(io::dataset_from_csv("a,b\n1,inf\n"), DataError);
}

TEST_CASE("spec json round trip reproduces samples") {
    const auto spec = synth::sample_anm_spec(fixtures::walkthrough(), 0.5, 11, synth::NoiseFamily::Laplace);
    const auto j = io::spec_to_json(spec);
    const auto back = io::spec_from_json(io::Json::parse(j.dump()));
    CHECK(back.dag == spec.dag);
    CHECK(back.noise_family == synth::NoiseFamily::Laplace);
    CHECK(synth::sample_dataset(back, 40, 2).values == synth::sample_dataset(spec, 40, 2).values);
    CHECK(j.at("mechanisms")[0].is_null());

    auto bad = j;
    bad["mechanisms"][fixtures::WK_N] = io::Json{{"type", "spline"}};
    CHECK_THROWS_AS(io::spec_from_json(bad), DataError);
}

TEST_CASE("bundle round trip") {
    TempDir tmp;
    synth::GenerateParams p;
    p.d = 5;
    p.avg_edges = 5;
    p.n = 60;
    p.seed = 8;
    const auto inst = synth::generate_filtered(p);
    io::write_bundle(tmp.path, inst, 8);
    for (const char* f : {"dag.json", "spec.json", "data.csv", "meta.json"}) CHECK(fs::exists(tmp.path / f));
    const auto b = io::read_bundle(tmp.path);
    CHECK(b.spec.dag == inst.dag());
    CHECK(b.data.values == inst.data.values);
    CHECK(b.meta.at("seed") == 8);
    CHECK(b.meta.at("n") == 60);
    CHECK(b.meta.at("attempts") == inst.attempts);
    CHECK(io::read_dag(tmp.path / "dag.json") == inst.dag());
}

TEST_CASE("dag files by extension") {
    TempDir tmp;
    const Dag f = fixtures::walkthrough();
    io::write_dag(f, tmp.path / "g.csv");
    io::write_dag(f, tmp.path / "g.json");
    CHECK(io::read_dag(tmp.path / "g.csv") == f);
    CHECK(io::read_dag(tmp.path / "g.json") == f);
    CHECK_THROWS_AS(io::read_dag(tmp.path / "missing.json"), DataError);
    CHECK_THROWS_AS(io::write_text(tmp.path / "no" / "such" / "dir" / "x.txt", "x"), ParameterError);
}

TEST_CASE("score and trace json") {
    const auto s = metrics::a_top({{0, 1}}, Dag(2, {{0, 1}}));
    CHECK(io::to_json(s).at("a_top") == 1.0);
    CHECK(io::to_json(metrics::a_top({{0, 1}}, Dag(2))).at("a_top").is_null());
    const auto g = metrics::shd_f1(Dag(2, {{1, 0}}), Dag(2, {{0, 1}}));
    CHECK(io::to_json(g).at("shd") == 1);

    discovery::GraphTruthOracle o(fixtures::vp_example());
    discovery::RegressionLedger ledger;
    const auto r = discovery::losam(o, {});
    const auto jt = io::to_json(r.root_trace);
    CHECK(jt.at("roots") == std::vector<Vertex>{fixtures::VP_I, fixtures::VP_J, fixtures::VP_K});
    CHECK(jt.at("vp_inducers") == std::vector<Vertex>{fixtures::VP_N, fixtures::VP_H});
    CHECK(io::to_json(r.sort_states.front()).contains("t_star"));
    CHECK(io::to_json(r.ledger).at("root_finder_max_covariates").get<std::size_t>() <= 2);
}
