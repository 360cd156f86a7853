#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "losam/discovery.hpp"
#include "losam/graph.hpp"
#include "losam/io.hpp"
#include "losam/metrics.hpp"
#include "losam/stats.hpp"
#include "losam/synth.hpp"

namespace py = pybind11;
using namespace losam;

namespace {

py::object to_python(const io::Json& j) {
    return py::module_::import("json").attr("loads")(j.dump());
}

graph::Dag make_dag(std::size_t d, const std::vector<graph::Edge>& edges, const std::vector<std::string>& labels) {
    return graph::Dag(d, edges, labels);
}

synth::Dataset as_dataset(const Eigen::MatrixXd& values, std::vector<std::string> labels) {
    synth::Dataset data;
    data.values = values;
    data.column_labels = labels.empty() ? synth::default_labels(static_cast<std::size_t>(values.cols()))
                                        : std::move(labels);
    data.validate();
    return data;
}

graph::TopologicalOrder as_order(const std::vector<Vertex>& order) { return graph::TopologicalOrder{order}; }

py::dict generate(std::size_t d, double avg_edges, double linear_prob, const std::string& noise, std::size_t n,
                  std::uint64_t seed, double threshold) {
    synth::GenerateParams p;
    p.d = d;
    p.avg_edges = avg_edges;
    p.linear_prob = linear_prob;
    p.noise = synth::parse_noise_family(noise);
    p.n = n;
    p.seed = seed;
    p.threshold = threshold;
    const auto inst = synth::generate_filtered(p);
    py::dict out;
    out["data"] = inst.data.values;
    out["labels"] = inst.data.column_labels;
    out["dag"] = inst.dag();
    out["spec"] = to_python(io::spec_to_json(inst.spec));
    out["r2_sortability"] = inst.r2_sortability;
    out["attempts"] = inst.attempts;
    out["threshold_warning"] = inst.threshold_warning;
    return out;
}

py::dict run_losam(const Eigen::MatrixXd& values, double level, std::size_t permutations, std::uint64_t seed,
                   const std::string& regressor, bool standardize) {
    discovery::LosamConfig cfg;
    cfg.estimator.level = level;
    cfg.estimator.permutations = permutations;
    cfg.estimator.seed = seed;
    if (regressor == "rf") {
        cfg.estimator.regressor = discovery::RegressorKind::RandomForest;
    } else if (regressor != "krr") {
        throw ParameterError("regressor must be 'krr' or 'rf'");
    }
    auto data = as_dataset(values, {});
    if (standardize) data = synth::standardize(data);
    discovery::LosamResult r;
    {
        py::gil_scoped_release release;
        r = discovery::losam(data, cfg);
    }
    io::Json states = io::Json::array();
    for (const auto& s : r.sort_states) states.push_back(io::to_json(s));
    py::dict out;
    out["order"] = r.order.order;
    out["roots"] = r.root_trace.roots;
    out["root_trace"] = to_python(io::to_json(r.root_trace));
    out["sort_states"] = to_python(states);
    out["regressions"] = to_python(io::to_json(r.ledger));
    out["warnings"] = r.warnings;
    out["runtime_ms"] = r.timing.total_ms;
    return out;
}

py::dict independence(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double level, std::size_t permutations,
                      double bandwidth_scale, std::uint64_t seed) {
    stats::HsicParams p;
    p.level = level;
    p.permutations = permutations;
    p.bandwidth_scale = bandwidth_scale;
    const auto r = stats::independence_test(a, b, p, seed);
    return to_python(io::to_json(r));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Topological ordering for additive noise models with mixed linear and nonlinear mechanisms";
    m.attr("__version__") = LOSAM_VERSION;

    py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);
    py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
    py::register_exception<EstimatorError>(m, "EstimatorError", PyExc_RuntimeError);

    py::class_<graph::Dag>(m, "Dag")
        .def(py::init(&make_dag), py::arg("d"), py::arg("edges") = std::vector<graph::Edge>{},
             py::arg("labels") = std::vector<std::string>{})
        .def_property_readonly("num_vertices", &graph::Dag::num_vertices)
        .def_property_readonly("edges", &graph::Dag::edges)
        .def_property_readonly("labels", &graph::Dag::labels)
        .def("parents", &graph::Dag::parents)
        .def("children", &graph::Dag::children)
        .def("roots", &graph::Dag::roots)
        .def("has_edge", &graph::Dag::has_edge)
        .def("topological_order", &graph::Dag::topological_order)
        .def("to_json", [](const graph::Dag& g) { return to_python(io::dag_to_json(g)); })
        .def("__eq__", [](const graph::Dag& a, const graph::Dag& b) { return a == b; })
        .def("__repr__", [](const graph::Dag& g) {
            return "<Dag d=" + std::to_string(g.num_vertices()) + " edges=" + std::to_string(g.num_edges()) + ">";
        });

    m.def("er_random_dag", &graph::er_random_dag, py::arg("d"), py::arg("avg_edges"), py::arg("seed"));
    m.def(
        "d_separated",
        [](const graph::Dag& g, Vertex a, Vertex b, const std::vector<Vertex>& given) {
            return graph::d_separated(g, a, b, given);
        },
        py::arg("dag"), py::arg("a"), py::arg("b"), py::arg("given") = std::vector<Vertex>{});
    m.def("mrd_set", &graph::mrd_set, py::arg("dag"));
    m.def("srd_set", &graph::srd_set, py::arg("dag"));
    m.def(
        "is_valid_order",
        [](const graph::Dag& g, const std::vector<Vertex>& order) { return graph::is_valid_order(g, as_order(order)); },
        py::arg("dag"), py::arg("order"));

    m.def("generate", &generate, py::arg("d") = 10, py::arg("avg_edges") = 10.0, py::arg("linear_prob") = 0.5,
          py::arg("noise") = "uniform", py::arg("n") = 1000, py::arg("seed") = 0, py::arg("threshold") = 0.75,
          "Draw a DAG, mechanisms and a standardized dataset, resampling until R^2-sortability is below threshold.");
    m.def(
        "standardize",
        [](const Eigen::MatrixXd& values) { return synth::standardize(as_dataset(values, {})).values; },
        py::arg("data"));

    m.def("losam", &run_losam, py::arg("data"), py::arg("level") = stats::kDefaultLevel,
          py::arg("permutations") = 200, py::arg("seed") = 0, py::arg("regressor") = "krr",
          py::arg("standardize") = true, "Estimate a topological order of the columns of an n x d array.");

    m.def(
        "var_sort", [](const Eigen::MatrixXd& values) { return metrics::var_sort(as_dataset(values, {})).order; },
        py::arg("data"));
    m.def(
        "rand_sort", [](std::size_t d, std::uint64_t seed) { return metrics::rand_sort(d, seed).order; },
        py::arg("d"), py::arg("seed"));
    m.def(
        "a_top",
        [](const std::vector<Vertex>& order, const graph::Dag& g) { return metrics::a_top(as_order(order), g).a_top; },
        py::arg("order"), py::arg("dag"), "Fraction of edges respected by the order; None for edgeless graphs.");
    m.def(
        "shd_f1",
        [](const graph::Dag& pred, const graph::Dag& truth, bool double_count) {
            return to_python(io::to_json(metrics::shd_f1(pred, truth, {double_count})));
        },
        py::arg("pred"), py::arg("truth"), py::arg("double_count_reversed") = false);
    m.def(
        "prune_edges",
        [](const Eigen::MatrixXd& values, const std::vector<Vertex>& order, double level, std::uint64_t seed) {
            metrics::PruneOptions p;
            p.level = level;
            p.seed = seed;
            const auto data = as_dataset(values, {});
            py::gil_scoped_release release;
            return metrics::prune_edges(data, as_order(order), p);
        },
        py::arg("data"), py::arg("order"), py::arg("level") = stats::kDefaultLevel, py::arg("seed") = 0);

    m.def("independence_test", &independence, py::arg("a"), py::arg("b"), py::arg("level") = stats::kDefaultLevel,
          py::arg("permutations") = 200, py::arg("bandwidth_scale") = 1.0, py::arg("seed") = 0);
    m.def(
        "mutual_information",
        [](const Eigen::VectorXd& a, const Eigen::VectorXd& b, std::size_t k, std::uint64_t seed) {
            stats::KsgParams p;
            p.k = k;
            return stats::mutual_information(a, b, p, seed);
        },
        py::arg("a"), py::arg("b"), py::arg("k") = 3, py::arg("seed") = 0);
}
