#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "losam/discovery.hpp"
#include "losam/io.hpp"
#include "losam/metrics.hpp"
#include "losam/synth.hpp"

namespace fs = std::filesystem;
using namespace losam;
using io::Json;

namespace {

enum ExitCode : int { kOk = 0, kConfigError = 1, kDataError = 2, kEstimatorError = 3 };

constexpr const char* kVersion = LOSAM_VERSION;
const std::vector<std::string> kMethods{"losam", "varsort", "randsort"};

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string fmt_optional(const std::optional<double>& v) { return v ? fmt_double(*v) : ""; }

void warn(const std::string& msg) { std::cerr << "warning: " << msg << "\n"; }

fs::path resolve_output_dir(const std::string& dir) { return dir.empty() ? fs::path(".") : fs::path(dir); }

void write_manifest(const fs::path& dir, const std::string& command, const Json& config) {
    const std::string canonical = config.dump();
    const Json manifest{{"tool", "losam"},
                        {"version", kVersion},
                        {"command", command},
                        {"config", config},
                        {"config_hash", "fnv1a64:" + hex64(fnv1a(command + "\n" + canonical))}};
    fs::create_directories(dir);
    io::write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

// ---------------------------------------------------------------------------

struct Campaign {
    std::size_t d = 10;
    std::size_t n = 1000;
    std::string density = "ER1";
    std::string noise = "uniform";
    double linear_prop = 0.5;
    std::vector<std::uint64_t> seeds{0};
    std::vector<std::string> methods{"losam", "varsort", "randsort"};
    double level = stats::kDefaultLevel;
    std::size_t permutations = 200;
    double threshold = 0.75;
    std::string regressor = "krr";
    bool prune = true;
    std::string timing = "include";
    std::string output_dir;

    double avg_edges() const {
        const double per_vertex = density == "ER2" ? 2.0 : 1.0;
        const double max_edges = 0.5 * static_cast<double>(d) * static_cast<double>(d - 1);
        return std::min(per_vertex * static_cast<double>(d), max_edges);
    }

    void validate(bool need_methods) const {
        if (d == 0) throw ParameterError("d must be >= 1");
        if (n == 0) throw ParameterError("n must be >= 1");
        if (density != "ER1" && density != "ER2") throw ParameterError("density must be ER1 or ER2");
        (void)synth::parse_noise_family(noise);
        if (!(linear_prop >= 0.0 && linear_prop <= 1.0)) throw ParameterError("linear-prop must lie in [0, 1]");
        if (seeds.empty()) throw ParameterError("seeds must be nonempty");
        if (!(level > 0.0 && level < 1.0)) throw ParameterError("level must lie in (0, 1)");
        if (regressor != "krr" && regressor != "rf") throw ParameterError("regressor must be krr or rf");
        if (timing != "include" && timing != "omit") throw ParameterError("timing must be include or omit");
        if (!need_methods) return;
        if (std::all_of(methods.begin(), methods.end(), [](const std::string& m) { return m.empty(); })) {
            throw ParameterError("methods must be nonempty");
        }
        for (const auto& m : methods) {
            if (!m.empty() && std::find(kMethods.begin(), kMethods.end(), m) == kMethods.end()) {
                throw ParameterError("unknown method '" + m + "'");
            }
        }
    }

    synth::GenerateParams generate_params(std::uint64_t seed) const {
        synth::GenerateParams p;
        p.d = d;
        p.n = n;
        p.avg_edges = avg_edges();
        p.linear_prob = linear_prop;
        p.noise = synth::parse_noise_family(noise);
        p.threshold = threshold;
        p.seed = seed;
        return p;
    }

    Json to_json(bool with_methods) const {
        Json j{{"d", d},
               {"n", n},
               {"density", density},
               {"noise", std::string(synth::to_string(synth::parse_noise_family(noise)))},
               {"linear_prop", linear_prop},
               {"seeds", seeds},
               {"threshold", threshold}};
        if (!with_methods) return j;
        j["methods"] = methods;
        j["level"] = level;
        j["permutations"] = permutations;
        j["regressor"] = regressor;
        j["prune"] = prune;
        j["timing"] = timing;
        return j;
    }
};

discovery::LosamConfig losam_config(double level, std::size_t permutations, const std::string& regressor,
                                    std::uint64_t seed) {
    discovery::LosamConfig cfg;
    cfg.estimator.level = level;
    cfg.estimator.permutations = permutations;
    cfg.estimator.seed = seed;
    cfg.estimator.regressor =
        regressor == "rf" ? discovery::RegressorKind::RandomForest : discovery::RegressorKind::KernelRidge;
    return cfg;
}

metrics::PruneOptions prune_options(double level, std::size_t permutations, std::uint64_t seed) {
    metrics::PruneOptions p;
    p.level = level;
    p.permutations = permutations;
    p.seed = seed;
    return p;
}

void add_campaign_options(CLI::App* cmd, Campaign& c, bool with_methods) {
    cmd->add_option("--d", c.d, "Number of variables")->capture_default_str();
    cmd->add_option("--n", c.n, "Samples per dataset")->capture_default_str();
    cmd->add_option("--density", c.density, "Graph density (ER1 or ER2)")->capture_default_str();
    cmd->add_option("--noise", c.noise, "Noise family (uniform, laplace, gaussian)")->capture_default_str();
    cmd->add_option("--linear-prop", c.linear_prop, "Probability that a mechanism is linear")->capture_default_str();
    cmd->add_option("--seeds", c.seeds, "Seeds, comma separated")->delimiter(',')->capture_default_str();
    cmd->add_option("--threshold", c.threshold, "R^2-sortability rejection threshold")->capture_default_str();
    cmd->add_option("--output-dir", c.output_dir, "Output directory")->envname("LOSAM_OUTPUT_DIR");
    if (!with_methods) return;
    cmd->add_option("--methods", c.methods, "Methods: losam, varsort, randsort")->delimiter(',')->capture_default_str();
    cmd->add_option("--level", c.level, "Significance level")->capture_default_str();
    cmd->add_option("--permutations", c.permutations, "HSIC permutations")->capture_default_str();
    cmd->add_option("--regressor", c.regressor, "Nonparametric regressor (krr or rf)")->capture_default_str();
    cmd->add_flag("--prune,!--no-prune", c.prune, "Prune edges to score SHD and F1");
    cmd->add_option("--timing", c.timing, "include or omit runtimes")->capture_default_str();
}

// ---------------------------------------------------------------------------

int cmd_generate(const Campaign& c) {
    c.validate(false);
    const auto family = synth::parse_noise_family(c.noise);
    if (c.linear_prop == 1.0 && family == synth::NoiseFamily::Gaussian) {
        warn("linear mechanisms with Gaussian noise are not identifiable");
    }
    const fs::path out = resolve_output_dir(c.output_dir);
    for (std::uint64_t seed : c.seeds) {
        const auto inst = synth::generate_filtered(c.generate_params(seed));
        if (inst.threshold_warning) {
            warn("seed " + std::to_string(seed) + ": no draw met the R^2-sortability threshold");
        }
        io::write_bundle(out / ("seed_" + std::to_string(seed)), inst, seed);
    }
    write_manifest(out, "generate", c.to_json(false));
    std::cout << "wrote " << c.seeds.size() << " bundle(s) to " << out.string() << "\n";
    return kOk;
}

// ---------------------------------------------------------------------------

struct DiscoverArgs {
    std::string data;
    std::string truth;
    std::string out;
    std::string output_dir;
    double level = stats::kDefaultLevel;
    std::size_t permutations = 200;
    std::uint64_t seed = 0;
    std::string regressor = "krr";
    bool prune = true;
    std::string timing = "include";
};

// Truth vertices mapped to data columns by label when every label matches.
graph::Dag align_truth(const graph::Dag& truth, const synth::Dataset& data) {
    const std::size_t d = data.num_columns();
    if (truth.num_vertices() != d) {
        throw DataError("truth DAG has " + std::to_string(truth.num_vertices()) + " vertices but data has " +
                        std::to_string(d) + " columns");
    }
    if (truth.labels().empty()) return truth;
    std::vector<Vertex> mapping(d);
    for (Vertex v = 0; v < d; ++v) {
        const auto it = std::find(data.column_labels.begin(), data.column_labels.end(), truth.labels()[v]);
        if (it == data.column_labels.end()) return truth;
        mapping[v] = static_cast<Vertex>(it - data.column_labels.begin());
    }
    std::vector<graph::Edge> edges;
    for (const auto& [p, c] : truth.edges()) edges.emplace_back(mapping[p], mapping[c]);
    return graph::Dag(d, edges, data.column_labels);
}

Json sort_states_json(const std::vector<discovery::SortState>& states) {
    Json arr = Json::array();
    for (const auto& s : states) arr.push_back(io::to_json(s));
    return arr;
}

int cmd_discover(const DiscoverArgs& a) {
    if (!(a.level > 0.0 && a.level < 1.0)) throw ParameterError("level must lie in (0, 1)");
    if (a.regressor != "krr" && a.regressor != "rf") throw ParameterError("regressor must be krr or rf");
    if (a.timing != "include" && a.timing != "omit") throw ParameterError("timing must be include or omit");

    const auto raw = io::read_dataset(a.data);
    std::vector<std::string> warnings;
    if (raw.num_samples() < 50) {
        warnings.push_back("only " + std::to_string(raw.num_samples()) + " samples; results are unreliable below 50");
    }
    std::optional<graph::Dag> truth;
    if (!a.truth.empty()) truth = align_truth(io::read_dag(a.truth), raw);
    const auto data = synth::standardize(raw);

    const auto t0 = std::chrono::steady_clock::now();
    auto result = discovery::losam(data, losam_config(a.level, a.permutations, a.regressor, a.seed));
    std::optional<graph::Dag> pruned;
    if (a.prune) pruned = metrics::prune_edges(data, result.order, prune_options(a.level, a.permutations, a.seed));
    const double runtime_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    warnings.insert(warnings.end(), result.warnings.begin(), result.warnings.end());

    Json order_labels = Json::array();
    for (Vertex v : result.order.order) order_labels.push_back(data.column_labels[v]);
    Json report{{"version", kVersion},
                {"n", data.num_samples()},
                {"d", data.num_columns()},
                {"labels", data.column_labels},
                {"order", result.order.order},
                {"order_labels", order_labels},
                {"pruned_dag", pruned ? io::dag_to_json(graph::Dag(pruned->num_vertices(), pruned->edges(),
                                                                   data.column_labels))
                                      : Json()},
                {"traces",
                 {{"root_finder", io::to_json(result.root_trace)},
                  {"sort_finder", sort_states_json(result.sort_states)},
                  {"regressions", io::to_json(result.ledger)}}},
                {"warnings", warnings}};
    if (truth) {
        Json m{{"ordering", io::to_json(metrics::a_top(result.order, *truth))}};
        if (pruned) m["graph"] = io::to_json(metrics::shd_f1(*pruned, *truth));
        report["metrics"] = m;
    }
    if (a.timing == "include") report["runtime_ms"] = runtime_ms;

    for (const auto& w : warnings) warn(w);
    const fs::path dir = resolve_output_dir(a.output_dir);
    const fs::path out = a.out.empty() ? dir / "report.json" : fs::path(a.out);
    if (!out.parent_path().empty()) fs::create_directories(out.parent_path());
    io::write_text(out, report.dump(2) + "\n");
    write_manifest(out.parent_path().empty() ? fs::path(".") : out.parent_path(), "discover",
                   Json{{"data", a.data},
                        {"truth", a.truth},
                        {"level", a.level},
                        {"permutations", a.permutations},
                        {"seed", a.seed},
                        {"regressor", a.regressor},
                        {"prune", a.prune},
                        {"timing", a.timing}});
    std::cout << "order:";
    for (const auto& l : order_labels) std::cout << " " << l.get<std::string>();
    std::cout << "\nreport: " << out.string() << "\n";
    return kOk;
}

// ---------------------------------------------------------------------------

struct RunRow {
    std::string method;
    std::uint64_t seed = 0;
    std::optional<double> a_top;
    std::optional<double> shd;
    std::optional<double> f1;
    double runtime_ms = 0.0;
    std::string status = "ok";
    std::string message;
};

std::string status_of(const std::exception& e) {
    if (dynamic_cast<const EstimatorError*>(&e)) return "estimator_error";
    if (dynamic_cast<const GenerationError*>(&e)) return "generation_error";
    if (dynamic_cast<const DataError*>(&e)) return "data_error";
    return "error";
}

RunRow run_method(const Campaign& c, const std::string& method, std::uint64_t seed,
                  const synth::GeneratedInstance& inst) {
    RunRow row;
    row.method = method;
    row.seed = seed;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        graph::TopologicalOrder order;
        if (method == "losam") {
            order = discovery::losam(inst.data, losam_config(c.level, c.permutations, c.regressor, seed)).order;
        } else if (method == "varsort") {
            order = metrics::var_sort(inst.data);
        } else {
            order = metrics::rand_sort(c.d, seed);
        }
        row.a_top = metrics::a_top(order, inst.dag()).a_top;
        if (c.prune) {
            const auto g = metrics::shd_f1(
                metrics::prune_edges(inst.data, order, prune_options(c.level, c.permutations, seed)), inst.dag());
            row.shd = static_cast<double>(g.shd);
            row.f1 = g.f1;
        }
    } catch (const std::exception& e) {
        row.status = status_of(e);
        row.message = e.what();
    }
    row.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return row;
}

double quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

Json summarize(const std::vector<double>& values) {
    if (values.empty()) return Json{{"count", 0}, {"median", nullptr}, {"q1", nullptr}, {"q3", nullptr}, {"iqr", nullptr}};
    const double q1 = quantile(values, 0.25), q3 = quantile(values, 0.75);
    return Json{{"count", values.size()}, {"median", quantile(values, 0.5)}, {"q1", q1}, {"q3", q3}, {"iqr", q3 - q1}};
}

int cmd_benchmark(const Campaign& c) {
    c.validate(true);
    const auto family = synth::parse_noise_family(c.noise);
    if (c.linear_prop == 1.0 && family == synth::NoiseFamily::Gaussian) {
        warn("linear mechanisms with Gaussian noise are not identifiable");
    }
    const bool timing = c.timing == "include";
    const fs::path out = resolve_output_dir(c.output_dir);
    fs::create_directories(out);

    std::vector<std::string> methods;
    for (const auto& m : kMethods) {
        if (std::find(c.methods.begin(), c.methods.end(), m) != c.methods.end()) methods.push_back(m);
    }
    std::vector<std::uint64_t> seeds = c.seeds;
    std::sort(seeds.begin(), seeds.end());
    seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());

    std::vector<RunRow> rows;
    for (std::uint64_t seed : seeds) {
        std::optional<synth::GeneratedInstance> inst;
        std::string gen_status, gen_message;
        try {
            inst = synth::generate_filtered(c.generate_params(seed));
        } catch (const std::exception& e) {
            gen_status = status_of(e);
            gen_message = e.what();
        }
        for (const auto& m : methods) {
            if (!inst) {
                RunRow failed;
                failed.method = m;
                failed.seed = seed;
                failed.status = gen_status;
                failed.message = gen_message;
                rows.push_back(failed);
            } else {
                rows.push_back(run_method(c, m, seed, *inst));
            }
            const auto& r = rows.back();
            std::cerr << "seed " << seed << " " << m << ": " << r.status;
            if (r.a_top) std::cerr << " a_top=" << fmt_double(*r.a_top);
            std::cerr << "\n";
        }
    }

    const std::string noise_name(synth::to_string(family));
    std::ostringstream csv;
    csv << "method,seed,d,n,noise,linear_prop,a_top,shd,f1,runtime_ms,status\n";
    for (const auto& r : rows) {
        csv << r.method << ',' << r.seed << ',' << c.d << ',' << c.n << ',' << noise_name << ','
            << fmt_double(c.linear_prop) << ',' << fmt_optional(r.a_top) << ',' << fmt_optional(r.shd) << ','
            << fmt_optional(r.f1) << ',' << (timing ? fmt_double(r.runtime_ms) : "") << ',' << r.status << '\n';
    }
    io::write_text(out / "results.csv", csv.str());

    Json summary{{"config", c.to_json(true)}, {"methods", Json::object()}, {"failures", Json::array()}};
    for (const auto& m : methods) {
        std::vector<double> a, s, f, t;
        std::size_t ok = 0;
        for (const auto& r : rows) {
            if (r.method != m || r.status != "ok") continue;
            ++ok;
            if (r.a_top) a.push_back(*r.a_top);
            if (r.shd) s.push_back(*r.shd);
            if (r.f1) f.push_back(*r.f1);
            t.push_back(r.runtime_ms);
        }
        Json entry{{"runs", seeds.size()}, {"ok", ok}, {"a_top", summarize(a)}, {"shd", summarize(s)}, {"f1", summarize(f)}};
        if (timing) entry["runtime_ms"] = summarize(t);
        summary["methods"][m] = entry;
    }
    for (const auto& r : rows) {
        if (r.status != "ok") {
            summary["failures"].push_back(Json{{"method", r.method}, {"seed", r.seed}, {"status", r.status}, {"message", r.message}});
        }
    }
    io::write_text(out / "summary.json", summary.dump(2) + "\n");
    write_manifest(out, "benchmark", c.to_json(true));
    std::cout << "wrote " << rows.size() << " row(s) to " << (out / "results.csv").string() << "\n";
    return kOk;
}

// ---------------------------------------------------------------------------

struct MetricsArgs {
    std::string truth;
    std::string pred;
    std::string order;
    std::string out;
    bool double_count = false;
};

graph::TopologicalOrder parse_order(const std::string& text, const graph::Dag& truth) {
    graph::TopologicalOrder order;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok.erase(0, tok.find_first_not_of(" \t"));
        tok.erase(tok.find_last_not_of(" \t") + 1);
        const auto& labels = truth.labels();
        const auto it = std::find(labels.begin(), labels.end(), tok);
        if (it != labels.end()) {
            order.order.push_back(static_cast<Vertex>(it - labels.begin()));
            continue;
        }
        try {
            std::size_t used = 0;
            const auto v = std::stoull(tok, &used);
            if (used != tok.size()) throw std::invalid_argument(tok);
            order.order.push_back(static_cast<Vertex>(v));
        } catch (const std::logic_error&) {
            throw DataError("order entry '" + tok + "' is neither a label nor an index");
        }
    }
    try {
        graph::check_permutation(order.order, truth.num_vertices());
    } catch (const ParameterError& e) {
        throw DataError(e.what());
    }
    return order;
}

int cmd_metrics(const MetricsArgs& a) {
    if (a.order.empty() && a.pred.empty()) throw ParameterError("give --order and/or --pred");
    const auto truth = io::read_dag(a.truth);
    Json report = Json::object();
    if (!a.order.empty()) report["ordering"] = io::to_json(metrics::a_top(parse_order(a.order, truth), truth));
    if (!a.pred.empty()) {
        const auto pred = io::read_dag(a.pred);
        if (pred.num_vertices() != truth.num_vertices()) throw DataError("pred and truth vertex counts differ");
        report["graph"] = io::to_json(metrics::shd_f1(pred, truth, {a.double_count}));
    }
    const std::string text = report.dump(2) + "\n";
    if (a.out.empty()) {
        std::cout << text;
    } else {
        io::write_text(a.out, text);
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Topological ordering for mixed linear/nonlinear additive noise models"};
    app.set_version_flag("--version", std::string(kVersion));
    app.set_config("--config", "", "Read options from a TOML/INI file");
    app.require_subcommand(1);

    Campaign gen;
    auto* generate = app.add_subcommand("generate", "Write synthetic dataset bundles, one per seed");
    add_campaign_options(generate, gen, false);

    DiscoverArgs disc;
    auto* discover = app.add_subcommand("discover", "Order the columns of a CSV dataset");
    discover->add_option("--data", disc.data, "CSV with a header row")->required()->check(CLI::ExistingFile);
    discover->add_option("--truth", disc.truth, "Ground-truth DAG (.json or .csv) for scoring");
    discover->add_option("--out", disc.out, "Report path (default <output-dir>/report.json)");
    discover->add_option("--output-dir", disc.output_dir, "Output directory")->envname("LOSAM_OUTPUT_DIR");
    discover->add_option("--level", disc.level, "Significance level")->capture_default_str();
    discover->add_option("--permutations", disc.permutations, "HSIC permutations")->capture_default_str();
    discover->add_option("--seed", disc.seed, "Seed for permutation tests")->capture_default_str();
    discover->add_option("--regressor", disc.regressor, "krr or rf")->capture_default_str();
    discover->add_flag("--prune,!--no-prune", disc.prune, "Prune the full DAG implied by the order");
    discover->add_option("--timing", disc.timing, "include or omit runtimes")->capture_default_str();

    Campaign bench;
    auto* benchmark = app.add_subcommand("benchmark", "Run methods over seeds and score them");
    add_campaign_options(benchmark, bench, true);

    MetricsArgs met;
    auto* metrics_cmd = app.add_subcommand("metrics", "Score an order and/or a predicted DAG against a truth DAG");
    metrics_cmd->add_option("--truth", met.truth, "Truth DAG (.json or .csv)")->required()->check(CLI::ExistingFile);
    metrics_cmd->add_option("--order", met.order, "Comma-separated order of labels or indices");
    metrics_cmd->add_option("--pred", met.pred, "Predicted DAG (.json or .csv)")->check(CLI::ExistingFile);
    metrics_cmd->add_option("--out", met.out, "Write JSON here instead of stdout");
    metrics_cmd->add_flag("--double-count-reversed", met.double_count, "Count reversed edges twice in SHD");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfigError;
    }

    try {
        if (*generate) return cmd_generate(gen);
        if (*discover) return cmd_discover(disc);
        if (*benchmark) return cmd_benchmark(bench);
        if (*metrics_cmd) return cmd_metrics(met);
    } catch (const ParameterError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kDataError;
    } catch (const EstimatorError& e) {
        std::cerr << "estimator error: " << e.what() << "\n";
        return kEstimatorError;
    } catch (const GenerationError& e) {
        std::cerr << "generation error at vertex " << e.vertex() << ": " << e.what() << "\n";
        return kEstimatorError;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kDataError;
    }
    return kConfigError;
}
