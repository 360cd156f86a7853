#include "losam/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace losam::io {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    std::string out(s.substr(b, e - b));
    if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
    return out;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        out.push_back(trim(std::string_view(line).substr(start, comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

/// Non-blank lines with their 1-based line numbers.
std::vector<std::pair<std::size_t, std::string>> lines_of(const std::string& text) {
    std::vector<std::pair<std::size_t, std::string>> out;
    std::istringstream in(text);
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (trim(line).empty()) continue;
        out.emplace_back(number, line);
    }
    return out;
}

bool parse_double(const std::string& field, double& value) {
    if (field.empty()) return false;
    const char* begin = field.data();
    if (*begin == '+') ++begin;
    const auto [ptr, ec] = std::from_chars(begin, field.data() + field.size(), value);
    return ec == std::errc() && ptr == field.data() + field.size();
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

// ---------------------------------------------------------------------------

Json dag_to_json(const graph::Dag& dag) {
    Json edges = Json::array();
    for (const auto& [p, c] : dag.edges()) edges.push_back({p, c});
    Json labels = Json::array();
    for (Vertex v = 0; v < dag.num_vertices(); ++v) labels.push_back(dag.label(v));
    return Json{{"d", dag.num_vertices()}, {"edges", edges}, {"labels", labels}};
}

graph::Dag dag_from_json(const Json& j) {
    try {
        const auto d = j.at("d").get<std::size_t>();
        std::vector<graph::Edge> edges;
        for (const auto& e : j.at("edges")) {
            if (!e.is_array() || e.size() != 2) throw DataError("dag json: each edge must be [parent, child]");
            edges.emplace_back(e[0].get<Vertex>(), e[1].get<Vertex>());
        }
        std::vector<std::string> labels;
        if (j.contains("labels")) labels = j.at("labels").get<std::vector<std::string>>();
        return graph::Dag(d, std::move(edges), std::move(labels));
    } catch (const Json::exception& e) {
        throw DataError(std::string("dag json: ") + e.what());
    } catch (const ParameterError& e) {
        throw DataError(std::string("dag json: ") + e.what());
    }
}

std::string dag_to_adjacency_csv(const graph::Dag& dag) {
    const std::size_t d = dag.num_vertices();
    std::string out;
    for (Vertex v = 0; v < d; ++v) out += (v ? "," : "") + dag.label(v);
    out += '\n';
    for (Vertex p = 0; p < d; ++p) {
        for (Vertex c = 0; c < d; ++c) out += (c ? "," : "") + std::string(dag.has_edge(p, c) ? "1" : "0");
        out += '\n';
    }
    return out;
}

graph::Dag dag_from_adjacency_csv(const std::string& text) {
    auto lines = lines_of(text);
    if (lines.empty()) throw DataError("adjacency csv: empty input");
    std::vector<std::string> labels;
    auto first = split_fields(lines.front().second);
    double probe = 0;
    if (!parse_double(first.front(), probe)) {
        labels = first;
        lines.erase(lines.begin());
    }
    const std::size_t d = lines.size();
    if (!labels.empty() && labels.size() != d) {
        throw DataError("adjacency csv: header has " + std::to_string(labels.size()) + " labels but " +
                        std::to_string(d) + " rows follow");
    }
    std::vector<graph::Edge> edges;
    for (std::size_t r = 0; r < d; ++r) {
        const auto fields = split_fields(lines[r].second);
        if (fields.size() != d) {
            throw DataError("adjacency csv: line " + std::to_string(lines[r].first) + " has " +
                            std::to_string(fields.size()) + " entries, expected " + std::to_string(d));
        }
        for (std::size_t c = 0; c < d; ++c) {
            double v = 0;
            if (!parse_double(fields[c], v)) {
                throw DataError("adjacency csv: line " + std::to_string(lines[r].first) + ", column " +
                                std::to_string(c + 1) + ": not a number: '" + fields[c] + "'");
            }
            if (v != 0.0) edges.emplace_back(r, c);
        }
    }
    try {
        return graph::Dag(d, std::move(edges), std::move(labels));
    } catch (const ParameterError& e) {
        throw DataError(std::string("adjacency csv: ") + e.what());
    }
}

graph::Dag read_dag(const fs::path& path) {
    const std::string text = read_text(path);
    if (path.extension() == ".csv") return dag_from_adjacency_csv(text);
    try {
        return dag_from_json(Json::parse(text));
    } catch (const Json::parse_error& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

void write_dag(const graph::Dag& dag, const fs::path& path) {
    if (path.extension() == ".csv") {
        write_text(path, dag_to_adjacency_csv(dag));
    } else {
        write_text(path, dag_to_json(dag).dump(2) + "\n");
    }
}

// ---------------------------------------------------------------------------

std::string dataset_to_csv(const synth::Dataset& data) {
    std::string out;
    for (std::size_t c = 0; c < data.num_columns(); ++c) out += (c ? "," : "") + data.column_labels[c];
    out += '\n';
    for (Eigen::Index r = 0; r < data.values.rows(); ++r) {
        for (Eigen::Index c = 0; c < data.values.cols(); ++c) {
            if (c) out += ',';
            out += format_double(data.values(r, c));
        }
        out += '\n';
    }
    return out;
}

synth::Dataset dataset_from_csv(const std::string& text) {
    const auto lines = lines_of(text);
    if (lines.empty()) throw DataError("data csv: empty input");
    synth::Dataset data;
    data.column_labels = split_fields(lines.front().second);
    const std::size_t d = data.column_labels.size();
    for (std::size_t c = 0; c < d; ++c) {
        if (data.column_labels[c].empty()) {
            throw DataError("data csv: line " + std::to_string(lines.front().first) + ", column " +
                            std::to_string(c + 1) + ": empty column label");
        }
    }
    if (lines.size() < 2) throw DataError("data csv: no data rows");
    data.values.resize(static_cast<Eigen::Index>(lines.size() - 1), static_cast<Eigen::Index>(d));
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const auto fields = split_fields(lines[r].second);
        if (fields.size() != d) {
            throw DataError("data csv: line " + std::to_string(lines[r].first) + " has " +
                            std::to_string(fields.size()) + " fields, expected " + std::to_string(d));
        }
        for (std::size_t c = 0; c < d; ++c) {
            double v = 0;
            if (!parse_double(fields[c], v) || !std::isfinite(v)) {
                throw DataError("data csv: line " + std::to_string(lines[r].first) + ", column " +
                                std::to_string(c + 1) + " ('" + data.column_labels[c] +
                                "'): invalid value '" + fields[c] + "'");
            }
            data.values(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(c)) = v;
        }
    }
    return data;
}

synth::Dataset read_dataset(const fs::path& path) {
    try {
        return dataset_from_csv(read_text(path));
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

void write_dataset(const synth::Dataset& data, const fs::path& path) {
    write_text(path, dataset_to_csv(data));
}

// ---------------------------------------------------------------------------

Json spec_to_json(const synth::AnmSpec& spec) {
    Json mechanisms = Json::array();
    for (const auto& m : spec.mechanisms) {
        if (const auto* lin = std::get_if<synth::LinearMech>(&m)) {
            mechanisms.push_back({{"type", "linear"}, {"coefficients", lin->coefficients}});
        } else if (const auto* mlp = std::get_if<synth::MlpMech>(&m)) {
            Json input = Json::array();
            for (Eigen::Index r = 0; r < mlp->input_weights.rows(); ++r) {
                std::vector<double> row(mlp->input_weights.cols());
                for (Eigen::Index c = 0; c < mlp->input_weights.cols(); ++c) {
                    row[static_cast<std::size_t>(c)] = mlp->input_weights(r, c);
                }
                input.push_back(row);
            }
            std::vector<double> output(mlp->output_weights.data(),
                                       mlp->output_weights.data() + mlp->output_weights.size());
            mechanisms.push_back({{"type", "mlp"}, {"input_weights", input}, {"output_weights", output}});
        } else {
            mechanisms.push_back(nullptr);
        }
    }
    return Json{{"dag", dag_to_json(spec.dag)},
                {"noise_family", std::string(synth::to_string(spec.noise_family))},
                {"noise_variance", spec.noise_variance},
                {"mechanisms", mechanisms}};
}

synth::AnmSpec spec_from_json(const Json& j) {
    synth::AnmSpec spec;
    try {
        spec.dag = dag_from_json(j.at("dag"));
        spec.noise_family = synth::parse_noise_family(j.at("noise_family").get<std::string>());
        spec.noise_variance = j.at("noise_variance").get<double>();
        for (const auto& m : j.at("mechanisms")) {
            if (m.is_null()) {
                spec.mechanisms.emplace_back(std::monostate{});
                continue;
            }
            const auto type = m.at("type").get<std::string>();
            if (type == "linear") {
                spec.mechanisms.emplace_back(
                    synth::LinearMech{m.at("coefficients").get<std::vector<double>>()});
            } else if (type == "mlp") {
                const auto rows = m.at("input_weights").get<std::vector<std::vector<double>>>();
                const auto out = m.at("output_weights").get<std::vector<double>>();
                synth::MlpMech mech;
                mech.input_weights.resize(static_cast<Eigen::Index>(rows.size()),
                                          static_cast<Eigen::Index>(synth::kHiddenUnits));
                for (std::size_t r = 0; r < rows.size(); ++r) {
                    if (rows[r].size() != synth::kHiddenUnits) {
                        throw DataError("spec json: MLP input row has wrong width");
                    }
                    for (std::size_t c = 0; c < synth::kHiddenUnits; ++c) {
                        mech.input_weights(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                            rows[r][c];
                    }
                }
                mech.output_weights = Eigen::Map<const Eigen::VectorXd>(
                    out.data(), static_cast<Eigen::Index>(out.size()));
                spec.mechanisms.emplace_back(std::move(mech));
            } else {
                throw DataError("spec json: unknown mechanism type '" + type + "'");
            }
        }
        spec.validate();
    } catch (const Json::exception& e) {
        throw DataError(std::string("spec json: ") + e.what());
    } catch (const ParameterError& e) {
        throw DataError(std::string("spec json: ") + e.what());
    }
    return spec;
}

// ---------------------------------------------------------------------------

void write_bundle(const fs::path& dir, const synth::GeneratedInstance& instance, std::uint64_t seed) {
    fs::create_directories(dir);
    write_text(dir / "dag.json", dag_to_json(instance.dag()).dump(2) + "\n");
    write_text(dir / "spec.json", spec_to_json(instance.spec).dump(2) + "\n");
    write_dataset(instance.data, dir / "data.csv");
    const Json meta{{"seed", seed},
                    {"d", instance.data.num_columns()},
                    {"n", instance.data.num_samples()},
                    {"noise_family", std::string(synth::to_string(instance.spec.noise_family))},
                    {"r2_sortability", optional_number(instance.r2_sortability)},
                    {"var_sortability_raw", optional_number(instance.var_sortability_raw)},
                    {"attempts", instance.attempts},
                    {"threshold_warning", instance.threshold_warning}};
    write_text(dir / "meta.json", meta.dump(2) + "\n");
}

Bundle read_bundle(const fs::path& dir) {
    Bundle b;
    try {
        b.spec = spec_from_json(Json::parse(read_text(dir / "spec.json")));
        b.meta = Json::parse(read_text(dir / "meta.json"));
    } catch (const Json::parse_error& e) {
        throw DataError(dir.string() + ": " + e.what());
    }
    b.data = read_dataset(dir / "data.csv");
    return b;
}

// ---------------------------------------------------------------------------

Json to_json(const stats::IndependenceResult& r) {
    return Json{{"statistic", r.statistic},
                {"p_value", r.p_value},
                {"independent", r.independent},
                {"level", r.level}};
}

Json to_json(const discovery::RootFinderTrace& t) {
    Json pairwise = Json::array();
    for (std::size_t a = 0; a < t.pairwise.size(); ++a) {
        for (std::size_t b = a + 1; b < t.pairwise.size(); ++b) {
            Json entry = to_json(t.pairwise[a][b]);
            entry["a"] = a;
            entry["b"] = b;
            pairwise.push_back(std::move(entry));
        }
    }
    Json identified = Json::array();
    for (std::size_t i = 0; i < t.identified.size(); ++i) {
        for (std::size_t j = 0; j < t.identified[i].size(); ++j) {
            if (t.identified[i][j]) identified.push_back({i, j});
        }
    }
    Json out{{"pairwise", pairwise},
             {"vp_inducers", t.vp_inducers},
             {"isolated_roots", t.isolated_roots},
             {"reduced", t.reduced},
             {"identified_ancestor_pairs", identified},
             {"candidate_superset", t.candidate_superset},
             {"confirmed_roots", t.confirmed_roots},
             {"fallback_used", t.fallback_used},
             {"roots", t.roots},
             {"warnings", t.warnings}};
    if (t.cross_check_roots) {
        out["cross_check_roots"] = *t.cross_check_roots;
        out["cross_check_disagreements"] = t.cross_check_disagreements;
    }
    return out;
}

Json to_json(const discovery::SortState& s) {
    Json t_star = Json::object();
    for (const auto& [v, value] : s.t_star) t_star[std::to_string(v)] = value;
    Json out{{"pi", s.pi},
             {"unsorted", s.unsorted},
             {"ld_pruned", s.ld_pruned},
             {"candidates", s.candidates},
             {"t_star", t_star},
             {"selected", s.selected ? Json(*s.selected) : Json(nullptr)}};
    if (!s.residuals.empty()) {
        Json residuals = Json::object();
        for (const auto& [v, e] : s.residuals) {
            residuals[std::to_string(v)] = std::vector<double>(e.data(), e.data() + e.size());
        }
        out["residuals"] = residuals;
    }
    return out;
}

Json to_json(const discovery::RegressionLedger& ledger) {
    auto counts = [](const std::map<std::size_t, std::size_t>& m) {
        Json j = Json::object();
        for (const auto& [k, n] : m) j[std::to_string(k)] = n;
        return j;
    };
    return Json{{"root_finder_by_covariates", counts(ledger.root_finder)},
                {"sort_finder_by_covariates", counts(ledger.sort_finder)},
                {"root_finder_max_covariates", ledger.root_finder_max_covariates},
                {"covariate_bound_violations", ledger.covariate_bound_violations}};
}

Json to_json(const metrics::OrderingScore& s) {
    Json out{{"d_top", s.d_top}, {"edge_count", s.edge_count}, {"a_top", optional_number(s.a_top)}};
    if (!s.note.empty()) out["note"] = s.note;
    return out;
}

Json to_json(const metrics::GraphScore& s) {
    return Json{{"shd", s.shd},         {"f1", s.f1}, {"precision", s.precision}, {"recall", s.recall},
                {"tp", s.tp},           {"fp", s.fp}, {"fn", s.fn},               {"reversed", s.reversed}};
}

// ---------------------------------------------------------------------------

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ParameterError("cannot write " + path.string());
    out << text;
    if (!out) throw ParameterError("write failed for " + path.string());
}

}  // namespace losam::io
