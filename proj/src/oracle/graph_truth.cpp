#include <algorithm>
#include <cmath>

#include "losam/oracle.hpp"

namespace losam::discovery {

namespace {

IndependenceResult decision(bool independent) {
    return stats::make_result(independent ? 0.0 : 1.0, independent ? 1.0 : 0.0,
                              stats::kDefaultLevel);
}

LinearCoefficients from_spec(const synth::AnmSpec& spec) {
    LinearCoefficients out(spec.dag.num_vertices());
    for (Vertex v = 0; v < spec.dag.num_vertices(); ++v) {
        if (const auto* lin = std::get_if<synth::LinearMech>(&spec.mechanisms.at(v))) {
            out[v] = lin->coefficients;
        }
    }
    return out;
}

using Form = GraphTruthOracle::NoiseForm;
using Relation = GraphTruthOracle::Relation;

Form zero_form(std::size_t d) {
    Form f;
    f.linear = true;
    f.coefficients.assign(d, 0.0);
    f.support.assign(d, false);
    return f;
}

Form noise_term(std::size_t d, Vertex v) {
    Form f = zero_form(d);
    f.coefficients[v] = 1.0;
    f.support[v] = true;
    return f;
}

/// acc += scale * term
void accumulate(Form& acc, const Form& term, double scale) {
    for (std::size_t i = 0; i < acc.support.size(); ++i) {
        if (term.support[i]) acc.support[i] = true;
    }
    if (!term.linear) acc.linear = false;
    if (acc.linear) {
        for (std::size_t i = 0; i < acc.coefficients.size(); ++i) {
            acc.coefficients[i] += scale * term.coefficients[i];
        }
    }
}

bool supports_overlap(const Form& a, const Form& b) {
    for (std::size_t i = 0; i < a.support.size(); ++i) {
        if (a.support[i] && b.support[i]) return true;
    }
    return false;
}

class GraphTruthResiduals final : public ResidualSet {
public:
    GraphTruthResiduals(std::vector<Form> forms, std::vector<double> t_star)
        : forms_(std::move(forms)), t_star_(std::move(t_star)) {}

    IndependenceResult linear_residual_test(Vertex regressor, Vertex target) override {
        const Form& ej = forms_.at(regressor);
        const Form& ei = forms_.at(target);
        if (!supports_overlap(ei, ej)) return decision(true);
        if (!ei.linear || !ej.linear) return decision(false);
        // q = e_i - b e_j with the population least-squares slope (equal noise variances).
        double dot = 0.0, norm = 0.0, scale = 0.0;
        for (std::size_t k = 0; k < ej.coefficients.size(); ++k) {
            dot += ei.coefficients[k] * ej.coefficients[k];
            norm += ej.coefficients[k] * ej.coefficients[k];
            scale = std::max({scale, std::abs(ei.coefficients[k]), std::abs(ej.coefficients[k])});
        }
        if (norm == 0.0) return decision(true);
        const double b = dot / norm;
        // Independent non-Gaussian sums are independent iff they share no noise term.
        for (std::size_t k = 0; k < ej.coefficients.size(); ++k) {
            if (ej.coefficients[k] == 0.0) continue;
            const double q = ei.coefficients[k] - b * ej.coefficients[k];
            if (std::abs(q) > 1e-9 * std::max(scale, 1.0)) return decision(false);
        }
        return decision(true);
    }

    double t_star(Vertex u) override { return t_star_.at(u); }

private:
    std::vector<Form> forms_;
    std::vector<double> t_star_;
};

}  // namespace

GraphTruthOracle::GraphTruthOracle(graph::Dag dag)
    : GraphTruthOracle(std::move(dag), LinearCoefficients{}) {}

GraphTruthOracle::GraphTruthOracle(graph::Dag dag, LinearCoefficients linear)
    : dag_(std::move(dag)), linear_(std::move(linear)) {
    linear_.resize(dag_.num_vertices());
    for (Vertex v = 0; v < dag_.num_vertices(); ++v) {
        if (linear_[v] && linear_[v]->size() != dag_.parents(v).size()) {
            throw ParameterError("GraphTruthOracle: linear coefficient count differs from parent count at " +
                                 dag_.label(v));
        }
        if (dag_.parents(v).empty()) linear_[v].reset();
    }
    ancestors_ = dag_.ancestor_matrix();
}

GraphTruthOracle::GraphTruthOracle(const synth::AnmSpec& spec)
    : GraphTruthOracle(spec.dag, from_spec(spec)) {}

std::vector<GraphTruthOracle::NoiseForm> GraphTruthOracle::residual_forms(
    std::span<const Vertex> covariates) const {
    const std::size_t d = dag_.num_vertices();
    std::vector<bool> in_s(d, false), an_s(d, false);
    for (Vertex s : covariates) {
        in_s.at(s) = true;
        an_s[s] = true;
        for (Vertex u = 0; u < d; ++u) {
            if (ancestors_[s][u]) an_s[u] = true;
        }
    }
    const auto order = dag_.topological_order();

    // Full (unregressed) noise expansion of every vertex.
    std::vector<Form> full(d);
    for (Vertex v : order) {
        Form f = noise_term(d, v);
        const auto& parents = dag_.parents(v);
        for (std::size_t k = 0; k < parents.size(); ++k) {
            const double a = linear_[v] ? (*linear_[v])[k] : 0.0;
            accumulate(f, full[parents[k]], a);
        }
        if (!linear_[v] && !parents.empty()) f.linear = false;
        if (!f.linear) std::fill(f.coefficients.begin(), f.coefficients.end(), 0.0);
        full[v] = std::move(f);
    }

    std::vector<Form> forms(d);
    for (Vertex v : order) {
        Form f;
        bool touches = an_s[v];
        for (Vertex u = 0; u < d && !touches; ++u) {
            if (ancestors_[v][u] && an_s[u]) touches = true;
        }
        const auto& parents = dag_.parents(v);
        if (in_s[v]) {
            f = zero_form(d);
            f.relation = Relation::Additive;
        } else if (!touches) {
            f = full[v];
            f.relation = Relation::Independent;
        } else {
            bool additive = false;
            if (!an_s[v]) {
                if (linear_[v]) {
                    additive = std::all_of(parents.begin(), parents.end(), [&](Vertex p) {
                        return forms[p].relation != Relation::Mixed;
                    });
                } else {
                    additive = std::all_of(parents.begin(), parents.end(),
                                           [&](Vertex p) { return in_s[p]; });
                }
            }
            if (additive) {
                f = noise_term(d, v);
                if (linear_[v]) {
                    for (std::size_t k = 0; k < parents.size(); ++k) {
                        accumulate(f, forms[parents[k]], (*linear_[v])[k]);
                    }
                }
                if (!f.linear) std::fill(f.coefficients.begin(), f.coefficients.end(), 0.0);
                f.relation = Relation::Additive;
            } else {
                f = zero_form(d);
                f.linear = false;
                for (Vertex u = 0; u < d; ++u) {
                    f.support[u] = u == v || ancestors_[v][u] || an_s[u];
                }
                f.relation = Relation::Mixed;
            }
        }
        forms[v] = std::move(f);
    }
    return forms;
}

IndependenceResult GraphTruthOracle::marginal_test(Vertex a, Vertex b) {
    return decision(graph::d_separated(dag_, a, b));
}

IndependenceResult GraphTruthOracle::residual_test(Vertex target, std::span<const Vertex> covariates,
                                                   Vertex probe) {
    if (std::find(covariates.begin(), covariates.end(), target) != covariates.end()) {
        throw ParameterError("residual_test: target is one of the covariates");
    }
    const auto forms = residual_forms(covariates);
    if (forms.at(target).relation != Relation::Mixed) return decision(true);
    // A mixed residual is a function of the target and the remaining covariates;
    // it can only ignore the probe when the probe is marginally independent of all of them.
    bool separated = probe != target && graph::d_separated(dag_, probe, target);
    for (Vertex s : covariates) {
        if (!separated) break;
        if (s != probe) separated = graph::d_separated(dag_, probe, s);
    }
    return decision(separated);
}

IndependenceResult GraphTruthOracle::conditional_test(Vertex a, Vertex b, Vertex given) {
    const Vertex z[] = {given};
    return decision(graph::d_separated(dag_, a, b, z));
}

std::unique_ptr<ResidualSet> GraphTruthOracle::residualize(std::span<const Vertex> sorted,
                                                           std::span<const Vertex> unsorted) {
    auto forms = residual_forms(sorted);
    std::vector<double> t_star(dag_.num_vertices(), 0.0);
    for (Vertex u : unsorted) {
        if (forms.at(u).relation != Relation::Mixed) continue;
        std::size_t connected = 0;
        for (Vertex p : sorted) {
            if (!graph::d_separated(dag_, u, p)) ++connected;
        }
        t_star[u] = static_cast<double>(std::max<std::size_t>(connected, 1));
    }
    return std::make_unique<GraphTruthResiduals>(std::move(forms), std::move(t_star));
}

}  // namespace losam::discovery
