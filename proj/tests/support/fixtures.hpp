#pragma once

#include <functional>
#include <vector>

#include "losam/graph.hpp"
#include "losam/oracle.hpp"
#include "losam/rng.hpp"
#include "losam/synth.hpp"

namespace fixtures {

using losam::Vertex;
using losam::graph::Dag;

// Roots i, j, k; i -> m; i -> n <- j; n -> h <- k.
enum VpExample : Vertex { VP_I = 0, VP_J, VP_K, VP_M, VP_N, VP_H };
inline Dag vp_example() {
    return Dag(6, {{VP_I, VP_M}, {VP_I, VP_N}, {VP_J, VP_N}, {VP_N, VP_H}, {VP_K, VP_H}},
               {"x_i", "x_j", "x_k", "x_m", "x_n", "x_h"});
}

// x1 -> x3 <- x2, x1 -> x4 -> x5 (0-indexed), all nonlinear.
inline Dag example2() { return Dag(5, {{0, 2}, {1, 2}, {0, 3}, {3, 4}}, {"x1", "x2", "x3", "x4", "x5"}); }

// Walkthrough DAG: roots i, j, k; n, h are MRDs; m is a VLC under k; p is
// linear in m (an LD once the roots are sorted); h is nonlinear in n.
enum Walkthrough : Vertex { WK_I = 0, WK_J, WK_K, WK_N, WK_M, WK_P, WK_H };
inline Dag walkthrough() {
    return Dag(7,
               {{WK_I, WK_N}, {WK_J, WK_N}, {WK_N, WK_H}, {WK_K, WK_H}, {WK_K, WK_M}, {WK_K, WK_P},
                {WK_M, WK_P}},
               {"x_i", "x_j", "x_k", "x_n", "x_m", "x_p", "x_h"});
}
inline losam::discovery::LinearCoefficients walkthrough_linear() {
    losam::discovery::LinearCoefficients lin(7);
    lin[WK_P] = std::vector<double>{0.8, 1.2};  // parents (k, m)
    return lin;
}

// i -> j (nonlinear), j -> k (linear), j -> h (nonlinear); pi = {i}.
enum LdExample : Vertex { LD_I = 0, LD_J, LD_K, LD_H };
inline Dag ld_example() {
    return Dag(4, {{LD_I, LD_J}, {LD_J, LD_K}, {LD_J, LD_H}}, {"x_i", "x_j", "x_k", "x_h"});
}
inline losam::discovery::LinearCoefficients ld_example_linear() {
    losam::discovery::LinearCoefficients lin(4);
    lin[LD_K] = std::vector<double>{1.1};
    return lin;
}

inline Dag chain(std::size_t d) {
    std::vector<losam::graph::Edge> edges;
    for (Vertex v = 0; v + 1 < d; ++v) edges.emplace_back(v, v + 1);
    return Dag(d, edges);
}

inline Dag collider() { return Dag(3, {{0, 2}, {1, 2}}); }

inline Dag fully_connected(std::size_t d) {
    std::vector<losam::graph::Edge> edges;
    for (Vertex a = 0; a < d; ++a) {
        for (Vertex b = a + 1; b < d; ++b) edges.emplace_back(a, b);
    }
    return Dag(d, edges);
}

/// AnmSpec whose vertex v is linear iff is_linear(v); weights drawn from `seed`.
inline losam::synth::AnmSpec spec_with(const Dag& dag, const std::function<bool(Vertex)>& is_linear,
                                       std::uint64_t seed,
                                       losam::synth::NoiseFamily noise = losam::synth::NoiseFamily::Uniform) {
    auto lin = losam::synth::sample_anm_spec(dag, 1.0, seed, noise);
    auto non = losam::synth::sample_anm_spec(dag, 0.0, seed, noise);
    for (Vertex v = 0; v < dag.num_vertices(); ++v) {
        if (!dag.parents(v).empty() && !is_linear(v)) lin.mechanisms[v] = non.mechanisms[v];
    }
    return lin;
}

/// Single tanh unit x = tanh(gain * sum(parents)) + noise on every non-root.
inline losam::synth::AnmSpec tanh_spec(const Dag& dag, double gain = 3.0) {
    losam::synth::AnmSpec spec;
    spec.dag = dag;
    spec.mechanisms.resize(dag.num_vertices());
    for (Vertex v = 0; v < dag.num_vertices(); ++v) {
        const auto k = static_cast<Eigen::Index>(dag.parents(v).size());
        if (k == 0) continue;
        losam::synth::MlpMech m;
        m.input_weights = Eigen::MatrixXd::Zero(k, losam::synth::kHiddenUnits);
        m.input_weights.col(0).setConstant(gain);
        m.output_weights = Eigen::VectorXd::Zero(losam::synth::kHiddenUnits);
        m.output_weights(0) = 1.0;
        spec.mechanisms[v] = m;
    }
    return spec;
}

/// Random linear/nonlinear assignment for a graph-truth oracle.
inline losam::discovery::LinearCoefficients random_linear(const Dag& dag, double linear_prob,
                                                          std::uint64_t seed) {
    losam::Rng rng(seed);
    losam::discovery::LinearCoefficients lin(dag.num_vertices());
    for (Vertex v = 0; v < dag.num_vertices(); ++v) {
        if (dag.parents(v).empty() || !rng.bernoulli(linear_prob)) continue;
        std::vector<double> c;
        for (std::size_t k = 0; k < dag.parents(v).size(); ++k) {
            c.push_back((rng.bernoulli(0.5) ? 1.0 : -1.0) * rng.uniform(0.5, 1.5));
        }
        lin[v] = c;
    }
    return lin;
}

}  // namespace fixtures
