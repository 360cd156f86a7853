#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace losam {

using Vertex = std::size_t;

/// Sorted, duplicate-free list of vertex indices.
using VertexSet = std::vector<Vertex>;

/// Invalid argument supplied by the caller (bad size, out-of-range probability, ...).
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Input data cannot be used as given (constant column, malformed file, non-finite values).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Synthetic data generation produced an unusable value.
class GenerationError : public std::runtime_error {
public:
    GenerationError(const std::string& what, Vertex vertex)
        : std::runtime_error(what), vertex_(vertex) {}

    Vertex vertex() const noexcept { return vertex_; }

private:
    Vertex vertex_;
};

/// A statistical estimator failed (singular system, degenerate input, empty candidate set).
class EstimatorError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline bool contains(const VertexSet& set, Vertex v) {
    for (Vertex x : set) {
        if (x == v) return true;
    }
    return false;
}

}  // namespace losam
