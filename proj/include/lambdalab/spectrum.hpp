#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "lambdalab/weighted_operator.hpp"

namespace lambdalab {

class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class SpectrumEnd { largest, smallest };

const char* to_string(SpectrumEnd end);
SpectrumEnd parse_spectrum_end(const std::string& text);

struct SpectrumOptions {
    double tolerance = 1e-8;
    int max_iterations = 500;
    std::uint64_t seed = 0x5eed;
    /// Problems up to this size are solved densely.
    Eigen::Index dense_limit = 400;
};

/// Extreme generalized eigenpairs of (stiffness, mass).
struct Spectrum {
    SpectrumEnd which_end = SpectrumEnd::largest;
    /// Descending for `largest`, ascending for `smallest`.
    std::vector<double> eigenvalues;
    /// Mass-orthonormal; each scaled so that sum(mass * v) >= 0.
    std::vector<Field> eigenvectors;
    /// |stiffness v - mu mass v| / (|mass v| max(1, |mu|)).
    std::vector<double> residuals;
    int iterations = 0;
    bool dense = false;
};

/// Throws std::invalid_argument unless 1 <= k < size, and SolverError when
/// the iteration does not reach the tolerance.
Spectrum spectrum(const WeightedOperator& op, int k, SpectrumEnd end, const SpectrumOptions& options = {});

/// Relative residual of one pair, as reported in Spectrum::residuals.
double eigen_residual(const WeightedOperator& op, double mu, const Field& v);

}  // namespace lambdalab
