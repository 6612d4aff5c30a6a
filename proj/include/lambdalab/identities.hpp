#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include "lambdalab/curvature.hpp"
#include "lambdalab/weighted_operator.hpp"

namespace lambdalab {

/// The input mesh does not satisfy a verifier's hypothesis.
class PreconditionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Sign of the lambda term in the Simons-type identity under the outward
/// normal convention, as resolved by simons_sign_oracle(). Frozen here.
inline constexpr int kSimonsLambdaSign = +1;

/// Norms are mass-weighted RMS, sqrt(sum m_i f_i^2 / sum m_i), over the
/// vertices whose closed 1-ring avoids the boundary.
struct ResidualReport {
    std::string identity;
    double absolute = 0.0;  ///< norm of lhs - rhs
    double relative = 0.0;  ///< absolute / scale (0 when the scale vanishes)
    double scale = 0.0;     ///< identity-specific normalization
    double lhs_max = 0.0;   ///< max |lhs| over interior vertices
    double rhs_max = 0.0;
    double lambda_residual_max = 0.0;
    double lambda_threshold = 0.0;
    bool exact_zero = false;  ///< both sides vanish identically (v = 0, or <v, n> = 0 up to round-off)
    Field pointwise;          ///< lhs - rhs per vertex (0 on boundary vertices)
};

struct VerifyOptions {
    /// Max |lambda_residual| accepted as "is a lambda-surface". Defaults to
    /// lambda_surface_threshold().
    std::optional<double> lambda_threshold;
    /// Simons only: max (max - min) / mean of |A|^2 accepted as "grad A ~ 0".
    double umbilic_tolerance = 0.05;
};

/// Ten times the expected discretization error of the lambda residual:
/// 10 * c * h^2 * kappa^3 with h the mean edge length, kappa^2 the max |A|^2
/// and c calibrated on icospheres.
double lambda_surface_threshold(const TriMesh& mesh, const CurvatureData& curvature);

/// L<v, n> = <v, n>/2.
ResidualReport verify_eigenfunction_identity(const TriMesh& mesh, double lambda, const Vec3& direction,
                                             const VerifyOptions& options = {});

/// Drift Laplacian of |x - x0|^2 against -<x, x - x0> - 2 lambda <n, x - x0> + 4.
ResidualReport verify_drift_distance_identity(const TriMesh& mesh, double lambda, const Vec3& center,
                                              const VerifyOptions& options = {});

/// Drift Laplacian of |A|^2 against 2(1/2 - |A|^2)|A|^2 + sign * 2 lambda <A^2, A>.
/// Restricted to surfaces with grad A ~ 0 (|A|^2 near constant); sign must be +-1.
ResidualReport verify_simons(const TriMesh& mesh, double lambda, int sign, const VerifyOptions& options = {});

/// Resolves the Simons lambda-term sign on the lambda = 1 sphere at the given
/// level: the sign whose residual is smaller.
int simons_sign_oracle(int level = 3);

}  // namespace lambdalab
