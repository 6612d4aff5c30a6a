#pragma once

#include <Eigen/SparseCore>

#include "lambdalab/curvature.hpp"
#include "lambdalab/mesh.hpp"

namespace lambdalab {

using SparseMatrix = Eigen::SparseMatrix<double>;

enum class OperatorKind { drift_laplacian, stability };

const char* to_string(OperatorKind kind);

/// Self-adjoint operator in the Gaussian-weighted mass inner product:
/// apply(f) = mass^{-1} * stiffness * f.
///
/// stiffness is the negative semidefinite weighted cotangent matrix, plus
/// diag(mass * potential) for the stability operator. The generalized
/// eigenvalues of (stiffness, mass) are therefore the eigenvalues of the
/// continuous operator itself. Bordered meshes get natural (Neumann) rows.
struct WeightedOperator {
    OperatorKind kind = OperatorKind::drift_laplacian;
    SparseMatrix stiffness;
    Field mass;       ///< vertex area * e^{-|x|^2/4}; strictly positive
    Field potential;  ///< zero for the drift Laplacian, |A|^2 + 1/2 otherwise

    Eigen::Index size() const { return mass.size(); }
    Field apply(const Field& f) const;
    /// <f, g> weighted by mass.
    double inner(const Field& f, const Field& g) const;
};

/// Sum over faces of area * e^{-|barycenter|^2/4}. Zero for an empty mesh.
double gaussian_area(const TriMesh& mesh);

/// e^{-|x|^2/4}.
double gaussian_weight(const Vec3& x);

WeightedOperator drift_laplacian(const TriMesh& mesh);
WeightedOperator stability_operator(const TriMesh& mesh);
WeightedOperator stability_operator(const TriMesh& mesh, const CurvatureData& curvature);

/// Sum_edges w_ij (f_i - f_j)^2 - Sum_i mass_i potential_i f_i^2, i.e. the
/// weighted Dirichlet energy minus the potential term. Equals -<f, L f>.
double quadratic_form(const WeightedOperator& op, const Field& f);
double quadratic_form(const TriMesh& mesh, const Field& f);

}  // namespace lambdalab
