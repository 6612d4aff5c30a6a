#pragma once

#include <vector>

#include "lambdalab/mesh.hpp"

namespace lambdalab {

/// Discrete metric data shared by the curvature and operator assembly.
struct CotanGeometry {
    /// Mixed Voronoi vertex areas (Voronoi on non-obtuse triangles, area/2 or
    /// area/4 splits on obtuse ones). They partition the total area exactly.
    Field vertex_area;
    /// Per edge: (cot a + cot b) / 2 over the opposite angles, clamped at 0.
    std::vector<double> edge_weight;
    /// Number of edges whose weight was negative before clamping.
    int clamped_weights = 0;
};

CotanGeometry cotan_geometry(const TriMesh& mesh);

/// Area-weighted vertex normals, oriented by the face winding.
std::vector<Vec3> vertex_normals(const TriMesh& mesh);

struct MeanCurvature {
    std::vector<Vec3> normal;
    /// H = -<Δx, n>. Positive on spheres with outward normal (H = 2/r).
    Field H;
};

/// Normals and mean curvature only; the hot path for residual evaluations.
/// At boundary vertices the cotangent formula is one-sided, so H there falls
/// back to the trace of the fitted shape operator.
MeanCurvature mean_curvature(const TriMesh& mesh);

/// Per-vertex second-fundamental-form data. Principal values come from a
/// height function fitted over the 2-ring in the tangent frame (degree 4,
/// or degree 2 on small or boundary rings). Signs follow the same convention
/// as H: both positive on an outward-oriented sphere.
struct CurvatureData {
    /// Normals of the fitted height functions. Smoother than area-weighted
    /// normals, which matters once a Laplacian is applied to <v, n>.
    std::vector<Vec3> normal;
    Field H;
    Field A_norm2;  ///< k1^2 + k2^2
    Field A3;       ///< k1^3 + k2^3, i.e. <A^2, A>
    Field kappa1;   ///< larger principal value
    Field kappa2;
    Field vertex_area;
    int clamped_weights = 0;

    /// k1 * k2 (determinant of the fitted shape operator).
    double gauss(Eigen::Index i) const { return kappa1[i] * kappa2[i]; }
};

CurvatureData curvature(const TriMesh& mesh);

/// H - <x, n>/2 - lambda per vertex. Zero exactly on lambda-surfaces.
Field lambda_residual(const TriMesh& mesh, double lambda);
Field lambda_residual(const TriMesh& mesh, const MeanCurvature& mc, double lambda);
Field lambda_residual(const TriMesh& mesh, const CurvatureData& curvature, double lambda);

/// Height-function fit at one vertex in the tangent frame of `normal`.
struct JetFit {
    double kappa1 = 0.0;
    double kappa2 = 0.0;
    /// Normal of the fitted graph at the vertex, same orientation as the input.
    Vec3 normal = Vec3::Zero();
};

JetFit fit_jet(const TriMesh& mesh, int vertex, const Vec3& normal);

}  // namespace lambdalab
