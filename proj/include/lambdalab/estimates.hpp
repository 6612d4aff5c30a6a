#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lambdalab/mesh.hpp"

namespace lambdalab {

class EstimateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Verdict { pass, fail, informational };

const char* to_string(Verdict verdict);

struct ProfilePoint {
    double s = 0.0;
    double value = 0.0;
};

/// margin = rhs - lhs; verdict pass iff margin >= -tolerance for checked
/// inequalities. Informational reports carry lhs = rhs = the measured value.
struct EstimateReport {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    double margin = 0.0;
    double tolerance = 0.0;
    Verdict verdict = Verdict::informational;
    std::map<std::string, double> parameters;
    /// Derived quantities (genus, D', hypothesis integrals, measured constants).
    std::map<std::string, double> measured;
    std::vector<ProfilePoint> profile;
    std::string note;
};

/// Sets margin, tolerance = 1e-9 max(1, |rhs|), and verdict.
void settle(EstimateReport& report, bool checked = true);

nlohmann::ordered_json to_json(const EstimateReport& report);

/// Integral of a per-vertex field over the vertices within `radius` of
/// `center`, weighted by mixed Voronoi areas of the whole mesh.
double ball_integral(const TriMesh& mesh, const Field& vertex_area, const Field& f, const Vec3& center, double radius);

/// Index of the vertex nearest to x0; throws EstimateError when it is
/// farther than `tolerance` (default: twice the mean edge length).
int snap_to_vertex(const TriMesh& mesh, const Vec3& x0, double tolerance = -1.0);

/// (1 - eps) int_{B_r} |A|^2 <= int_{B_R} H^2 + 8 pi g(M cap B_R) + 24 pi D' R^2 / (eps (R - r)^2),
/// D' = sup over s in [r, R] (33-point grid) of area(M cap B_s) / (pi s^2).
EstimateReport gauss_bonnet_check(const TriMesh& mesh, const Vec3& x0, double r, double big_r, double eps);

/// g(s) = s^-2 int_{B_s(x0)} f e^{-|x|^2/4} on 32 equally spaced radii from
/// min(2 mean edge, t/2) to t, with cells entering the ball through a linear
/// ramp of width sqrt(vertex area). K is the smallest constant with e^{K s} g(s)
/// nondecreasing on the grid (pairs with g = 0 on the left impose nothing).
/// Pass iff K is finite; the profile holds g. Requires f >= 0 and a discrete
/// lambda-surface (PreconditionError).
EstimateReport monotonicity_profile(const TriMesh& mesh, double lambda, const Vec3& x0, const Field& f, double t);

/// max over sigma_k = r k / 32 of sigma^2 sup_{B_{r - sigma}(x0)} |A|^2 with
/// x0 snapped to the mesh; reports int_{B_r} |A|^2 as "total_curvature".
EstimateReport choi_schoen_quantity(const TriMesh& mesh, const Vec3& x0, double r);

/// sup over vertices of |A(x)| |x - x0|.
EstimateReport singularity_diagnostic(const TriMesh& mesh, const Vec3& x0);

/// area(B_R(x0) cap M) / (4 pi R^2) <= 1 for each R. Throws PreconditionError
/// for non-convex meshes.
EstimateReport convex_area_growth(const TriMesh& mesh, const Vec3& x0, const std::vector<double>& radii);

/// min|x| <= sqrt(lambda^2 + 4) - lambda <= max|x|, written as
/// |r - mid| <= half-width. Requires a closed discrete lambda-surface. The
/// tolerance is the radius shift the lambda-surface threshold allows,
/// threshold / (2/r^2 + 1/2), since round discrete solutions sit off r by
/// their discretization error.
EstimateReport sphere_intersection_check(const TriMesh& mesh, double lambda);

struct RescaledResidual {
    /// alpha (x - z).
    TriMesh mesh;
    /// H' - <x', n>/(2 alpha^2) - <z, n>/(2 alpha) - lambda/alpha on the rescaled mesh.
    Field residual;
    /// <x', n>/(2 alpha^2) + lambda/alpha, the rescaled equation's right side.
    Field rhs;
    /// alpha * residual: the original residual pulled back.
    Field pulled_back;
};

/// Throws std::invalid_argument for alpha <= 0.
RescaledResidual rescaled_residual(const TriMesh& mesh, const Vec3& z, double alpha, double lambda);

/// Covariance check: sup |pulled_back - lambda_residual(mesh)| <= 1e-10, with
/// the rescaled residual and right-side bounds in `measured`.
EstimateReport rescaled_residual_report(const TriMesh& mesh, const Vec3& z, double alpha, double lambda);

/// One manifest entry {check, mesh_path, params}; relative mesh paths resolve
/// against `base_dir`. Checks: gauss_bonnet, monotonicity, choi_schoen,
/// singularity, convex_area_growth, sphere_intersection, rescaled_residual.
EstimateReport run_estimate_job(const nlohmann::json& job, const std::string& base_dir = ".");

/// Runs every job of a manifest (a JSON array) on up to `jobs` threads; the
/// result order is the manifest order.
std::vector<EstimateReport> run_estimate_batch(const nlohmann::json& manifest, const std::string& base_dir = ".",
                                               int jobs = 1);

}  // namespace lambdalab
