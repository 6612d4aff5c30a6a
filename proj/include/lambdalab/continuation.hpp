#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lambdalab/mesh.hpp"

namespace lambdalab {

/// Radius of the lambda-sphere, positive root of r^2 + 2 lambda r - 4 = 0.
double lambda_sphere_radius(double lambda);

/// Radius of the base sphere every graph is written over (the lambda = 0 sphere).
inline constexpr double kBaseRadius = 2.0;

/// Height function u over the radius-2 icosphere: the surface is X + u n with
/// n = X / 2 the exact unit normal of the base.
struct GraphOverSphere {
    TriMesh base;
    Field u;
    double lambda = 0.0;
};

/// Base icosphere of the given level with u = 0 (or the given field).
GraphOverSphere sphere_graph(double lambda, int level);
GraphOverSphere sphere_graph(double lambda, int level, Field u);

/// Throws std::invalid_argument unless |u| * |A| < 1 on the base, i.e. |u| < 2,
/// and u has one value per base vertex.
void check_graph(const GraphOverSphere& g);

TriMesh graph_mesh(const GraphOverSphere& g);

/// H - <x, n>/2 - lambda on the graph mesh, indexed by base vertex.
Field graph_residual(const GraphOverSphere& g);

/// Dense forward-difference Jacobian of graph_residual in u; column j uses
/// the perturbation 1e-6 (1 + |u_j|). Columns may run on `jobs` threads.
Eigen::MatrixXd graph_jacobian(const GraphOverSphere& g, int jobs = 1);

struct NewtonOptions {
    /// Target for the sup norm of the residual.
    double tolerance = 1e-10;
    int max_iterations = 25;
    /// Divergence when the residual exceeds this multiple of the best one so far.
    double growth_limit = 10.0;
    /// Reciprocal condition estimate below which the Jacobian counts as singular.
    double singular_rcond = 1e-12;
    int jobs = 1;
};

struct NewtonResult {
    GraphOverSphere graph;
    /// Sup-norm residual before each iteration and after the last.
    std::vector<double> residual_history;
    int iterations = 0;
    /// max r_{k+1} / r_k^2 over steps with r_k < 1e-2 whose successor is
    /// above the round-off floor; 0 when there is no such step.
    double quadratic_constant = 0.0;
};

class NewtonError : public std::runtime_error {
public:
    enum class Reason { singular_jacobian, diverged, max_iterations };
    NewtonError(Reason reason, const std::string& what, NewtonResult partial);
    Reason reason() const { return reason_; }
    const NewtonResult& partial() const { return partial_; }

private:
    Reason reason_;
    NewtonResult partial_;
};

const char* to_string(NewtonError::Reason reason);

/// Full Newton on graph_residual(g) = 0 starting from g0.
NewtonResult newton_solve(const GraphOverSphere& g0, const NewtonOptions& options = {});

struct FieldStats {
    double min = 0.0;
    double max = 0.0;
    double mean = 0.0;
};

FieldStats field_stats(const Field& u);

struct BranchSample {
    double lambda = 0.0;
    Field u;
    int iterations = 0;
    double residual = 0.0;
    double quadratic_constant = 0.0;
    FieldStats u_stats;
    double gaussian_area = 0.0;
};

struct Branch {
    double step = 0.0;
    int level = 0;
    /// Sorted by lambda; lambda_k = k * step.
    std::vector<BranchSample> samples;
    /// Empty unless Newton failed and the branch was cut short.
    std::string diagnostic;
};

/// Zeroth-order predictor, Newton corrector, outward from lambda = 0 in both
/// directions over the multiples of `step` in [lo, hi]. Requires lo <= 0 <= hi
/// and step > 0. A Newton failure truncates that direction and fills
/// `diagnostic`.
Branch continue_branch(double lo, double hi, double step, int level, const NewtonOptions& options = {});

/// One JSON object per line: lambda, u_stats{min,max,mean}, iterations, residual.
void write_branch_jsonl(std::ostream& out, const Branch& branch);

/// Columns lambda, vertex, u.
void write_branch_fields_csv(std::ostream& out, const Branch& branch);

struct LinearizationReport {
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    /// r(lambda2) - r(lambda1), the constant graph between the two spheres.
    double phi = 0.0;
    /// Sup norm of L phi + (lambda2 - lambda1) on the r(lambda1) sphere.
    double defect = 0.0;
    /// defect / |lambda2 - lambda1| (0 when the gap is 0).
    double relative = 0.0;
    /// Same with the gap halved, and half_defect / defect.
    double half_defect = 0.0;
    double ratio = 0.0;
};

/// Requires |phi| max|A| < 1 on the r(lambda1) sphere; throws PreconditionError otherwise.
LinearizationReport linearization_check(double lambda1, double lambda2, int level = 3);

enum class RigidityOutcome { round, diverged, elsewhere };

const char* to_string(RigidityOutcome outcome);

struct RigidityCell {
    double lambda = 0.0;
    double amplitude = 0.0;
    RigidityOutcome outcome = RigidityOutcome::diverged;
    int iterations = 0;
    double residual = 0.0;
    /// sup |u - u_round| at the end, u_round being the Newton solution from
    /// the constant graph r(lambda) - 2 (the constant itself when that
    /// fails). NaN when diverged.
    double deviation = 0.0;
    std::string diagnostic;
};

struct RigidityOptions {
    int level = 3;
    std::uint64_t seed = 0x5eed;
    /// A converged graph within this sup distance of u_round counts as round.
    double round_tolerance = 1e-4;
    NewtonOptions newton;
};

/// Newton from the lambda-sphere plus amplitude * (uniform [-1, 1] per vertex,
/// seeded per cell) for every (lambda, amplitude) pair. Cells run on
/// newton.jobs threads; each cell's outcome depends only on its seed.
std::vector<RigidityCell> rigidity_experiment(const std::vector<double>& lambdas,
                                              const std::vector<double>& amplitudes,
                                              const RigidityOptions& options = {});

}  // namespace lambdalab
