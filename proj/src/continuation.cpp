#include "lambdalab/continuation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>

#include <json.hpp>

#include "lambdalab/curvature.hpp"
#include "lambdalab/identities.hpp"
#include "lambdalab/parallel.hpp"
#include "lambdalab/primitives.hpp"
#include "lambdalab/weighted_operator.hpp"

namespace lambdalab {

namespace {

double sup_norm(const Field& f)
{
    return f.size() == 0 ? 0.0 : f.cwiseAbs().maxCoeff();
}

// Residual evaluation on meshes of this size carries ~1e-12 of round-off;
// steps landing below this floor say nothing about the convergence rate.
constexpr double kRoundOffFloor = 1e-10;

double quadratic_constant(const std::vector<double>& history)
{
    double c = 0.0;
    for (std::size_t k = 0; k + 1 < history.size(); ++k) {
        if (history[k] < 1e-2 && history[k] > 0.0 && history[k + 1] > kRoundOffFloor) {
            c = std::max(c, history[k + 1] / (history[k] * history[k]));
        }
    }
    return c;
}

}  // namespace

double lambda_sphere_radius(double lambda)
{
    return std::sqrt(lambda * lambda + 4.0) - lambda;
}

GraphOverSphere sphere_graph(double lambda, int level)
{
    GraphOverSphere g{make_icosphere(kBaseRadius, level), Field(), lambda};
    g.u = Field::Zero(static_cast<Eigen::Index>(g.base.num_vertices()));
    return g;
}

GraphOverSphere sphere_graph(double lambda, int level, Field u)
{
    GraphOverSphere g{make_icosphere(kBaseRadius, level), std::move(u), lambda};
    check_graph(g);
    return g;
}

void check_graph(const GraphOverSphere& g)
{
    if (static_cast<std::size_t>(g.u.size()) != g.base.num_vertices()) {
        throw std::invalid_argument("graph needs one height per base vertex");
    }
    // |A| = 1/2 on the base sphere.
    for (Eigen::Index i = 0; i < g.u.size(); ++i) {
        if (!(std::abs(g.u[i]) < kBaseRadius)) {
            throw std::invalid_argument("graph height violates |u A| < 1 at vertex " + std::to_string(i));
        }
    }
}

TriMesh graph_mesh(const GraphOverSphere& g)
{
    check_graph(g);
    std::vector<Vec3> x(g.base.vertices());
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] *= 1.0 + g.u[static_cast<Eigen::Index>(i)] / x[i].norm();
    }
    return g.base.with_positions(std::move(x));
}

Field graph_residual(const GraphOverSphere& g)
{
    return lambda_residual(graph_mesh(g), g.lambda);
}

Eigen::MatrixXd graph_jacobian(const GraphOverSphere& g, int jobs)
{
    check_graph(g);
    const Field f0 = graph_residual(g);
    const auto n = static_cast<int>(g.u.size());
    Eigen::MatrixXd jac(n, n);
    parallel_for(n, jobs, [&](int j) {
        GraphOverSphere shifted{g.base, g.u, g.lambda};
        const double h = 1e-6 * (1.0 + std::abs(g.u[j]));
        shifted.u[j] += h;
        jac.col(j) = (graph_residual(shifted) - f0) / h;
    });
    return jac;
}

NewtonError::NewtonError(Reason reason, const std::string& what, NewtonResult partial)
    : std::runtime_error(what), reason_(reason), partial_(std::move(partial))
{
}

const char* to_string(NewtonError::Reason reason)
{
    switch (reason) {
    case NewtonError::Reason::singular_jacobian:
        return "singular_jacobian";
    case NewtonError::Reason::diverged:
        return "diverged";
    case NewtonError::Reason::max_iterations:
        return "max_iterations";
    }
    return "?";
}

NewtonResult newton_solve(const GraphOverSphere& g0, const NewtonOptions& options)
{
    NewtonResult result;
    result.graph = g0;
    Field f = graph_residual(result.graph);
    double r = sup_norm(f);
    if (!std::isfinite(r)) {
        throw std::invalid_argument("newton_solve: initial residual is not finite");
    }
    result.residual_history.push_back(r);
    double best = r;
    while (r > options.tolerance) {
        if (result.iterations >= options.max_iterations) {
            result.quadratic_constant = quadratic_constant(result.residual_history);
            throw NewtonError(NewtonError::Reason::max_iterations,
                              "Newton did not reach the tolerance in " + std::to_string(options.max_iterations)
                                  + " iterations (residual " + std::to_string(r) + ")",
                              std::move(result));
        }
        const Eigen::PartialPivLU<Eigen::MatrixXd> lu(graph_jacobian(result.graph, options.jobs));
        const double rcond = lu.rcond();
        if (!(rcond >= options.singular_rcond)) {
            throw NewtonError(NewtonError::Reason::singular_jacobian,
                              "Jacobian is singular (rcond " + std::to_string(rcond) + ")", std::move(result));
        }
        result.graph.u -= lu.solve(f);
        ++result.iterations;
        try {
            f = graph_residual(result.graph);
        } catch (const std::invalid_argument& e) {
            throw NewtonError(NewtonError::Reason::diverged, std::string("Newton left the graph domain: ") + e.what(),
                              std::move(result));
        }
        r = sup_norm(f);
        result.residual_history.push_back(r);
        if (!std::isfinite(r) || r > options.growth_limit * best) {
            throw NewtonError(NewtonError::Reason::diverged,
                              "Newton residual grew to " + std::to_string(r) + " (best " + std::to_string(best) + ")",
                              std::move(result));
        }
        best = std::min(best, r);
    }
    result.quadratic_constant = quadratic_constant(result.residual_history);
    return result;
}

FieldStats field_stats(const Field& u)
{
    if (u.size() == 0) {
        return {};
    }
    return {u.minCoeff(), u.maxCoeff(), u.mean()};
}

Branch continue_branch(double lo, double hi, double step, int level, const NewtonOptions& options)
{
    if (!(step > 0.0)) {
        throw std::invalid_argument("continue_branch: step must be positive");
    }
    if (!(lo <= 0.0 && 0.0 <= hi)) {
        throw std::invalid_argument("continue_branch: the range must contain 0");
    }
    Branch branch;
    branch.step = step;
    branch.level = level;
    const auto solve = [&](double lambda, const Field& predictor) {
        const NewtonResult nr = newton_solve(sphere_graph(lambda, level, predictor), options);
        BranchSample s;
        s.lambda = lambda;
        s.u = nr.graph.u;
        s.iterations = nr.iterations;
        s.residual = nr.residual_history.back();
        s.quadratic_constant = nr.quadratic_constant;
        s.u_stats = field_stats(s.u);
        s.gaussian_area = gaussian_area(graph_mesh(nr.graph));
        return s;
    };

    const GraphOverSphere origin = sphere_graph(0.0, level);
    std::vector<BranchSample> up{solve(0.0, origin.u)};
    std::vector<BranchSample> down;
    // Tolerance on the end points so that e.g. -0.3 / 0.05 still counts as a multiple.
    const double slack = 1e-9 * step;
    for (int direction : {+1, -1}) {
        std::vector<BranchSample>& out = direction > 0 ? up : down;
        Field predictor = up.front().u;
        for (int k = 1;; ++k) {
            const double lambda = direction * k * step;
            if (lambda > hi + slack || lambda < lo - slack) {
                break;
            }
            try {
                out.push_back(solve(lambda, predictor));
            } catch (const std::exception& e) {
                if (!branch.diagnostic.empty()) {
                    branch.diagnostic += "; ";
                }
                branch.diagnostic += "stopped at lambda = " + std::to_string(lambda) + ": " + e.what();
                break;
            }
            predictor = out.back().u;
        }
    }
    std::reverse(down.begin(), down.end());
    branch.samples = std::move(down);
    branch.samples.insert(branch.samples.end(), up.begin(), up.end());
    return branch;
}

void write_branch_jsonl(std::ostream& out, const Branch& branch)
{
    for (const BranchSample& s : branch.samples) {
        const nlohmann::ordered_json line = {
            {"lambda", s.lambda},
            {"u_stats", {{"min", s.u_stats.min}, {"max", s.u_stats.max}, {"mean", s.u_stats.mean}}},
            {"iterations", s.iterations},
            {"residual", s.residual},
        };
        out << line.dump() << '\n';
    }
}

void write_branch_fields_csv(std::ostream& out, const Branch& branch)
{
    out << "lambda,vertex,u\n" << std::setprecision(17);
    for (const BranchSample& s : branch.samples) {
        for (Eigen::Index i = 0; i < s.u.size(); ++i) {
            out << s.lambda << ',' << i << ',' << s.u[i] << '\n';
        }
    }
}

LinearizationReport linearization_check(double lambda1, double lambda2, int level)
{
    const double r1 = lambda_sphere_radius(lambda1);
    const TriMesh mesh = make_icosphere(r1, level);
    const CurvatureData cd = curvature(mesh);
    double max_a = 0.0;
    for (Eigen::Index i = 0; i < cd.kappa1.size(); ++i) {
        max_a = std::max({max_a, std::abs(cd.kappa1[i]), std::abs(cd.kappa2[i])});
    }
    const WeightedOperator op = stability_operator(mesh, cd);
    const auto defect_for = [&](double gap) {
        const double phi = lambda_sphere_radius(lambda1 + gap) - r1;
        if (!(std::abs(phi) * max_a < 1.0)) {
            throw PreconditionError("linearization_check: |phi A| >= 1 on the lambda1 sphere");
        }
        const Field lphi = op.apply(Field::Constant(static_cast<Eigen::Index>(mesh.num_vertices()), phi));
        return std::pair{phi, sup_norm(lphi.array() + gap)};
    };
    LinearizationReport rep;
    rep.lambda1 = lambda1;
    rep.lambda2 = lambda2;
    const double gap = lambda2 - lambda1;
    std::tie(rep.phi, rep.defect) = defect_for(gap);
    rep.half_defect = defect_for(0.5 * gap).second;
    if (gap != 0.0) {
        rep.relative = rep.defect / std::abs(gap);
    }
    if (rep.defect > 0.0) {
        rep.ratio = rep.half_defect / rep.defect;
    }
    return rep;
}

const char* to_string(RigidityOutcome outcome)
{
    switch (outcome) {
    case RigidityOutcome::round:
        return "round";
    case RigidityOutcome::diverged:
        return "diverged";
    case RigidityOutcome::elsewhere:
        return "elsewhere";
    }
    return "?";
}

std::vector<RigidityCell> rigidity_experiment(const std::vector<double>& lambdas,
                                              const std::vector<double>& amplitudes,
                                              const RigidityOptions& options)
{
    const auto cells = static_cast<int>(lambdas.size() * amplitudes.size());
    std::vector<RigidityCell> out(static_cast<std::size_t>(cells));
    NewtonOptions inner = options.newton;
    inner.jobs = 1;
    const TriMesh base = make_icosphere(kBaseRadius, options.level);
    const auto n = static_cast<Eigen::Index>(base.num_vertices());

    // Discrete round solution per lambda; differs from the constant graph by
    // the discretization error of the base mesh.
    std::vector<Field> round(lambdas.size());
    parallel_for(static_cast<int>(lambdas.size()), options.newton.jobs, [&](int k) {
        const double lambda = lambdas[static_cast<std::size_t>(k)];
        Field& ref = round[static_cast<std::size_t>(k)];
        ref = Field::Constant(n, lambda_sphere_radius(lambda) - kBaseRadius);
        try {
            GraphOverSphere g{base, ref, lambda};
            check_graph(g);
            ref = newton_solve(g, inner).graph.u;
        } catch (const std::exception&) {
            // Keep the constant; the cells for this lambda report why.
        }
    });

    parallel_for(cells, options.newton.jobs, [&](int index) {
        RigidityCell& cell = out[static_cast<std::size_t>(index)];
        const std::size_t k = static_cast<std::size_t>(index) / amplitudes.size();
        cell.lambda = lambdas[k];
        cell.amplitude = amplitudes[static_cast<std::size_t>(index) % amplitudes.size()];

        std::mt19937_64 rng(options.seed + static_cast<std::uint64_t>(index));
        std::uniform_real_distribution<double> unit(-1.0, 1.0);
        Field start = Field::Constant(n, lambda_sphere_radius(cell.lambda) - kBaseRadius);
        for (Eigen::Index i = 0; i < n; ++i) {
            start[i] += cell.amplitude * unit(rng);
        }
        try {
            GraphOverSphere g0{base, start, cell.lambda};
            check_graph(g0);
            const NewtonResult nr = newton_solve(g0, inner);
            cell.iterations = nr.iterations;
            cell.residual = nr.residual_history.back();
            cell.deviation = (nr.graph.u - round[k]).cwiseAbs().maxCoeff();
            cell.outcome = cell.deviation <= options.round_tolerance ? RigidityOutcome::round : RigidityOutcome::elsewhere;
        } catch (const NewtonError& e) {
            cell.outcome = RigidityOutcome::diverged;
            cell.iterations = e.partial().iterations;
            cell.residual = e.partial().residual_history.empty() ? std::numeric_limits<double>::quiet_NaN()
                                                                  : e.partial().residual_history.back();
            cell.deviation = std::numeric_limits<double>::quiet_NaN();
            cell.diagnostic = e.what();
        } catch (const std::invalid_argument& e) {
            cell.outcome = RigidityOutcome::diverged;
            cell.residual = std::numeric_limits<double>::quiet_NaN();
            cell.deviation = std::numeric_limits<double>::quiet_NaN();
            cell.diagnostic = e.what();
        }
    });
    return out;
}

}  // namespace lambdalab
