#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include <json.hpp>

#include "lambdalab/continuation.hpp"
#include "lambdalab/curvature.hpp"
#include "lambdalab/identities.hpp"
#include "lambdalab/primitives.hpp"
#include "lambdalab/weighted_operator.hpp"

using namespace lambdalab;

namespace {

double radius_oracle(double lambda)
{
    // Positive root of r^2 + 2 lambda r - 4 = 0 by the quadratic formula in
    // the cancellation-free form.
    return 4.0 / (lambda + std::sqrt(lambda * lambda + 4.0));
}

double sup(const Field& f)
{
    return f.cwiseAbs().maxCoeff();
}

double oscillation(const Field& u)
{
    return (u.array() - u.mean()).abs().maxCoeff();
}

}  // namespace

TEST_CASE("lambda-sphere radius")
{
    for (const double lambda : {-2.0, -0.3, 0.0, 0.3, 0.5, 3.0}) {
        CHECK(lambda_sphere_radius(lambda) == doctest::Approx(radius_oracle(lambda)).epsilon(1e-14));
    }
    CHECK(lambda_sphere_radius(0.3) - 2.0 == doctest::Approx(-0.277625).epsilon(1e-5));
}

TEST_CASE("graph meshes over the base sphere")
{
    const GraphOverSphere zero = sphere_graph(0.0, 2);
    const TriMesh base = graph_mesh(zero);
    for (std::size_t i = 0; i < base.num_vertices(); ++i) {
        CHECK((base.vertices()[i] - zero.base.vertices()[i]).norm() == 0.0);
    }

    const double r = lambda_sphere_radius(0.4);
    const GraphOverSphere shell = sphere_graph(0.4, 2, Field::Constant(zero.u.size(), r - 2.0));
    const TriMesh shell_mesh = graph_mesh(shell);
    for (const Vec3& x : shell_mesh.vertices()) {
        CHECK(x.norm() == doctest::Approx(r).epsilon(1e-14));
    }

    // First spherical harmonic z/2 with amplitude 0.1.
    Field bump(zero.u.size());
    for (Eigen::Index i = 0; i < bump.size(); ++i) {
        bump[i] = 0.1 * zero.base.vertices()[static_cast<std::size_t>(i)].z() / 2.0;
    }
    double max_radius = 0.0;
    const TriMesh bumped = graph_mesh(sphere_graph(0.0, 2, bump));
    for (const Vec3& x : bumped.vertices()) {
        max_radius = std::max(max_radius, x.norm());
    }
    CHECK(max_radius - 2.0 == doctest::Approx(0.1).epsilon(1e-12));

    CHECK_THROWS_AS(sphere_graph(0.0, 2, Field::Constant(zero.u.size(), 2.0)), std::invalid_argument);
    CHECK_THROWS_AS(sphere_graph(0.0, 2, Field::Zero(3)), std::invalid_argument);
}

TEST_CASE("graph residual on round graphs")
{
    // Round graphs: residual shrinks with refinement.
    double previous = 1.0;
    for (int level = 2; level <= 4; ++level) {
        const GraphOverSphere g = sphere_graph(0.3, level, Field::Constant(static_cast<Eigen::Index>(10 * (1 << (2 * level)) + 2),
                                                                          radius_oracle(0.3) - 2.0));
        const double res = sup(graph_residual(g));
        CAPTURE(level);
        CHECK(res < previous / 3.0);
        previous = res;
    }

    // Base sphere at lambda != 0: residual is -lambda up to discretization.
    const GraphOverSphere base = sphere_graph(0.7, 3);
    CHECK(sup(graph_residual(base).array() + 0.7) < 2e-4);

    // Constant shift eps at lambda = 0: first variation -(|A|^2 + 1/2) eps = -eps.
    const double eps = 1e-3;
    const GraphOverSphere flat = sphere_graph(0.0, 3);
    const GraphOverSphere shifted = sphere_graph(0.0, 3, Field::Constant(flat.u.size(), eps));
    const Field delta = graph_residual(shifted) - graph_residual(flat);
    CHECK(sup(delta.array() + eps) < 1e-2 * eps);
}

TEST_CASE("finite-difference Jacobian on constants")
{
    const GraphOverSphere g = sphere_graph(0.0, 3);
    const Eigen::MatrixXd jac = graph_jacobian(g);
    const Field on_one = jac * Field::Ones(jac.cols());
    const CurvatureData cd = curvature(graph_mesh(g));
    for (Eigen::Index i = 0; i < on_one.size(); ++i) {
        const double expected = -(cd.A_norm2[i] + 0.5);
        CHECK(std::abs(on_one[i] - expected) <= 0.05 * std::abs(expected));
    }
    CHECK((graph_jacobian(g, 3) - jac).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("Newton finds the lambda-sphere from the base sphere")
{
    const NewtonResult nr = newton_solve(sphere_graph(0.3, 3));
    CHECK(nr.residual_history.back() <= 1e-10);
    CHECK(nr.iterations <= 6);
    CHECK(oscillation(nr.graph.u) <= 1e-5);
    CHECK(sup(nr.graph.u.array() - (radius_oracle(0.3) - 2.0)) <= 1e-4);
    // Quadratic convergence once the residual is below 1e-2.
    CHECK(nr.quadratic_constant > 0.0);
    CHECK(nr.quadratic_constant < 10.0);
    MESSAGE("quadratic constant " << nr.quadratic_constant);
}

TEST_CASE("Newton from a perturbed base sphere returns to it")
{
    GraphOverSphere g = sphere_graph(0.0, 3);
    const NewtonResult reference = newton_solve(g);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (Eigen::Index i = 0; i < g.u.size(); ++i) {
        g.u[i] = 0.05 * unit(rng);
    }
    const NewtonResult nr = newton_solve(g);
    CHECK(sup(nr.graph.u - reference.graph.u) < 1e-8);
    CHECK(sup(nr.graph.u) < 1e-4);
}

TEST_CASE("Newton on an already solved graph")
{
    const GraphOverSphere g = sphere_graph(0.0, 3);
    const CurvatureData cd = curvature(graph_mesh(g));
    NewtonOptions loose;
    loose.tolerance = lambda_surface_threshold(graph_mesh(g), cd);
    const NewtonResult nr = newton_solve(g, loose);
    CHECK(nr.iterations == 0);
    CHECK(nr.residual_history.size() == 1);
}

TEST_CASE("Newton failures are reported")
{
    NewtonOptions starved;
    starved.max_iterations = 1;
    try {
        newton_solve(sphere_graph(0.3, 2), starved);
        FAIL("expected NewtonError");
    } catch (const NewtonError& e) {
        CHECK(e.reason() == NewtonError::Reason::max_iterations);
        CHECK(e.partial().residual_history.size() == 2);
    }
    // Far outside the graph domain of the radius-2 base: r(-2) = 4.83.
    NewtonOptions defaults;
    CHECK_THROWS_AS(newton_solve(sphere_graph(-2.0, 2), defaults), NewtonError);
    CHECK(std::string(to_string(NewtonError::Reason::singular_jacobian)) == "singular_jacobian");
}

TEST_CASE("sphere branch")
{
    const Branch branch = continue_branch(-0.3, 0.5, 0.05, 3);
    REQUIRE(branch.diagnostic.empty());
    REQUIRE(branch.samples.size() == 17);
    CHECK(branch.samples.front().lambda == doctest::Approx(-0.3));
    CHECK(branch.samples.back().lambda == doctest::Approx(0.5));
    for (std::size_t k = 0; k < branch.samples.size(); ++k) {
        const BranchSample& s = branch.samples[k];
        CAPTURE(s.lambda);
        if (k > 0) {
            CHECK(s.lambda - branch.samples[k - 1].lambda == doctest::Approx(0.05).epsilon(1e-12));
        }
        CHECK(s.residual <= 1e-10);
        CHECK(sup(s.u.array() - (radius_oracle(s.lambda) - 2.0)) <= 1e-4);
        CHECK(oscillation(s.u) <= 1e-4);
    }

    // Gaussian area 4 pi r^2 exp(-r^2/4) decreases on [0, 0.5] (r < 2 there).
    for (std::size_t k = 1; k < branch.samples.size(); ++k) {
        if (branch.samples[k - 1].lambda >= -1e-12) {
            CHECK(branch.samples[k].gaussian_area < branch.samples[k - 1].gaussian_area);
        }
    }

    // Identity verifiers on converged graphs.
    for (const BranchSample& s : {branch.samples.front(), branch.samples.back()}) {
        const TriMesh mesh = graph_mesh(GraphOverSphere{make_icosphere(2.0, 3), s.u, s.lambda});
        CAPTURE(s.lambda);
        CHECK(verify_eigenfunction_identity(mesh, s.lambda, Vec3(0, 0, 1)).relative < 0.05);
        CHECK(verify_drift_distance_identity(mesh, s.lambda, Vec3(1, 0, 0)).relative < 0.01);
        CHECK(verify_simons(mesh, s.lambda, kSimonsLambdaSign).relative < 0.01);
    }

    std::ostringstream out;
    write_branch_jsonl(out, branch);
    std::istringstream lines(out.str());
    std::string line;
    int count = 0;
    while (std::getline(lines, line)) {
        const auto j = nlohmann::json::parse(line);
        CHECK(j.contains("lambda"));
        CHECK(j.at("u_stats").contains("mean"));
        CHECK(j.at("iterations").is_number_integer());
        CHECK(j.at("residual").is_number());
        ++count;
    }
    CHECK(count == 17);
}

TEST_CASE("degenerate branch range")
{
    const Branch single = continue_branch(0.0, 0.0, 0.1, 2);
    REQUIRE(single.samples.size() == 1);
    CHECK(single.samples.front().lambda == 0.0);
    CHECK(sup(single.samples.front().u) < 1e-3);
    CHECK_THROWS_AS(continue_branch(0.1, 0.5, 0.05, 2), std::invalid_argument);
    CHECK_THROWS_AS(continue_branch(-0.1, 0.5, 0.0, 2), std::invalid_argument);

    std::ostringstream out;
    write_branch_fields_csv(out, single);
    CHECK(out.str().rfind("lambda,vertex,u\n", 0) == 0);
}

TEST_CASE("branch stops with a diagnostic where Newton fails")
{
    NewtonOptions few;
    few.max_iterations = 2;
    const Branch branch = continue_branch(-0.1, 0.0, 0.1, 2, few);
    CHECK_FALSE(branch.diagnostic.empty());
    CHECK(branch.samples.size() == 1);
}

TEST_CASE("linearization defect is second order in the gap")
{
    // Oracle: (|A|^2 + 1/2) dr/dlambda + 1 = 0 on the family, with
    // dr/dlambda = -r / (r + lambda) and |A|^2 = 2 / r^2.
    for (const double lambda : {0.0, 0.3, -0.2}) {
        const double r = radius_oracle(lambda);
        CHECK((2.0 / (r * r) + 0.5) * (-r / (r + lambda)) + 1.0 == doctest::Approx(0.0).epsilon(1e-14));
    }
    const LinearizationReport rep = linearization_check(0.0, 0.1);
    CHECK(rep.phi == doctest::Approx(radius_oracle(0.1) - 2.0));
    CHECK(rep.relative <= 0.1);
    CHECK(rep.ratio <= 0.30);
    CHECK(rep.ratio >= 0.20);

    const LinearizationReport same = linearization_check(0.2, 0.2);
    CHECK(same.phi == 0.0);
    CHECK(same.defect == 0.0);
    CHECK_THROWS_AS(linearization_check(0.0, -3.0), PreconditionError);
}

TEST_CASE("rigidity experiment")
{
    RigidityOptions options;
    options.level = 2;
    options.newton.jobs = 2;
    const std::vector<double> lambdas{-0.3, 0.0, 0.2, 0.5};
    const std::vector<double> amplitudes{0.0, 0.02, 0.05};
    const auto cells = rigidity_experiment(lambdas, amplitudes, options);
    REQUIRE(cells.size() == 12);
    for (const RigidityCell& c : cells) {
        CAPTURE(c.lambda);
        CAPTURE(c.amplitude);
        CHECK(c.outcome == RigidityOutcome::round);
    }
    CHECK(cells[5].lambda == 0.0);
    CHECK(cells[5].amplitude == 0.05);

    options.newton.jobs = 1;
    const auto serial = rigidity_experiment(lambdas, amplitudes, options);
    for (std::size_t k = 0; k < cells.size(); ++k) {
        CHECK(serial[k].deviation == cells[k].deviation);
    }

    const auto outside = rigidity_experiment({-2.0}, {0.0, 0.05}, options);
    for (const RigidityCell& c : outside) {
        CHECK(c.outcome != RigidityOutcome::round);
        CHECK_FALSE(c.diagnostic.empty());
    }
}
