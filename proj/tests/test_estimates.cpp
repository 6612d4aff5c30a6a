#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "lambdalab/continuation.hpp"
#include "lambdalab/curvature.hpp"
#include "lambdalab/estimates.hpp"
#include "lambdalab/identities.hpp"
#include "lambdalab/mesh_io.hpp"
#include "lambdalab/primitives.hpp"
#include "lambdalab/shooting.hpp"

using namespace lambdalab;

namespace {

constexpr double kPi = std::numbers::pi;

double sphere_radius(double lambda)
{
    return std::sqrt(lambda * lambda + 4.0) - lambda;
}

// The shrinker torus from the shooting module, cached per level because the
// sweep dominates the cost of this file.
const TriMesh& shrinker_torus(int level)
{
    static std::map<int, TriMesh> cache;
    auto it = cache.find(level);
    if (it == cache.end()) {
        it = cache.emplace(level, sweep_revolution(0.0, RevolutionMode::torus_like, 3.0, 3.6, 13, level).mesh).first;
    }
    return it->second;
}

Vec3 nearest_to_origin(const TriMesh& mesh)
{
    Vec3 best = mesh.vertices().front();
    for (const Vec3& x : mesh.vertices()) {
        if (x.norm() < best.norm()) {
            best = x;
        }
    }
    return best;
}

double max_norm(const TriMesh& mesh)
{
    double out = 0.0;
    for (const Vec3& x : mesh.vertices()) {
        out = std::max(out, x.norm());
    }
    return out;
}

}  // namespace

TEST_CASE("settle sets margin and verdict from the reporting tolerance")
{
    EstimateReport rep;
    rep.lhs = 1.0;
    rep.rhs = 1.0 - 5e-10;
    settle(rep);
    CHECK(rep.margin == doctest::Approx(-5e-10).epsilon(1e-6));
    CHECK(rep.tolerance == doctest::Approx(1e-9));
    CHECK(rep.verdict == Verdict::pass);
    rep.rhs = 1.0 - 2e-9;
    settle(rep);
    CHECK(rep.verdict == Verdict::fail);
    rep.rhs = 1e3;
    rep.lhs = 1e3 + 5e-7;
    settle(rep);
    CHECK(rep.tolerance == doctest::Approx(1e-6));
    CHECK(rep.verdict == Verdict::pass);
    settle(rep, false);
    CHECK(rep.verdict == Verdict::informational);

    const auto j = to_json(rep);
    CHECK(j.at("verdict") == "informational");
    CHECK(j.at("margin").get<double>() == doctest::Approx(rep.margin));
}

TEST_CASE("ball integral and snapping")
{
    const TriMesh sphere = make_icosphere(2.0, 3);
    const CurvatureData cd = curvature(sphere);
    const Field ones = Field::Ones(static_cast<Eigen::Index>(sphere.num_vertices()));
    // Whole sphere at R = 2 from the center: every vertex sits on the boundary.
    CHECK(ball_integral(sphere, cd.vertex_area, ones, Vec3::Zero(), 2.0) == doctest::Approx(cd.vertex_area.sum()));
    CHECK(ball_integral(sphere, cd.vertex_area, ones, Vec3::Zero(), 1.9) == 0.0);

    CHECK(snap_to_vertex(sphere, sphere.vertices()[7] * 1.01) == 7);
    CHECK_THROWS_AS(snap_to_vertex(sphere, Vec3(0, 0, 5)), EstimateError);
    CHECK(snap_to_vertex(sphere, Vec3(0, 0, 5), 10.0) >= 0);
}

TEST_CASE("Gauss-Bonnet bound on the lambda = 0 sphere")
{
    const TriMesh sphere = make_icosphere(2.0, 4);
    const EstimateReport rep = gauss_bonnet_check(sphere, Vec3::Zero(), 2.5, 3.0, 0.5);
    // |A|^2 = 2 / r^2 and H^2 = 4 / r^2 over area 4 pi r^2.
    CHECK(rep.lhs == doctest::Approx(0.5 * 8.0 * kPi).epsilon(1e-2));
    CHECK(rep.measured.at("H2_integral") == doctest::Approx(16.0 * kPi).epsilon(1e-2));
    CHECK(rep.measured.at("genus") == 0.0);
    CHECK(rep.rhs >= 16.0 * kPi * (1.0 - 1e-2));
    CHECK(rep.verdict == Verdict::pass);
    CHECK(rep.margin == doctest::Approx(rep.rhs - rep.lhs));
}

TEST_CASE("Gauss-Bonnet genus term on the shrinker torus")
{
    const TriMesh& torus = shrinker_torus(3);
    const double reach = max_norm(torus);
    const EstimateReport rep = gauss_bonnet_check(torus, Vec3::Zero(), 0.6 * reach, 1.1 * reach, 0.5);
    CHECK(rep.measured.at("genus") == 1.0);
    CHECK(rep.measured.at("genus_term") == doctest::Approx(8.0 * kPi));
    CHECK(rep.verdict == Verdict::pass);
}

TEST_CASE("Gauss-Bonnet on a flat disk has zero left side")
{
    const TriMesh disk = make_disk(1.0, 3);
    for (const double eps : {0.1, 0.5, 0.9}) {
        const EstimateReport rep = gauss_bonnet_check(disk, Vec3(0.1, 0.0, 0.0), 0.4, 0.8, eps);
        CHECK(std::abs(rep.lhs) <= 1e-12);
        CHECK(rep.verdict == Verdict::pass);
    }
}

TEST_CASE("Gauss-Bonnet input errors")
{
    const TriMesh sphere = make_icosphere(2.0, 2);
    CHECK_THROWS_AS(gauss_bonnet_check(sphere, Vec3::Zero(), 3.0, 3.0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(gauss_bonnet_check(sphere, Vec3::Zero(), 3.0, 2.0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(gauss_bonnet_check(sphere, Vec3::Zero(), 1.0, 3.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(gauss_bonnet_check(sphere, Vec3(10, 0, 0), 1.0, 2.0, 0.5), EstimateError);
}

TEST_CASE("Gauss-Bonnet passes on every constructed lambda-surface for R <= 2r")
{
    std::vector<std::pair<std::string, TriMesh>> meshes;
    meshes.emplace_back("sphere 0.5", make_icosphere(sphere_radius(0.5), 3));
    meshes.emplace_back("sphere -0.3", make_icosphere(sphere_radius(-0.3), 3));
    meshes.emplace_back("torus", shrinker_torus(3));
    meshes.emplace_back("revolved sphere",
                        shoot_revolution(0.5, RevolutionMode::sphere_like, 1.5, 3).mesh);
    meshes.emplace_back("newton 0.3", graph_mesh(newton_solve(sphere_graph(0.3, 2)).graph));
    for (const auto& [label, mesh] : meshes) {
        CAPTURE(label);
        const Vec3 on_surface = mesh.vertices().front();
        const double reach = max_norm(mesh);
        for (const double eps : {0.25, 0.5}) {
            for (const auto& [r, big_r] : std::vector<std::pair<double, double>>{{1.0, 1.5}, {1.0, 2.0}, {2.0, 3.0}}) {
                CHECK(gauss_bonnet_check(mesh, on_surface, r, big_r, eps).verdict == Verdict::pass);
            }
            CHECK(gauss_bonnet_check(mesh, Vec3::Zero(), 0.75 * reach, 1.25 * reach, eps).verdict == Verdict::pass);
        }
    }
}

TEST_CASE("monotonicity with f = 1 on the lambda = 0 sphere")
{
    const TriMesh sphere = make_icosphere(2.0, 4);
    const Vec3 x0 = sphere.vertices()[3];
    const EstimateReport rep =
        monotonicity_profile(sphere, 0.0, x0, Field::Ones(static_cast<Eigen::Index>(sphere.num_vertices())), 1.0);
    CHECK(rep.profile.size() == 32);
    CHECK(rep.profile.back().s == doctest::Approx(1.0));
    for (std::size_t k = 0; k + 1 < rep.profile.size(); ++k) {
        CHECK(rep.profile[k].s < rep.profile[k + 1].s);
    }
    CHECK(std::isfinite(rep.measured.at("K")));
    CHECK(rep.measured.at("monotone") == 1.0);
    CHECK(rep.verdict == Verdict::pass);
    // A chord ball of radius s around a point of a sphere cuts a cap of area
    // pi s^2, and the weight is e^{-1} on S^2_2.
    CHECK(rep.profile.back().value == doctest::Approx(kPi * std::exp(-1.0)).epsilon(2e-2));
}

TEST_CASE("monotonicity with f = 0 is trivially monotone")
{
    const TriMesh sphere = make_icosphere(2.0, 3);
    const EstimateReport rep =
        monotonicity_profile(sphere, 0.0, sphere.vertices()[0], Field::Zero(static_cast<Eigen::Index>(sphere.num_vertices())), 1.0);
    for (const ProfilePoint& p : rep.profile) {
        CHECK(p.value == 0.0);
    }
    CHECK(rep.measured.at("K") == 0.0);
    CHECK(rep.verdict == Verdict::pass);
}

TEST_CASE("monotonicity small-ball limit of f = |A|^2 on the sphere")
{
    // g(s) -> pi |A|^2(x0) e^{-|x0|^2/4} = pi * (1/2) * e^{-1} as s -> 0.
    const double limit = kPi * 0.5 * std::exp(-1.0);
    for (const int level : {4, 5}) {
        const TriMesh sphere = make_icosphere(2.0, level);
        const EstimateReport rep = monotonicity_profile(sphere, 0.0, sphere.vertices()[0], curvature(sphere).A_norm2, 1.0);
        const double error = std::abs(rep.profile.front().value / limit - 1.0);
        CAPTURE(level);
        CHECK(error <= 0.05);
    }
}

TEST_CASE("monotonicity constant is stable under one refinement")
{
    // |A|^2 peaks on the inner equator of the torus, so g decreases there and
    // K is a genuine positive quantity rather than quadrature noise.
    for (const double t : {1.0, 1.5}) {
        double k_coarse = 0.0;
        for (const int level : {3, 4}) {
            const TriMesh& torus = shrinker_torus(level);
            const EstimateReport rep =
                monotonicity_profile(torus, 0.0, nearest_to_origin(torus), curvature(torus).A_norm2.cwiseMax(0.0), t);
            CHECK(rep.verdict == Verdict::pass);
            const double k = rep.measured.at("K");
            CHECK(k > 0.0);
            if (level == 3) {
                k_coarse = k;
            } else {
                CAPTURE(t);
                CHECK(std::abs(k / k_coarse - 1.0) <= 0.2);
            }
        }
    }
}

TEST_CASE("monotonicity preconditions")
{
    const TriMesh sphere = make_icosphere(2.0, 3);
    const auto n = static_cast<Eigen::Index>(sphere.num_vertices());
    Field negative = Field::Ones(n);
    negative[4] = -1e-3;
    CHECK_THROWS_AS(monotonicity_profile(sphere, 0.0, sphere.vertices()[0], negative, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(monotonicity_profile(sphere, 0.0, Vec3(0, 0, 6), Field::Ones(n), 1.0), EstimateError);
    CHECK_THROWS_AS(monotonicity_profile(sphere, 0.0, sphere.vertices()[0], Field::Ones(n), 0.0), std::invalid_argument);
    CHECK_THROWS_AS(monotonicity_profile(sphere, 1.0, sphere.vertices()[0], Field::Ones(n), 1.0), PreconditionError);
}

TEST_CASE("Choi-Schoen quantity")
{
    SUBCASE("lambda-sphere with r = r_lambda gives 2")
    {
        const double r = sphere_radius(0.5);
        const TriMesh sphere = make_icosphere(r, 4);
        const EstimateReport rep = choi_schoen_quantity(sphere, sphere.vertices()[0], r);
        CHECK(rep.lhs == doctest::Approx(2.0).epsilon(1e-3));
        CHECK(rep.verdict == Verdict::informational);
        // Whole sphere within chord distance r_lambda of a point is 1/4 of it.
        CHECK(rep.measured.at("total_curvature") > 0.0);
        CHECK(rep.measured.at("total_curvature") <= 8.0 * kPi);
    }
    SUBCASE("flat disk gives 0")
    {
        const EstimateReport rep = choi_schoen_quantity(make_disk(1.0, 3), Vec3::Zero(), 0.5);
        CHECK(std::abs(rep.lhs) <= 1e-12);
    }
    SUBCASE("thin neck exceeds the sphere at equal r")
    {
        const TriMesh band = make_catenoid_band(0.3, 1.0, 3);
        const TriMesh sphere = make_icosphere(2.0, 3);
        const double r = 0.5;
        const double neck = choi_schoen_quantity(band, Vec3(0.3, 0.0, 0.0), r).lhs;
        const double round = choi_schoen_quantity(sphere, sphere.vertices()[0], r).lhs;
        CHECK(neck > round);
    }
    SUBCASE("errors")
    {
        CHECK_THROWS_AS(choi_schoen_quantity(make_icosphere(2.0, 2), Vec3(0, 0, 9), 1.0), EstimateError);
        CHECK_THROWS_AS(choi_schoen_quantity(make_icosphere(2.0, 2), Vec3(0, 0, 2), 0.0), std::invalid_argument);
    }
}

TEST_CASE("singularity diagnostic")
{
    const double r = sphere_radius(0.5);
    const TriMesh sphere = make_icosphere(r, 4);
    // |A| = sqrt(2) / r at distance r from the center.
    CHECK(singularity_diagnostic(sphere, Vec3::Zero()).lhs == doctest::Approx(std::sqrt(2.0)).epsilon(1e-3));

    const TriMesh s2 = make_icosphere(2.0, 4);
    const double on_surface = singularity_diagnostic(s2, s2.vertices()[0]).lhs;
    CHECK(on_surface <= 2.0 * std::sqrt(2.0) * (1.0 + 1e-3));
    CHECK(on_surface >= std::sqrt(2.0));

    CHECK(singularity_diagnostic(make_disk(1.0, 3), Vec3(0.3, 0.2, 0.0)).lhs <= 1e-12);
    CHECK(singularity_diagnostic(make_disk(1.0, 3), Vec3(0.3, 0.2, 0.0)).verdict == Verdict::informational);
}

TEST_CASE("convex area growth")
{
    const TriMesh sphere = make_icosphere(2.0, 4);
    SUBCASE("equality at R = r and one quarter at R = 2r")
    {
        const EstimateReport rep = convex_area_growth(sphere, Vec3::Zero(), {2.0, 4.0});
        CHECK(rep.profile[0].value == doctest::Approx(1.0).epsilon(2e-3));
        CHECK(rep.profile[1].value == doctest::Approx(0.25).epsilon(2e-3));
        CHECK(rep.verdict == Verdict::pass);
    }
    SUBCASE("ratio nonincreasing in R for an origin-centered sphere")
    {
        const std::vector<double> radii{2.0, 2.5, 3.0, 4.0, 8.0};
        const EstimateReport rep = convex_area_growth(sphere, Vec3::Zero(), radii);
        for (std::size_t k = 0; k + 1 < rep.profile.size(); ++k) {
            CHECK(rep.profile[k + 1].value <= rep.profile[k].value);
            // Closed form (r / R)^2 up to the discrete area.
            CHECK(rep.profile[k].value == doctest::Approx(4.0 / (radii[k] * radii[k])).epsilon(2e-3));
        }
    }
    SUBCASE("ellipsoid (2, 2, 1)")
    {
        const TriMesh ellipsoid = scaled_axes(make_icosphere(1.0, 4), Vec3(2.0, 2.0, 1.0));
        const EstimateReport rep = convex_area_growth(ellipsoid, Vec3::Zero(), {0.5, 1.0, 1.5, 2.0, 3.0, 5.0});
        for (const ProfilePoint& p : rep.profile) {
            CHECK(p.value <= 1.0);
        }
        CHECK(rep.verdict == Verdict::pass);
    }
    SUBCASE("non-convex input")
    {
        CHECK_THROWS_AS(convex_area_growth(make_torus(2.0, 0.5, 2), Vec3::Zero(), {1.0}), PreconditionError);
    }
}

TEST_CASE("sphere intersection")
{
    SUBCASE("lambda-spheres meet their own sphere")
    {
        for (const double lambda : {-0.3, 0.0, 0.5}) {
            const EstimateReport rep = sphere_intersection_check(make_icosphere(sphere_radius(lambda), 3), lambda);
            CHECK(rep.lhs <= 1e-12);
            CHECK(rep.rhs <= 1e-12);
            CHECK(rep.verdict == Verdict::pass);
        }
    }
    SUBCASE("shrinker torus straddles the radius-2 sphere")
    {
        const EstimateReport rep = sphere_intersection_check(shrinker_torus(3), 0.0);
        CHECK(rep.measured.at("min_norm") < 2.0);
        CHECK(rep.measured.at("max_norm") > 2.0);
        CHECK(rep.verdict == Verdict::pass);
    }
    SUBCASE("every sample of a continuation branch")
    {
        const Branch branch = continue_branch(-0.3, 0.3, 0.15, 2);
        REQUIRE(branch.samples.size() == 5);
        for (const BranchSample& s : branch.samples) {
            CAPTURE(s.lambda);
            const TriMesh mesh = graph_mesh(sphere_graph(s.lambda, 2, s.u));
            const EstimateReport rep = sphere_intersection_check(mesh, s.lambda);
            CHECK(rep.verdict == Verdict::pass);
            // The discrete sphere sits off r_lambda by far less than the slack.
            CHECK(rep.lhs - rep.rhs <= 0.1 * rep.measured.at("radius_tolerance"));
        }
    }
    SUBCASE("preconditions")
    {
        CHECK_THROWS_AS(sphere_intersection_check(make_disk(1.0, 2), 0.0), PreconditionError);
        CHECK_THROWS_AS(sphere_intersection_check(make_icosphere(3.0, 3), 0.0), PreconditionError);
    }
}

TEST_CASE("rescaled residual")
{
    const TriMesh sphere = make_icosphere(sphere_radius(0.5), 3);
    SUBCASE("alpha = 1 and z = 0 reproduce the lambda residual")
    {
        const RescaledResidual rr = rescaled_residual(sphere, Vec3::Zero(), 1.0, 0.5);
        CHECK((rr.residual - lambda_residual(sphere, 0.5)).cwiseAbs().maxCoeff() <= 1e-14);
    }
    SUBCASE("covariance holds for every tested translation and scale")
    {
        for (const TriMesh* mesh : {&sphere, &shrinker_torus(3)}) {
            const double lambda = mesh == &sphere ? 0.5 : 0.0;
            for (const Vec3& z : {Vec3(0, 0, 0), Vec3(0.1, -0.2, 0.3), Vec3(-1.5, 0.7, 2.0)}) {
                for (const double alpha : {0.25, 1.0, 2.0, 7.5, 100.0}) {
                    const EstimateReport rep = rescaled_residual_report(*mesh, z, alpha, lambda);
                    CAPTURE(alpha);
                    CHECK(rep.lhs <= 1e-10);
                    CHECK(rep.verdict == Verdict::pass);
                }
            }
        }
    }
    SUBCASE("alpha = 2 rescaled sphere satisfies the rescaled equation")
    {
        const RescaledResidual rr = rescaled_residual(sphere, Vec3::Zero(), 2.0, 0.5);
        const double threshold = lambda_surface_threshold(sphere, curvature(sphere));
        CHECK(rr.residual.cwiseAbs().maxCoeff() <= threshold / 2.0);
        CHECK(max_norm(rr.mesh) == doctest::Approx(2.0 * sphere_radius(0.5)));
    }
    SUBCASE("alpha = 100 leaves only a small right side")
    {
        const EstimateReport rep = rescaled_residual_report(sphere, Vec3::Zero(), 100.0, 0.5);
        const double bound = (sphere_radius(0.5) / 2.0 + 0.5) / 100.0;
        CHECK(rep.measured.at("rhs_bound") == doctest::Approx(bound));
        CHECK(rep.measured.at("rhs_sup") <= bound * (1.0 + 1e-12));
    }
    SUBCASE("nonpositive alpha")
    {
        CHECK_THROWS_AS(rescaled_residual(sphere, Vec3::Zero(), 0.0, 0.5), std::invalid_argument);
        CHECK_THROWS_AS(rescaled_residual(sphere, Vec3::Zero(), -1.0, 0.5), std::invalid_argument);
    }
}

TEST_CASE("batch manifest runs every check in order and is thread-count independent")
{
    const std::filesystem::path dir = std::filesystem::temp_directory_path() / "lambdalab_estimate_batch";
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "sphere.obj");
        write_obj(out, make_icosphere(2.0, 3));
    }
    {
        std::ofstream out(dir / "disk.obj");
        write_obj(out, make_disk(1.0, 2));
    }
    const auto manifest = nlohmann::json::parse(R"([
        {"check": "gauss_bonnet", "mesh_path": "sphere.obj", "params": {"r": 2.5, "R": 3, "epsilon": 0.5}},
        {"check": "monotonicity", "mesh_path": "sphere.obj", "params": {"x0": [0, 0, 2], "t": 1, "f": "A2"}},
        {"check": "choi_schoen", "mesh_path": "sphere.obj", "params": {"x0": [0, 0, 2], "r": 2}},
        {"check": "singularity", "mesh_path": "disk.obj", "params": {"x0": [0.1, 0, 0]}},
        {"check": "convex_area_growth", "mesh_path": "sphere.obj", "params": {"radii": [2, 4]}},
        {"check": "sphere_intersection", "mesh_path": "sphere.obj", "params": {"lambda": 0}},
        {"check": "rescaled_residual", "mesh_path": "sphere.obj", "params": {"z": [0.1, 0, 0], "alpha": 3}}
    ])");
    const auto serial = run_estimate_batch(manifest, dir.string(), 1);
    const auto threaded = run_estimate_batch(manifest, dir.string(), 3);
    REQUIRE(serial.size() == manifest.size());
    for (std::size_t i = 0; i < serial.size(); ++i) {
        CHECK(serial[i].name == manifest[i].at("check").get<std::string>());
        CHECK(to_json(serial[i]).dump() == to_json(threaded[i]).dump());
        CHECK(serial[i].verdict != Verdict::fail);
    }

    CHECK_THROWS_AS(run_estimate_job(nlohmann::json::parse(R"({"check": "nope", "mesh_path": "sphere.obj"})"),
                                     dir.string()),
                    std::invalid_argument);
    CHECK_THROWS_AS(run_estimate_job(nlohmann::json::parse(R"({"check": "gauss_bonnet", "mesh_path": "sphere.obj"})"),
                                     dir.string()),
                    std::invalid_argument);
    CHECK_THROWS_AS(run_estimate_batch(nlohmann::json::object(), dir.string()), std::invalid_argument);
    std::filesystem::remove_all(dir);
}
