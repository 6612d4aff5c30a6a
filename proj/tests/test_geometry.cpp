#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "lambdalab/curvature.hpp"
#include "lambdalab/mesh_io.hpp"
#include "lambdalab/primitives.hpp"
#include "lambdalab/topology.hpp"

using namespace lambdalab;

namespace {

constexpr double kPi = std::numbers::pi;

double lambda_sphere_radius_oracle(double lambda)
{
    // Positive root of r^2 + 2 lambda r - 4 = 0.
    return -lambda + std::sqrt(lambda * lambda + 4.0);
}

double max_abs(const Field& f)
{
    return f.cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("icosphere construction")
{
    const TriMesh base = make_icosphere(2.0, 0);
    CHECK(base.num_vertices() == 12);
    CHECK(base.num_faces() == 20);
    for (const Vec3& p : base.vertices()) {
        CHECK(p.norm() == doctest::Approx(2.0).epsilon(1e-15));
    }
    for (int level = 0; level <= 4; ++level) {
        const TriMesh m = make_icosphere(2.0, level);
        // Each subdivision adds one vertex per edge: V = 10 * 4^L + 2.
        CHECK(m.num_vertices() == static_cast<std::size_t>(10 * (1 << (2 * level)) + 2));
        CHECK(m.euler_characteristic() == 2);
        CHECK(m.is_closed());
        CHECK(genus(m) == 0);
    }
    CHECK(make_icosphere(2.0, 3).num_vertices() == 642);
}

TEST_CASE("torus-type primitives have the expected topology")
{
    const TriMesh torus = make_torus(2.0, 0.5, 1);
    CHECK(torus.euler_characteristic() == 0);
    CHECK(genus(torus) == 1);

    const TriMesh two = make_double_torus(2.0, 0.5, 0);
    CHECK(two.euler_characteristic() == -2);
    CHECK(genus(two) == 2);
}

TEST_CASE("bordered primitives carry boundary flags")
{
    const TriMesh disk = make_disk(1.0, 2);
    CHECK_FALSE(disk.is_closed());
    CHECK(boundary_loop_count(disk) == 1);
    CHECK(disk.euler_characteristic() == 1);
    int flagged = 0;
    for (std::size_t v = 0; v < disk.num_vertices(); ++v) {
        if (disk.is_boundary(static_cast<int>(v))) {
            ++flagged;
            CHECK(disk.vertices()[v].norm() == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
    CHECK(flagged == 6 * (2 << 2));

    const TriMesh band = make_cylinder_band(1.0, 1.0, 0);
    CHECK(boundary_loop_count(band) == 2);
    CHECK(band.euler_characteristic() == 0);
    CHECK_THROWS_AS(genus(band), MeshError);
}

TEST_CASE("mesh validation rejects malformed input")
{
    const std::vector<Vec3> x = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}};
    CHECK_THROWS_AS(TriMesh(x, {{0, 1, 7}}), MeshError);
    CHECK_THROWS_AS(TriMesh(x, {{0, 1, 2}, {1, 2, 3}}), MeshError);  // flipped neighbour
    CHECK_THROWS_AS(TriMesh({{0, 0, 0}, {1, 0, 0}, {2, 0, 0}}, {{0, 1, 2}}), MeshError);
    CHECK_NOTHROW(TriMesh(x, {{0, 1, 2}, {2, 1, 3}}));
    // Two fans touching at one vertex.
    const std::vector<Vec3> bow = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {-1, 0, 0}, {-1, -1, 0}};
    CHECK_THROWS_AS(TriMesh(bow, {{0, 1, 2}, {0, 3, 4}}), MeshError);
}

TEST_CASE("genus rejects open or disconnected meshes")
{
    CHECK_THROWS_AS(genus(make_disk(1.0, 0)), MeshError);
    const TriMesh a = make_icosphere(1.0, 0);
    std::vector<Vec3> x = a.vertices();
    std::vector<Face> f = a.faces();
    for (const Vec3& p : a.vertices()) {
        x.push_back(p + Vec3(5, 0, 0));
    }
    for (const Face& t : a.faces()) {
        f.push_back({t[0] + 12, t[1] + 12, t[2] + 12});
    }
    const TriMesh two(x, f);
    CHECK(component_count(two) == 2);
    CHECK_THROWS_AS(genus(two), MeshError);
}

TEST_CASE("sphere curvature matches closed form")
{
    for (int level = 3; level <= 4; ++level) {
        const TriMesh m = make_icosphere(2.0, level);
        const CurvatureData cd = curvature(m);
        for (Eigen::Index i = 0; i < cd.H.size(); ++i) {
            CHECK(cd.H[i] == doctest::Approx(1.0).epsilon(0.01));
            CHECK(cd.A_norm2[i] == doctest::Approx(0.5).epsilon(0.01));
            CHECK(cd.A3[i] == doctest::Approx(0.25).epsilon(0.015));
            CHECK(cd.normal[static_cast<std::size_t>(i)].norm() == doctest::Approx(1.0).epsilon(1e-9));
        }
        CHECK(cd.clamped_weights == 0);
    }
}

TEST_CASE("flat disk has vanishing curvature")
{
    const TriMesh disk = make_disk(1.0, 3);
    const CurvatureData cd = curvature(disk);
    for (std::size_t i = 0; i < disk.num_vertices(); ++i) {
        if (disk.is_boundary(static_cast<int>(i))) {
            continue;
        }
        CHECK(std::abs(cd.H[static_cast<Eigen::Index>(i)]) < 1e-10);
        CHECK(cd.A_norm2[static_cast<Eigen::Index>(i)] < 1e-18);
    }
}

TEST_CASE("curvature converges under refinement")
{
    // Errors against H = 2/r and |A|^2 = 2/r^2 on levels 2..5; demand at
    // least first order (2x per level) for both, second order for H.
    double prev_h = 0.0;
    double prev_a = 0.0;
    for (int level = 2; level <= 5; ++level) {
        const CurvatureData cd = curvature(make_icosphere(2.0, level));
        const double eh = (cd.H.array() - 1.0).abs().maxCoeff();
        const double ea = (cd.A_norm2.array() - 0.5).abs().maxCoeff();
        if (level > 2) {
            CHECK(prev_h / eh > 3.0);
            CHECK(prev_a / ea > 2.0);
        }
        prev_h = eh;
        prev_a = ea;
    }
}

TEST_CASE("principal values satisfy the power-sum identity")
{
    // k1^3 + k2^3 = s^3 - 3 s k1 k2 with s = k1 + k2, on curved test shapes.
    for (const TriMesh& m : {make_torus(2.0, 0.5, 1), make_icosphere(1.5, 3),
                             scaled_axes(make_icosphere(1.0, 3), Vec3(2, 2, 1))}) {
        const CurvatureData cd = curvature(m);
        for (Eigen::Index i = 0; i < cd.H.size(); ++i) {
            const double s = cd.kappa1[i] + cd.kappa2[i];
            const double rhs = s * s * s - 3.0 * s * cd.gauss(i);
            CHECK(std::abs(cd.A3[i] - rhs) <= 1e-9 * std::max(1.0, std::abs(cd.A3[i])));
            CHECK(cd.A_norm2[i] == doctest::Approx(s * s - 2.0 * cd.gauss(i)).epsilon(1e-12));
        }
    }
}

TEST_CASE("mean curvature is positive on closed convex meshes")
{
    for (const TriMesh& m : {make_icosphere(0.7, 2), scaled_axes(make_icosphere(1.0, 3), Vec3(2, 2, 1)),
                             scaled_axes(make_icosphere(1.0, 2), Vec3(1, 3, 0.5))}) {
        REQUIRE(is_convex(m));
        const MeanCurvature mc = mean_curvature(m);
        CHECK(mc.H.minCoeff() > 0.0);
    }
}

TEST_CASE("lambda residual on sphere family")
{
    SUBCASE("shrinker sphere converges at second order")
    {
        double prev = 0.0;
        for (int level = 2; level <= 5; ++level) {
            const double e = max_abs(lambda_residual(make_icosphere(2.0, level), 0.0));
            if (level > 2) {
                CHECK(prev / e > 3.0);
            }
            prev = e;
        }
        CHECK(prev < 1e-4);
    }
    SUBCASE("lambda = 1 sphere")
    {
        const double r = lambda_sphere_radius_oracle(1.0);
        CHECK(r == doctest::Approx(std::sqrt(5.0) - 1.0));
        const double e3 = max_abs(lambda_residual(make_icosphere(r, 3), 1.0));
        const double e4 = max_abs(lambda_residual(make_icosphere(r, 4), 1.0));
        CHECK(e4 < e3 / 3.0);
        CHECK(e4 < 1e-3);
    }
    SUBCASE("wrong lambda leaves a constant offset")
    {
        // 2/r - r/2 - lambda with r = 2, lambda = 1.
        const Field res = lambda_residual(make_icosphere(2.0, 4), 1.0);
        for (Eigen::Index i = 0; i < res.size(); ++i) {
            CHECK(res[i] == doctest::Approx(-1.0).epsilon(1e-3));
        }
    }
}

TEST_CASE("lambda residual is affine in lambda")
{
    const TriMesh m = make_torus(2.0, 0.7, 0);
    const Field base = lambda_residual(m, 0.0);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dist(-3.0, 3.0);
    for (int trial = 0; trial < 20; ++trial) {
        const double lambda = dist(rng);
        const Field r = lambda_residual(m, lambda);
        CHECK((r - (base.array() - lambda).matrix()).cwiseAbs().maxCoeff() < 1e-14);
    }
}

TEST_CASE("ball patches")
{
    const TriMesh sphere = make_icosphere(2.0, 5);
    CHECK(ball_patch(sphere, Vec3::Zero(), 3.0).mesh.num_faces() == sphere.num_faces());
    CHECK(ball_patch(sphere, Vec3::Zero(), 1.0).mesh.empty());

    // Cap of height h = 1 on the radius-2 sphere. Oracle: midpoint-rule
    // integral of 2 pi r^2 sin(theta) over the polar range of the cap.
    const double r = 2.0;
    const double theta_max = std::acos(1.0 - 1.0 / r);
    const int n = 20000;
    double oracle = 0.0;
    for (int i = 0; i < n; ++i) {
        const double th = (i + 0.5) * theta_max / n;
        oracle += 2.0 * kPi * r * r * std::sin(th) * theta_max / n;
    }
    CHECK(oracle == doctest::Approx(4.0 * kPi).epsilon(1e-8));
    const Patch cap = ball_patch(sphere, Vec3(2, 0, 0), 2.0);
    CHECK_FALSE(cap.mesh.is_closed());
    CHECK(boundary_loop_count(cap.mesh) == 1);
    CHECK(capped_genus(cap.mesh) == 0);
    // Vertex inclusion drops an O(h) strip along the rim: the deficit must
    // shrink at first order and the area must stay below the exact cap.
    double prev = 0.0;
    for (int level = 3; level <= 6; ++level) {
        const double area = total_area(ball_patch(make_icosphere(2.0, level), Vec3(2, 0, 0), 2.0).mesh);
        CHECK(area < oracle);
        const double deficit = oracle - area;
        if (level > 3) {
            CHECK(prev / deficit > 1.6);
        }
        prev = deficit;
    }
    CHECK(prev / oracle < 0.02);
    CHECK_THROWS(ball_patch(sphere, Vec3::Zero(), 0.0));
}

TEST_CASE("capped genus of torus pieces")
{
    const TriMesh torus = make_torus(2.0, 0.5, 1);
    CHECK(capped_genus(torus) == 1);
    // A ball around one side of the tube cuts out a cylinder-like piece: genus 0.
    CHECK(capped_genus(ball_patch(torus, Vec3(2, 0, 0), 1.0).mesh) == 0);
    CHECK(capped_genus(ball_patch(torus, Vec3::Zero(), 3.0).mesh) == 1);
}

TEST_CASE("OBJ and OFF round trips preserve the mesh")
{
    const TriMesh m = make_torus(1.5, 0.4, 0);
    std::stringstream obj;
    write_obj(obj, m);
    const TriMesh back = read_obj(obj);
    CHECK(back.hash() == m.hash());

    std::stringstream off;
    write_off(off, m);
    CHECK(read_off(off).hash() == m.hash());

    std::stringstream quad("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1/1/1 2/2/2 3/3/3 4/4/4\n");
    CHECK(read_obj(quad).num_faces() == 2);
    std::stringstream bad("v 0 0 0\nf 1 x 2\n");
    CHECK_THROWS_AS(read_obj(bad), IoError);
    std::stringstream truncated("OFF\n4 2 0\n0 0 0\n1 0 0\n");
    CHECK_THROWS_AS(read_off(truncated), IoError);
    CHECK_THROWS_AS(read_mesh("/nonexistent/mesh.obj"), IoError);
}

TEST_CASE("curvature CSV layout")
{
    const CurvatureData cd = curvature(make_icosphere(1.0, 0));
    std::stringstream csv;
    write_curvature_csv(csv, cd);
    std::string header;
    std::getline(csv, header);
    CHECK(header == "vertex_id,H,A_norm2,A3");
    int rows = 0;
    for (std::string line; std::getline(csv, line);) {
        ++rows;
    }
    CHECK(rows == 12);
}

TEST_CASE("curvature is bitwise deterministic")
{
    const TriMesh m = make_icosphere(1.3, 3);
    const CurvatureData a = curvature(m);
    const CurvatureData b = curvature(m);
    CHECK((a.H.array() == b.H.array()).all());
    CHECK((a.A3.array() == b.A3.array()).all());
}

TEST_CASE("shape spec parsing")
{
    CHECK(parse_shape_kind("sphere") == ShapeKind::icosphere);
    CHECK(parse_shape_kind("torus") == ShapeKind::torus);
    CHECK_THROWS_AS(parse_shape_kind("klein-bottle"), std::invalid_argument);
    ShapeSpec spec;
    spec.kind = ShapeKind::icosphere;
    spec.radius = -1.0;
    CHECK_THROWS_AS(build_primitive(spec), std::invalid_argument);
    spec.radius = 1.0;
    spec.level = -1;
    CHECK_THROWS_AS(build_primitive(spec), std::invalid_argument);
    spec.level = 1;
    spec.center = Vec3(1, 2, 3);
    const TriMesh m = build_primitive(spec);
    for (const Vec3& p : m.vertices()) {
        CHECK((p - spec.center).norm() == doctest::Approx(1.0));
    }
}
