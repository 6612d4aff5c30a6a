#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "lambdalab/identities.hpp"
#include "lambdalab/primitives.hpp"
#include "lambdalab/spectrum.hpp"
#include "lambdalab/weighted_operator.hpp"

using namespace lambdalab;

namespace {

double sphere_radius(double lambda)
{
    return std::sqrt(lambda * lambda + 4.0) - lambda;
}

/// Spectrum of Delta + 2/r^2 + 1/2 on the round sphere, descending, from
/// spherical harmonics: degree l has value 2/r^2 + 1/2 - l(l+1)/r^2 with
/// multiplicity 2l + 1.
std::vector<double> sphere_stability_spectrum(double r, std::size_t count)
{
    std::vector<double> out;
    for (int l = 0; out.size() < count; ++l) {
        for (int m = 0; m < 2 * l + 1 && out.size() < count; ++m) {
            out.push_back(2.0 / (r * r) + 0.5 - l * (l + 1) / (r * r));
        }
    }
    return out;
}

Field random_field(Eigen::Index n, std::mt19937_64& rng)
{
    std::normal_distribution<double> dist;
    Field f(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        f[i] = dist(rng);
    }
    return f;
}

double mass_norm(const WeightedOperator& op, const Field& f)
{
    return std::sqrt(op.inner(f, f));
}

std::vector<TriMesh> assorted_meshes()
{
    return {make_icosphere(2.0, 2), make_torus(2.0, 0.6, 0), scaled_axes(make_icosphere(1.0, 2), Vec3(1.5, 1, 0.7)),
            make_disk(1.0, 1), translated(make_icosphere(1.0, 2), Vec3(0.5, -0.3, 0.2))};
}

}  // namespace

TEST_CASE("gaussian area")
{
    const double oracle = 16.0 * std::numbers::pi * std::exp(-1.0);
    CHECK(oracle == doctest::Approx(18.4916).epsilon(1e-5));
    CHECK(gaussian_area(make_icosphere(2.0, 4)) == doctest::Approx(oracle).epsilon(0.005));
    CHECK(gaussian_area(TriMesh()) == 0.0);
    const TriMesh sphere = make_icosphere(2.0, 3);
    CHECK(gaussian_area(translated(sphere, Vec3(10, 0, 0))) < gaussian_area(sphere));
}

TEST_CASE("drift Laplacian structure")
{
    for (const TriMesh& m : assorted_meshes()) {
        const WeightedOperator op = drift_laplacian(m);
        CHECK(op.kind == OperatorKind::drift_laplacian);
        const SparseMatrix asym = SparseMatrix(op.stiffness.transpose()) - op.stiffness;
        CHECK(asym.norm() <= 1e-12 * op.stiffness.norm());
        CHECK(op.mass.minCoeff() > 0.0);
        const Field ones = Field::Ones(op.size());
        CHECK((op.stiffness * ones).norm() <= 1e-10 * op.stiffness.norm());
        CHECK(op.apply(ones).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("drift Laplacian on origin-centred spheres")
{
    const TriMesh sphere = make_icosphere(2.0, 4);
    const WeightedOperator op = drift_laplacian(sphere);
    Field x1(op.size());
    for (Eigen::Index i = 0; i < op.size(); ++i) {
        x1[i] = sphere.vertices()[static_cast<std::size_t>(i)].x();
    }
    // Tangential drift vanishes, so the operator is the sphere Laplacian.
    const Field lx = op.apply(x1);
    CHECK((lx + 0.5 * x1).norm() <= 0.02 * (0.5 * x1).norm());

    for (double lambda : {-0.5, 0.0, 1.0}) {
        const TriMesh m = make_icosphere(sphere_radius(lambda), 3);
        const WeightedOperator d = drift_laplacian(m);
        Field dist2(d.size());
        for (Eigen::Index i = 0; i < d.size(); ++i) {
            dist2[i] = m.vertices()[static_cast<std::size_t>(i)].squaredNorm();
        }
        CHECK(d.apply(dist2).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("stability operator potential")
{
    for (double r : {2.0, 1.5}) {
        const WeightedOperator op = stability_operator(make_icosphere(r, 4));
        CHECK(op.kind == OperatorKind::stability);
        const Field l1 = op.apply(Field::Ones(op.size()));
        for (Eigen::Index i = 0; i < l1.size(); ++i) {
            CHECK(l1[i] == doctest::Approx(2.0 / (r * r) + 0.5).epsilon(0.01));
        }
    }
    const TriMesh disk = make_disk(1.0, 2);
    const WeightedOperator op = stability_operator(disk);
    for (Eigen::Index i = 0; i < op.size(); ++i) {
        if (!disk.is_boundary(static_cast<int>(i))) {
            CHECK(op.potential[i] == doctest::Approx(0.5).epsilon(1e-12));
        }
    }
}

TEST_CASE("self-adjointness and discrete Green identity")
{
    std::mt19937_64 rng(11);
    for (const TriMesh& m : assorted_meshes()) {
        const WeightedOperator op = stability_operator(m);
        for (int trial = 0; trial < 5; ++trial) {
            const Field phi = random_field(op.size(), rng);
            const Field psi = random_field(op.size(), rng);
            const double a = op.inner(op.apply(phi), psi);
            const double b = op.inner(phi, op.apply(psi));
            const double scale = mass_norm(op, op.apply(phi)) * mass_norm(op, psi)
                                 + mass_norm(op, phi) * mass_norm(op, op.apply(psi));
            CHECK(std::abs(a - b) <= 1e-10 * scale);

            const double q = quadratic_form(op, phi);
            const double lphi = op.inner(phi, op.apply(phi));
            CHECK(std::abs(q + lphi) <= 1e-9 * std::max(std::abs(q), std::abs(lphi)));
        }
    }
}

TEST_CASE("quadratic form examples")
{
    const double lambda = 1.0;
    const double r = sphere_radius(lambda);
    const TriMesh m = make_icosphere(r, 4);
    const WeightedOperator op = stability_operator(m);
    CHECK(quadratic_form(op, Field::Zero(op.size())) == 0.0);

    const double expected = -(2.0 / (r * r) + 0.5) * gaussian_area(m);
    CHECK(quadratic_form(op, Field::Ones(op.size())) == doctest::Approx(expected).epsilon(0.005));
    CHECK(quadratic_form(m, Field::Ones(op.size())) == doctest::Approx(quadratic_form(op, Field::Ones(op.size()))));

    // phi = <n(p), n> is an eigenfunction with value 1/2.
    const CurvatureData cd = curvature(m);
    const Vec3 np = cd.normal[0];
    Field phi(op.size());
    for (Eigen::Index i = 0; i < op.size(); ++i) {
        phi[i] = np.dot(cd.normal[static_cast<std::size_t>(i)]);
    }
    const double q = quadratic_form(op, phi);
    CHECK(q < 0.0);
    CHECK(q == doctest::Approx(-0.5 * op.inner(phi, phi)).epsilon(0.02));
}

TEST_CASE("spectrum of L on the shrinker sphere")
{
    const WeightedOperator op = stability_operator(make_icosphere(2.0, 4));
    const Spectrum sp = spectrum(op, 9, SpectrumEnd::largest);
    const std::vector<double> oracle = sphere_stability_spectrum(2.0, 9);
    REQUIRE(sp.eigenvalues.size() == 9);
    CHECK_FALSE(sp.dense);
    for (std::size_t j = 0; j < 9; ++j) {
        CHECK(std::abs(sp.eigenvalues[j] - oracle[j]) <= 0.02 * std::abs(oracle[j]));
        CHECK(sp.residuals[j] <= 1e-8);
    }
    // Everything above -1/2 is in the list, so the nearest values to 0 are known.
    double gap = std::numeric_limits<double>::infinity();
    for (double mu : sp.eigenvalues) {
        gap = std::min(gap, std::abs(mu));
    }
    CHECK(gap > 0.4);
    for (std::size_t a = 0; a < 9; ++a) {
        for (std::size_t b = 0; b < 9; ++b) {
            const double g = op.inner(sp.eigenvectors[a], sp.eigenvectors[b]);
            CHECK(std::abs(g - (a == b ? 1.0 : 0.0)) < 1e-8);
        }
    }
}

TEST_CASE("principal eigenpair on lambda-spheres")
{
    for (double lambda : {-0.5, 0.5, 1.0}) {
        const double r = sphere_radius(lambda);
        const WeightedOperator op = stability_operator(make_icosphere(r, 3));
        const Spectrum sp = spectrum(op, 1, SpectrumEnd::largest);
        CHECK(sp.eigenvalues[0] == doctest::Approx(2.0 / (r * r) + 0.5).epsilon(0.02));
        CHECK(sp.eigenvectors[0].minCoeff() > 0.0);
    }
}

TEST_CASE("drift Laplacian top eigenpair is the constant")
{
    for (const TriMesh& m : {make_torus(2.0, 0.6, 1), make_icosphere(1.0, 4)}) {
        const WeightedOperator op = drift_laplacian(m);
        const Spectrum sp = spectrum(op, 1, SpectrumEnd::largest);
        CHECK(std::abs(sp.eigenvalues[0]) < 1e-8);
        const Field& v = sp.eigenvectors[0];
        CHECK((v.array() - v.mean()).abs().maxCoeff() < 1e-6 * std::abs(v.mean()));
        CHECK(v.mean() > 0.0);
    }
}

TEST_CASE("iterative and dense solvers agree with an independent dense oracle")
{
    const TriMesh m = make_torus(2.0, 0.7, 1);
    const WeightedOperator op = stability_operator(m);
    // Oracle: generalized dense problem solved without the library's scaling.
    const Eigen::MatrixXd s = Eigen::MatrixXd(op.stiffness);
    const Eigen::MatrixXd mass = op.mass.asDiagonal();
    const Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> oracle(s, mass);
    const Eigen::VectorXd mu = oracle.eigenvalues();
    const Eigen::Index n = mu.size();
    REQUIRE(n > 400);

    for (SpectrumEnd end : {SpectrumEnd::largest, SpectrumEnd::smallest}) {
        SpectrumOptions iterative;
        SpectrumOptions dense;
        dense.dense_limit = n;
        const Spectrum a = spectrum(op, 6, end, iterative);
        const Spectrum b = spectrum(op, 6, end, dense);
        CHECK_FALSE(a.dense);
        CHECK(b.dense);
        for (int j = 0; j < 6; ++j) {
            const double expected = end == SpectrumEnd::largest ? mu[n - 1 - j] : mu[j];
            const double tol = 1e-9 * std::max(1.0, std::abs(expected));
            CHECK(std::abs(a.eigenvalues[static_cast<std::size_t>(j)] - expected) <= tol);
            CHECK(std::abs(b.eigenvalues[static_cast<std::size_t>(j)] - expected) <= tol);
            CHECK(a.residuals[static_cast<std::size_t>(j)] <= 1e-8);
        }
        if (end == SpectrumEnd::smallest) {
            CHECK(a.eigenvalues.front() < a.eigenvalues.back());
        }
    }
}

TEST_CASE("spectrum argument checks and determinism")
{
    const WeightedOperator op = drift_laplacian(make_icosphere(1.0, 1));
    CHECK_THROWS_AS(spectrum(op, 0, SpectrumEnd::largest), std::invalid_argument);
    CHECK_THROWS_AS(spectrum(op, static_cast<int>(op.size()), SpectrumEnd::largest), std::invalid_argument);
    CHECK_THROWS_AS(parse_spectrum_end("middle"), std::invalid_argument);

    const WeightedOperator big = stability_operator(make_icosphere(2.0, 3));
    const Spectrum a = spectrum(big, 4, SpectrumEnd::largest);
    const Spectrum b = spectrum(big, 4, SpectrumEnd::largest);
    for (std::size_t j = 0; j < 4; ++j) {
        CHECK(a.eigenvalues[j] == b.eigenvalues[j]);
        CHECK((a.eigenvectors[j].array() == b.eigenvectors[j].array()).all());
    }
    SpectrumOptions starved;
    starved.max_iterations = 1;
    CHECK_THROWS_AS(spectrum(big, 4, SpectrumEnd::largest, starved), SolverError);
}

TEST_CASE("normal components span the eigenspace of 1/2")
{
    const double lambda = 1.0;
    const TriMesh m = make_icosphere(sphere_radius(lambda), 4);
    const WeightedOperator op = stability_operator(m);
    const CurvatureData cd = curvature(m);
    std::array<Field, 3> basis;
    for (int c = 0; c < 3; ++c) {
        basis[static_cast<std::size_t>(c)].resize(op.size());
        for (Eigen::Index i = 0; i < op.size(); ++i) {
            basis[static_cast<std::size_t>(c)][i] = cd.normal[static_cast<std::size_t>(i)][c];
        }
    }
    // Rayleigh-Ritz on the three-dimensional span.
    Eigen::Matrix3d a;
    Eigen::Matrix3d g;
    for (std::size_t p = 0; p < 3; ++p) {
        for (std::size_t q = 0; q < 3; ++q) {
            a(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q)) = op.inner(basis[p], op.apply(basis[q]));
            g(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q)) = op.inner(basis[p], basis[q]);
        }
    }
    const Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::Matrix3d> ritz(0.5 * (a + a.transpose()), g);
    for (int j = 0; j < 3; ++j) {
        CHECK(ritz.eigenvalues()[j] == doctest::Approx(0.5).epsilon(0.02));
    }
}

TEST_CASE("eigenfunction identity")
{
    for (double lambda : {-0.5, 0.0, 1.0}) {
        double prev = 0.0;
        for (int level = 3; level <= 5; ++level) {
            const TriMesh m = make_icosphere(sphere_radius(lambda), level);
            const ResidualReport rep = verify_eigenfunction_identity(m, lambda, Vec3(0, 0, 1));
            if (level == 4) {
                CHECK(rep.relative <= 0.05);
            }
            if (level > 3) {
                CHECK(rep.relative < prev);
            }
            prev = rep.relative;
        }
    }
    const ResidualReport zero = verify_eigenfunction_identity(make_icosphere(2.0, 3), 0.0, Vec3::Zero());
    CHECK(zero.exact_zero);
    CHECK(zero.relative == 0.0);
    CHECK(zero.absolute == 0.0);
    CHECK_THROWS_AS(verify_eigenfunction_identity(make_icosphere(2.0, 3), 1.0, Vec3(0, 0, 1)), PreconditionError);
    CHECK_THROWS_AS(verify_eigenfunction_identity(make_torus(2.0, 0.5, 1), 0.0, Vec3(0, 0, 1)), PreconditionError);
}

TEST_CASE("drift distance identity")
{
    for (double lambda : {-0.5, 0.0, 1.0}) {
        const double r = sphere_radius(lambda);
        // Oracle: at x0 = 0 the right side is -r^2 - 2 lambda r + 4 = 0.
        CHECK(std::abs(-r * r - 2.0 * lambda * r + 4.0) < 1e-12);
        const TriMesh m = make_icosphere(r, 4);
        const ResidualReport at_origin = verify_drift_distance_identity(m, lambda, Vec3::Zero());
        CHECK(at_origin.lhs_max <= 1e-3);
        CHECK(at_origin.rhs_max <= 1e-3);
        CHECK(at_origin.relative <= 0.05);

        double prev = 0.0;
        for (int level = 3; level <= 5; ++level) {
            const ResidualReport off =
                verify_drift_distance_identity(make_icosphere(r, level), lambda, Vec3(1, 0, 0));
            if (level == 4) {
                CHECK(off.relative <= 0.05);
            }
            if (level > 3) {
                CHECK(off.relative < prev);
            }
            prev = off.relative;
        }
    }
}

TEST_CASE("Simons identity and its sign convention")
{
    CHECK(simons_sign_oracle(3) == kSimonsLambdaSign);

    const double lambda = 1.0;
    const double r = sphere_radius(lambda);
    const TriMesh m = make_icosphere(r, 4);
    const ResidualReport right = verify_simons(m, lambda, kSimonsLambdaSign);
    CHECK(right.relative <= 0.05);
    // Bracket on the sphere: -4 lambda/r^3 + sign * 4 lambda/r^3.
    const double flipped_gap = 8.0 * lambda / (r * r * r);
    CHECK(flipped_gap == doctest::Approx(4.236).epsilon(1e-3));
    const ResidualReport wrong = verify_simons(m, lambda, -kSimonsLambdaSign);
    CHECK(wrong.absolute >= 0.9 * flipped_gap);

    const TriMesh shrinker = make_icosphere(2.0, 4);
    const ResidualReport plus = verify_simons(shrinker, 0.0, +1);
    const ResidualReport minus = verify_simons(shrinker, 0.0, -1);
    CHECK(plus.absolute == minus.absolute);
    CHECK(plus.relative <= 0.05);

    CHECK_THROWS_AS(verify_simons(m, lambda, 0), std::invalid_argument);
    VerifyOptions loose;
    loose.lambda_threshold = 1e9;
    CHECK_THROWS_AS(verify_simons(scaled_axes(make_icosphere(1.0, 3), Vec3(1.3, 1, 1)), 0.0, 1, loose),
                    PreconditionError);
}
