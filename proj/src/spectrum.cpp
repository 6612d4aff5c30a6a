#include "lambdalab/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

namespace lambdalab {

const char* to_string(SpectrumEnd end)
{
    return end == SpectrumEnd::largest ? "largest" : "smallest";
}

SpectrumEnd parse_spectrum_end(const std::string& text)
{
    if (text == "largest") {
        return SpectrumEnd::largest;
    }
    if (text == "smallest") {
        return SpectrumEnd::smallest;
    }
    throw std::invalid_argument("unknown spectrum end '" + text + "' (expected largest or smallest)");
}

double eigen_residual(const WeightedOperator& op, double mu, const Field& v)
{
    const Field mv = op.mass.cwiseProduct(v);
    const double denom = mv.norm() * std::max(1.0, std::abs(mu));
    return denom > 0.0 ? (op.stiffness * v - mu * mv).norm() / denom : 0.0;
}

namespace {

// Fixes the sign of a mass-normalized eigenvector deterministically.
void orient(const Field& mass, Field& v)
{
    double total = mass.dot(v);
    if (std::abs(total) <= 1e-10 * mass.sum() * v.cwiseAbs().maxCoeff()) {
        Eigen::Index at = 0;
        v.cwiseAbs().maxCoeff(&at);
        total = v[at];
    }
    if (total < 0.0) {
        v = -v;
    }
}

void finish(const WeightedOperator& op, const Field& inv_sqrt_mass, double sign, const Eigen::VectorXd& theta,
            const Eigen::MatrixXd& basis, int k, Spectrum& out)
{
    for (int j = 0; j < k; ++j) {
        Field v = inv_sqrt_mass.cwiseProduct(basis.col(j));
        orient(op.mass, v);
        const double mu = sign * theta[j];
        out.residuals.push_back(eigen_residual(op, mu, v));
        out.eigenvalues.push_back(mu);
        out.eigenvectors.push_back(std::move(v));
    }
}

}  // namespace

Spectrum spectrum(const WeightedOperator& op, int k, SpectrumEnd end, const SpectrumOptions& options)
{
    const Eigen::Index n = op.size();
    if (k < 1 || k >= n) {
        throw std::invalid_argument("spectrum: need 1 <= k < vertex count");
    }
    if ((op.mass.array() <= 0.0).any()) {
        throw std::invalid_argument("spectrum: mass must be positive");
    }
    // Symmetric standard form B = sign * M^{-1/2} S M^{-1/2}; the wanted end
    // is always the top of B.
    const double sign = end == SpectrumEnd::largest ? 1.0 : -1.0;
    const Field inv_sqrt_mass = op.mass.cwiseSqrt().cwiseInverse();
    const SparseMatrix scaled =
        sign * (inv_sqrt_mass.asDiagonal() * op.stiffness * inv_sqrt_mass.asDiagonal()).eval();

    Spectrum out;
    out.which_end = end;

    if (n <= options.dense_limit) {
        const Eigen::MatrixXd dense = Eigen::MatrixXd(scaled);
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(dense);
        if (eig.info() != Eigen::Success) {
            throw SolverError("spectrum: dense eigensolver failed");
        }
        const Eigen::VectorXd theta = eig.eigenvalues().reverse();
        const Eigen::MatrixXd basis = eig.eigenvectors().rowwise().reverse();
        out.dense = true;
        finish(op, inv_sqrt_mass, sign, theta, basis, k, out);
        return out;
    }

    // Shift-invert block subspace iteration. The Gershgorin bound puts the
    // shift above the spectrum, so sigma I - B is positive definite and its
    // dominant eigenvectors are the top of B.
    double bound = -std::numeric_limits<double>::infinity();
    for (Eigen::Index col = 0; col < scaled.outerSize(); ++col) {
        double diag = 0.0;
        double off = 0.0;
        for (SparseMatrix::InnerIterator it(scaled, col); it; ++it) {
            if (it.row() == it.col()) {
                diag = it.value();
            } else {
                off += std::abs(it.value());
            }
        }
        bound = std::max(bound, diag + off);
    }
    const double shift = bound + 1e-2 * std::max(1.0, std::abs(bound));
    SparseMatrix shifted = -scaled;
    for (Eigen::Index i = 0; i < n; ++i) {
        shifted.coeffRef(i, i) += shift;
    }
    Eigen::SimplicialLDLT<SparseMatrix> factor(shifted);
    if (factor.info() != Eigen::Success) {
        throw SolverError("spectrum: factorization of the shifted operator failed");
    }

    const Eigen::Index block = std::min<Eigen::Index>(n, 2 * k + 8);
    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd x(n, block);
    for (Eigen::Index c = 0; c < block; ++c) {
        for (Eigen::Index r = 0; r < n; ++r) {
            x(r, c) = normal(rng);
        }
    }
    for (int iter = 1; iter <= options.max_iterations; ++iter) {
        const Eigen::MatrixXd y = factor.solve(x);
        const Eigen::MatrixXd q = y.householderQr().householderQ() * Eigen::MatrixXd::Identity(n, block);
        const Eigen::MatrixXd projected = q.transpose() * (scaled * q);
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ritz(0.5 * (projected + projected.transpose()));
        const Eigen::VectorXd theta = ritz.eigenvalues().reverse();
        x = q * ritz.eigenvectors().rowwise().reverse();

        bool converged = true;
        for (int j = 0; j < k && converged; ++j) {
            const Field v = inv_sqrt_mass.cwiseProduct(x.col(j));
            converged = eigen_residual(op, sign * theta[j], v) <= options.tolerance;
        }
        if (converged) {
            out.iterations = iter;
            finish(op, inv_sqrt_mass, sign, theta, x, k, out);
            return out;
        }
    }
    throw SolverError("spectrum: no convergence after " + std::to_string(options.max_iterations) + " iterations");
}

}  // namespace lambdalab
