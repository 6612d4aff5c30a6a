#include "lambdalab/curvature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

namespace lambdalab {

namespace {

double cot_between(const Vec3& u, const Vec3& w)
{
    return u.dot(w) / u.cross(w).norm();
}

/// Vertices at graph distance 1 or 2, ascending, excluding the center.
std::vector<int> two_ring(const TriMesh& mesh, int v)
{
    std::vector<int> ring;
    const auto& nb = mesh.neighbors();
    for (int a : nb[static_cast<std::size_t>(v)]) {
        ring.push_back(a);
        for (int b : nb[static_cast<std::size_t>(a)]) {
            ring.push_back(b);
        }
    }
    std::sort(ring.begin(), ring.end());
    ring.erase(std::unique(ring.begin(), ring.end()), ring.end());
    ring.erase(std::remove(ring.begin(), ring.end(), v), ring.end());
    return ring;
}

Field cotan_mean_curvature(const TriMesh& mesh, const CotanGeometry& geo, const std::vector<Vec3>& normal)
{
    const auto& x = mesh.vertices();
    std::vector<Vec3> lap(mesh.num_vertices(), Vec3::Zero());
    for (std::size_t e = 0; e < mesh.num_edges(); ++e) {
        const Edge& ed = mesh.edges()[e];
        const auto a = static_cast<std::size_t>(ed.v0);
        const auto b = static_cast<std::size_t>(ed.v1);
        const Vec3 d = geo.edge_weight[e] * (x[b] - x[a]);
        lap[a] += d;
        lap[b] -= d;
    }
    Field H(static_cast<Eigen::Index>(mesh.num_vertices()));
    for (std::size_t i = 0; i < mesh.num_vertices(); ++i) {
        H[static_cast<Eigen::Index>(i)] = -lap[i].dot(normal[i]) / geo.vertex_area[static_cast<Eigen::Index>(i)];
    }
    return H;
}

}  // namespace

CotanGeometry cotan_geometry(const TriMesh& mesh)
{
    CotanGeometry geo;
    const auto& x = mesh.vertices();
    geo.vertex_area = Field::Zero(static_cast<Eigen::Index>(mesh.num_vertices()));
    geo.edge_weight.assign(mesh.num_edges(), 0.0);
    for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
        const Face& t = mesh.faces()[f];
        std::array<Vec3, 3> p;
        for (int k = 0; k < 3; ++k) {
            p[static_cast<std::size_t>(k)] = x[static_cast<std::size_t>(t[static_cast<std::size_t>(k)])];
        }
        const double area = 0.5 * (p[1] - p[0]).cross(p[2] - p[0]).norm();
        std::array<double, 3> cot{};
        std::array<double, 3> dot{};
        for (std::size_t k = 0; k < 3; ++k) {
            const Vec3 u = p[(k + 1) % 3] - p[k];
            const Vec3 w = p[(k + 2) % 3] - p[k];
            cot[k] = cot_between(u, w);
            dot[k] = u.dot(w);
            geo.edge_weight[static_cast<std::size_t>(mesh.face_edges()[f][k])] += 0.5 * cot[k];
        }
        const bool obtuse = dot[0] < 0.0 || dot[1] < 0.0 || dot[2] < 0.0;
        for (std::size_t k = 0; k < 3; ++k) {
            const auto v = static_cast<Eigen::Index>(t[k]);
            if (obtuse) {
                geo.vertex_area[v] += dot[k] < 0.0 ? 0.5 * area : 0.25 * area;
            } else {
                const std::size_t j = (k + 1) % 3;
                const std::size_t l = (k + 2) % 3;
                geo.vertex_area[v] += ((p[l] - p[k]).squaredNorm() * cot[j] + (p[j] - p[k]).squaredNorm() * cot[l]) / 8.0;
            }
        }
    }
    for (double& w : geo.edge_weight) {
        if (w < 0.0) {
            w = 0.0;
            ++geo.clamped_weights;
        }
    }
    return geo;
}

std::vector<Vec3> vertex_normals(const TriMesh& mesh)
{
    std::vector<Vec3> n(mesh.num_vertices(), Vec3::Zero());
    for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
        const Vec3 a = face_area_vector(mesh, f);
        for (int v : mesh.faces()[f]) {
            n[static_cast<std::size_t>(v)] += a;
        }
    }
    for (Vec3& v : n) {
        v.normalize();
    }
    return n;
}

JetFit fit_jet(const TriMesh& mesh, int vertex, const Vec3& normal)
{
    const auto& x = mesh.vertices();
    const Vec3& p = x[static_cast<std::size_t>(vertex)];
    // Deterministic tangent frame.
    Eigen::Index min_axis = 0;
    normal.cwiseAbs().minCoeff(&min_axis);
    const Vec3 t1 = normal.cross(Vec3::Unit(min_axis)).normalized();
    const Vec3 t2 = normal.cross(t1);

    const std::vector<int> ring = two_ring(mesh, vertex);
    if (ring.size() < 5) {
        return {0.0, 0.0, normal};
    }
    // Quartic jet when the ring determines it; the quadric alone carries an
    // O(h^2) bias with a large constant from the quartic term. Boundary rings
    // are one-sided and stay quadratic.
    const Eigen::Index terms = (ring.size() >= 14 && !mesh.is_boundary(vertex)) ? 14 : 5;
    Eigen::MatrixXd design(static_cast<Eigen::Index>(ring.size()), terms);
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(ring.size()));
    for (std::size_t r = 0; r < ring.size(); ++r) {
        const Vec3 d = x[static_cast<std::size_t>(ring[r])] - p;
        const double u = d.dot(t1);
        const double v = d.dot(t2);
        const auto row = static_cast<Eigen::Index>(r);
        Eigen::Matrix<double, 14, 1> monomials;
        monomials << u * u, u * v, v * v, u, v, u * u * u, u * u * v, u * v * v, v * v * v, u * u * u * u,
            u * u * u * v, u * u * v * v, u * v * v * v, v * v * v * v;
        design.row(row) = monomials.head(terms).transpose();
        rhs[row] = d.dot(normal);
    }
    const Eigen::VectorXd c = design.colPivHouseholderQr().solve(rhs);
    const double fu = c[3];
    const double fv = c[4];
    const double wnorm = std::sqrt(1.0 + fu * fu + fv * fv);
    Eigen::Matrix2d second;
    second << 2.0 * c[0], c[1], c[1], 2.0 * c[2];
    second /= wnorm;
    Eigen::Matrix2d first;
    first << 1.0 + fu * fu, fu * fv, fu * fv, 1.0 + fv * fv;
    const Eigen::Matrix2d shape = first.inverse() * second;
    const double tr = shape.trace();
    const double det = shape.determinant();
    const double disc = std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
    // The surface bends away from an outward normal, so flip the sign.
    JetFit fit;
    fit.kappa1 = -(0.5 * tr - disc);
    fit.kappa2 = -(0.5 * tr + disc);
    fit.normal = (normal - fu * t1 - fv * t2) / wnorm;
    return fit;
}

MeanCurvature mean_curvature(const TriMesh& mesh)
{
    MeanCurvature mc;
    mc.normal = vertex_normals(mesh);
    const CotanGeometry geo = cotan_geometry(mesh);
    mc.H = cotan_mean_curvature(mesh, geo, mc.normal);
    for (std::size_t i = 0; i < mesh.num_vertices(); ++i) {
        if (mesh.is_boundary(static_cast<int>(i))) {
            const JetFit fit = fit_jet(mesh, static_cast<int>(i), mc.normal[i]);
            mc.H[static_cast<Eigen::Index>(i)] = fit.kappa1 + fit.kappa2;
        }
    }
    return mc;
}

CurvatureData curvature(const TriMesh& mesh)
{
    CurvatureData cd;
    const auto n = static_cast<Eigen::Index>(mesh.num_vertices());
    const std::vector<Vec3> area_normal = vertex_normals(mesh);
    cd.normal.resize(mesh.num_vertices());
    cd.kappa1.resize(n);
    cd.kappa2.resize(n);
    cd.A_norm2.resize(n);
    cd.A3.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const JetFit fit = fit_jet(mesh, static_cast<int>(i), area_normal[static_cast<std::size_t>(i)]);
        const double k1 = fit.kappa1;
        const double k2 = fit.kappa2;
        cd.normal[static_cast<std::size_t>(i)] = fit.normal;
        cd.kappa1[i] = k1;
        cd.kappa2[i] = k2;
        cd.A_norm2[i] = k1 * k1 + k2 * k2;
        cd.A3[i] = k1 * k1 * k1 + k2 * k2 * k2;
    }
    const CotanGeometry geo = cotan_geometry(mesh);
    cd.vertex_area = geo.vertex_area;
    cd.clamped_weights = geo.clamped_weights;
    cd.H = cotan_mean_curvature(mesh, geo, cd.normal);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (mesh.is_boundary(static_cast<int>(i))) {
            cd.H[i] = cd.kappa1[i] + cd.kappa2[i];
        }
    }
    return cd;
}

Field lambda_residual(const TriMesh& mesh, const CurvatureData& cd, double lambda)
{
    Field r(static_cast<Eigen::Index>(mesh.num_vertices()));
    for (std::size_t i = 0; i < mesh.num_vertices(); ++i) {
        r[static_cast<Eigen::Index>(i)] =
            cd.H[static_cast<Eigen::Index>(i)] - 0.5 * mesh.vertices()[i].dot(cd.normal[i]) - lambda;
    }
    return r;
}

Field lambda_residual(const TriMesh& mesh, const MeanCurvature& mc, double lambda)
{
    Field r(static_cast<Eigen::Index>(mesh.num_vertices()));
    for (std::size_t i = 0; i < mesh.num_vertices(); ++i) {
        r[static_cast<Eigen::Index>(i)] =
            mc.H[static_cast<Eigen::Index>(i)] - 0.5 * mesh.vertices()[i].dot(mc.normal[i]) - lambda;
    }
    return r;
}

Field lambda_residual(const TriMesh& mesh, double lambda)
{
    return lambda_residual(mesh, mean_curvature(mesh), lambda);
}

}  // namespace lambdalab
