#include "lambdalab/weighted_operator.hpp"

#include <cmath>
#include <vector>

namespace lambdalab {

const char* to_string(OperatorKind kind)
{
    return kind == OperatorKind::drift_laplacian ? "drift_laplacian" : "stability";
}

Field WeightedOperator::apply(const Field& f) const
{
    return (stiffness * f).cwiseQuotient(mass);
}

double WeightedOperator::inner(const Field& f, const Field& g) const
{
    return (mass.array() * f.array() * g.array()).sum();
}

double gaussian_weight(const Vec3& x)
{
    return std::exp(-0.25 * x.squaredNorm());
}

double gaussian_area(const TriMesh& mesh)
{
    double total = 0.0;
    const auto& x = mesh.vertices();
    for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
        const Face& t = mesh.faces()[f];
        const Vec3 bary = (x[static_cast<std::size_t>(t[0])] + x[static_cast<std::size_t>(t[1])]
                           + x[static_cast<std::size_t>(t[2])])
                          / 3.0;
        total += face_area(mesh, f) * gaussian_weight(bary);
    }
    return total;
}

namespace {

WeightedOperator assemble(const TriMesh& mesh, const CotanGeometry& geo)
{
    const auto n = static_cast<Eigen::Index>(mesh.num_vertices());
    const auto& x = mesh.vertices();
    WeightedOperator op;
    op.mass.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        op.mass[i] = geo.vertex_area[i] * gaussian_weight(x[static_cast<std::size_t>(i)]);
    }
    std::vector<double> diagonal(static_cast<std::size_t>(n), 0.0);
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(2 * mesh.num_edges() + static_cast<std::size_t>(n));
    for (std::size_t e = 0; e < mesh.num_edges(); ++e) {
        const Edge& ed = mesh.edges()[e];
        const Vec3 mid = 0.5 * (x[static_cast<std::size_t>(ed.v0)] + x[static_cast<std::size_t>(ed.v1)]);
        const double w = geo.edge_weight[e] * gaussian_weight(mid);
        entries.emplace_back(ed.v0, ed.v1, w);
        entries.emplace_back(ed.v1, ed.v0, w);
        diagonal[static_cast<std::size_t>(ed.v0)] -= w;
        diagonal[static_cast<std::size_t>(ed.v1)] -= w;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        entries.emplace_back(i, i, diagonal[static_cast<std::size_t>(i)]);
    }
    op.stiffness.resize(n, n);
    op.stiffness.setFromTriplets(entries.begin(), entries.end());
    op.potential = Field::Zero(n);
    return op;
}

}  // namespace

WeightedOperator drift_laplacian(const TriMesh& mesh)
{
    return assemble(mesh, cotan_geometry(mesh));
}

WeightedOperator stability_operator(const TriMesh& mesh, const CurvatureData& curvature)
{
    WeightedOperator op = assemble(mesh, cotan_geometry(mesh));
    op.kind = OperatorKind::stability;
    op.potential = (curvature.A_norm2.array() + 0.5).matrix();
    for (Eigen::Index i = 0; i < op.size(); ++i) {
        op.stiffness.coeffRef(i, i) += op.mass[i] * op.potential[i];
    }
    return op;
}

WeightedOperator stability_operator(const TriMesh& mesh)
{
    return stability_operator(mesh, curvature(mesh));
}

double quadratic_form(const WeightedOperator& op, const Field& f)
{
    double energy = 0.0;
    for (Eigen::Index col = 0; col < op.stiffness.outerSize(); ++col) {
        for (SparseMatrix::InnerIterator it(op.stiffness, col); it; ++it) {
            if (it.row() < it.col()) {
                const double d = f[it.row()] - f[it.col()];
                energy += it.value() * d * d;
            }
        }
    }
    return energy - (op.mass.array() * op.potential.array() * f.array().square()).sum();
}

double quadratic_form(const TriMesh& mesh, const Field& f)
{
    return quadratic_form(stability_operator(mesh), f);
}

}  // namespace lambdalab
