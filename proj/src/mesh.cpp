#include "lambdalab/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>
#include <iomanip>

namespace lambdalab {

namespace {

struct HalfEdge {
    int a;
    int b;
    int face;
    int corner;  // corner opposite this half-edge
    std::uint64_t key() const
    {
        auto lo = static_cast<std::uint64_t>(std::min(a, b));
        auto hi = static_cast<std::uint64_t>(std::max(a, b));
        return (lo << 32) | hi;
    }
};

int find_root(std::vector<int>& parent, int i)
{
    while (parent[static_cast<std::size_t>(i)] != i) {
        parent[static_cast<std::size_t>(i)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(i)])];
        i = parent[static_cast<std::size_t>(i)];
    }
    return i;
}

std::shared_ptr<const Topology> build_topology(std::size_t vertex_count, std::vector<Face> faces)
{
    auto topo = std::make_shared<Topology>();
    topo->vertex_count = vertex_count;
    const auto nv = static_cast<int>(vertex_count);

    std::vector<HalfEdge> half;
    half.reserve(faces.size() * 3);
    for (std::size_t f = 0; f < faces.size(); ++f) {
        const Face& t = faces[f];
        for (int k = 0; k < 3; ++k) {
            if (t[static_cast<std::size_t>(k)] < 0 || t[static_cast<std::size_t>(k)] >= nv) {
                throw MeshError("face " + std::to_string(f) + " references vertex "
                                + std::to_string(t[static_cast<std::size_t>(k)]) + " out of range");
            }
        }
        if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) {
            throw MeshError("face " + std::to_string(f) + " repeats a vertex");
        }
        for (int k = 0; k < 3; ++k) {
            half.push_back({t[static_cast<std::size_t>((k + 1) % 3)], t[static_cast<std::size_t>((k + 2) % 3)],
                            static_cast<int>(f), k});
        }
    }
    std::stable_sort(half.begin(), half.end(),
                     [](const HalfEdge& x, const HalfEdge& y) { return x.key() < y.key(); });

    topo->face_edges.assign(faces.size(), {-1, -1, -1});
    topo->boundary.assign(vertex_count, 0);
    for (std::size_t i = 0; i < half.size();) {
        std::size_t j = i + 1;
        while (j < half.size() && half[j].key() == half[i].key()) {
            ++j;
        }
        const std::size_t count = j - i;
        if (count > 2) {
            throw MeshError("non-manifold edge (" + std::to_string(half[i].a) + ","
                            + std::to_string(half[i].b) + ") shared by "
                            + std::to_string(count) + " faces");
        }
        Edge e;
        e.v0 = std::min(half[i].a, half[i].b);
        e.v1 = std::max(half[i].a, half[i].b);
        e.f0 = half[i].face;
        if (count == 2) {
            if (half[i].a == half[i + 1].a) {
                throw MeshError("inconsistent orientation across edge (" + std::to_string(e.v0) + ","
                                + std::to_string(e.v1) + ")");
            }
            e.f1 = half[i + 1].face;
        } else {
            topo->boundary[static_cast<std::size_t>(e.v0)] = 1;
            topo->boundary[static_cast<std::size_t>(e.v1)] = 1;
            ++topo->boundary_edge_count;
        }
        const int edge_id = static_cast<int>(topo->edges.size());
        for (std::size_t k = i; k < j; ++k) {
            topo->face_edges[static_cast<std::size_t>(half[k].face)][static_cast<std::size_t>(half[k].corner)] = edge_id;
        }
        topo->edges.push_back(e);
        i = j;
    }

    topo->neighbors.assign(vertex_count, {});
    for (const Edge& e : topo->edges) {
        topo->neighbors[static_cast<std::size_t>(e.v0)].push_back(e.v1);
        topo->neighbors[static_cast<std::size_t>(e.v1)].push_back(e.v0);
    }
    for (auto& n : topo->neighbors) {
        std::sort(n.begin(), n.end());
    }
    topo->vertex_faces.assign(vertex_count, {});
    for (std::size_t f = 0; f < faces.size(); ++f) {
        for (int v : faces[f]) {
            topo->vertex_faces[static_cast<std::size_t>(v)].push_back(static_cast<int>(f));
        }
    }

    // Each vertex must be used, and its incident faces must form a single fan.
    for (std::size_t v = 0; v < vertex_count; ++v) {
        const auto& vf = topo->vertex_faces[v];
        if (vf.empty()) {
            throw MeshError("vertex " + std::to_string(v) + " is not referenced by any face");
        }
    }
    for (std::size_t v = 0; v < vertex_count; ++v) {
        const auto& vf = topo->vertex_faces[v];
        if (vf.size() == 1) {
            continue;
        }
        std::vector<int> parent(vf.size());
        std::iota(parent.begin(), parent.end(), 0);
        auto local = [&](int f) {
            return static_cast<int>(std::lower_bound(vf.begin(), vf.end(), f) - vf.begin());
        };
        for (int f : vf) {
            const auto& fe = topo->face_edges[static_cast<std::size_t>(f)];
            for (int eid : fe) {
                const Edge& e = topo->edges[static_cast<std::size_t>(eid)];
                if (e.f1 < 0 || (e.v0 != static_cast<int>(v) && e.v1 != static_cast<int>(v))) {
                    continue;
                }
                const int a = find_root(parent, local(e.f0));
                const int b = find_root(parent, local(e.f1));
                parent[static_cast<std::size_t>(a)] = b;
            }
        }
        int roots = 0;
        for (std::size_t i = 0; i < vf.size(); ++i) {
            roots += find_root(parent, static_cast<int>(i)) == static_cast<int>(i) ? 1 : 0;
        }
        if (roots > 1) {
            throw MeshError("non-manifold vertex " + std::to_string(v));
        }
    }

    topo->faces = std::move(faces);
    return topo;
}

}  // namespace

TriMesh::TriMesh() : topo_(std::make_shared<Topology>()) {}

TriMesh::TriMesh(std::vector<Vec3> vertices, std::vector<Face> faces)
    : vertices_(std::move(vertices))
{
    topo_ = build_topology(vertices_.size(), std::move(faces));
    check_degenerate();
}

TriMesh::TriMesh(std::vector<Vec3> vertices, std::shared_ptr<const Topology> topo)
    : vertices_(std::move(vertices)), topo_(std::move(topo))
{
    check_degenerate();
}

TriMesh TriMesh::with_positions(std::vector<Vec3> vertices) const
{
    if (vertices.size() != vertices_.size()) {
        throw MeshError("with_positions: vertex count mismatch");
    }
    return TriMesh(std::move(vertices), topo_);
}

void TriMesh::check_degenerate() const
{
    if (topo_->faces.empty()) {
        return;
    }
    std::vector<double> areas(topo_->faces.size());
    double sum = 0.0;
    for (std::size_t f = 0; f < areas.size(); ++f) {
        areas[f] = face_area(*this, f);
        if (!std::isfinite(areas[f])) {
            throw MeshError("face " + std::to_string(f) + " has non-finite coordinates");
        }
        sum += areas[f];
    }
    const double mean = sum / static_cast<double>(areas.size());
    for (std::size_t f = 0; f < areas.size(); ++f) {
        if (areas[f] <= 1e-12 * mean) {
            throw MeshError("degenerate face " + std::to_string(f));
        }
    }
}

long TriMesh::euler_characteristic() const
{
    return static_cast<long>(num_vertices()) - static_cast<long>(num_edges()) + static_cast<long>(num_faces());
}

std::uint64_t TriMesh::hash() const
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= p[i];
            h *= 0x100000001b3ULL;
        }
    };
    for (const Vec3& v : vertices_) {
        for (int k = 0; k < 3; ++k) {
            double c = v[k] == 0.0 ? 0.0 : v[k];  // fold -0.0
            mix(&c, sizeof c);
        }
    }
    for (const Face& f : topo_->faces) {
        for (int i : f) {
            auto u = static_cast<std::int32_t>(i);
            mix(&u, sizeof u);
        }
    }
    return h;
}

std::string TriMesh::hash_hex() const
{
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << hash();
    return os.str();
}

double TriMesh::mean_edge_length() const
{
    if (topo_->edges.empty()) {
        return 0.0;
    }
    double sum = 0.0;
    for (const Edge& e : topo_->edges) {
        sum += (vertices_[static_cast<std::size_t>(e.v0)] - vertices_[static_cast<std::size_t>(e.v1)]).norm();
    }
    return sum / static_cast<double>(topo_->edges.size());
}

Vec3 face_area_vector(const TriMesh& mesh, std::size_t f)
{
    const Face& t = mesh.faces()[f];
    const auto& x = mesh.vertices();
    const Vec3& a = x[static_cast<std::size_t>(t[0])];
    return (x[static_cast<std::size_t>(t[1])] - a).cross(x[static_cast<std::size_t>(t[2])] - a);
}

double face_area(const TriMesh& mesh, std::size_t f)
{
    return 0.5 * face_area_vector(mesh, f).norm();
}

double total_area(const TriMesh& mesh)
{
    double sum = 0.0;
    for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
        sum += face_area(mesh, f);
    }
    return sum;
}

TriMesh transformed(const TriMesh& mesh, const Vec3& shift, double scale)
{
    std::vector<Vec3> x = mesh.vertices();
    for (Vec3& p : x) {
        p = scale * (p - shift);
    }
    return mesh.with_positions(std::move(x));
}

TriMesh scaled_axes(const TriMesh& mesh, const Vec3& axes)
{
    std::vector<Vec3> x = mesh.vertices();
    for (Vec3& p : x) {
        p = p.cwiseProduct(axes);
    }
    return mesh.with_positions(std::move(x));
}

TriMesh translated(const TriMesh& mesh, const Vec3& offset)
{
    std::vector<Vec3> x = mesh.vertices();
    for (Vec3& p : x) {
        p += offset;
    }
    return mesh.with_positions(std::move(x));
}

}  // namespace lambdalab
