#include "lambdalab/topology.hpp"

#include <algorithm>
#include <numeric>

namespace lambdalab {

namespace {

int root_of(std::vector<int>& parent, int i)
{
    while (parent[static_cast<std::size_t>(i)] != i) {
        parent[static_cast<std::size_t>(i)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(i)])];
        i = parent[static_cast<std::size_t>(i)];
    }
    return i;
}

}  // namespace

Patch ball_patch(const TriMesh& mesh, const Vec3& center, double radius)
{
    if (!(radius > 0.0)) {
        throw std::invalid_argument("ball_patch: radius must be positive");
    }
    const auto& x = mesh.vertices();
    std::vector<std::uint8_t> inside(mesh.num_vertices(), 0);
    const double r2 = radius * radius;
    for (std::size_t i = 0; i < x.size(); ++i) {
        inside[i] = (x[i] - center).squaredNorm() <= r2 ? 1 : 0;
    }
    Patch patch;
    std::vector<int> remap(mesh.num_vertices(), -1);
    std::vector<Face> faces;
    std::vector<Vec3> verts;
    for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
        const Face& t = mesh.faces()[f];
        if (!inside[static_cast<std::size_t>(t[0])] || !inside[static_cast<std::size_t>(t[1])]
            || !inside[static_cast<std::size_t>(t[2])]) {
            continue;
        }
        Face local{};
        for (std::size_t k = 0; k < 3; ++k) {
            int& slot = remap[static_cast<std::size_t>(t[k])];
            if (slot < 0) {
                slot = static_cast<int>(verts.size());
                verts.push_back(x[static_cast<std::size_t>(t[k])]);
                patch.parent_vertex.push_back(t[k]);
            }
            local[k] = slot;
        }
        faces.push_back(local);
        patch.parent_face.push_back(static_cast<int>(f));
    }
    // A ball can cut a manifold into pieces that meet at a single vertex;
    // split such vertices so the patch stays a manifold mesh.
    try {
        patch.mesh = TriMesh(verts, faces);
    } catch (const MeshError&) {
        std::vector<std::vector<int>> vf(verts.size());
        for (std::size_t f = 0; f < faces.size(); ++f) {
            for (int v : faces[f]) {
                vf[static_cast<std::size_t>(v)].push_back(static_cast<int>(f));
            }
        }
        const std::size_t original = verts.size();
        for (std::size_t v = 0; v < original; ++v) {
            // Group incident faces into fans joined through edges at v.
            const auto& inc = vf[v];
            std::vector<int> parent(inc.size());
            std::iota(parent.begin(), parent.end(), 0);
            for (std::size_t a = 0; a < inc.size(); ++a) {
                for (std::size_t b = a + 1; b < inc.size(); ++b) {
                    const Face& fa = faces[static_cast<std::size_t>(inc[a])];
                    const Face& fb = faces[static_cast<std::size_t>(inc[b])];
                    int shared = 0;
                    for (int p : fa) {
                        shared += (p != static_cast<int>(v) && std::find(fb.begin(), fb.end(), p) != fb.end()) ? 1 : 0;
                    }
                    if (shared > 0) {
                        parent[static_cast<std::size_t>(root_of(parent, static_cast<int>(a)))] = root_of(parent, static_cast<int>(b));
                    }
                }
            }
            std::vector<int> fan_vertex(inc.size(), -1);
            int first_root = root_of(parent, 0);
            for (std::size_t a = 0; a < inc.size(); ++a) {
                const int r = root_of(parent, static_cast<int>(a));
                if (r == first_root) {
                    continue;
                }
                if (fan_vertex[static_cast<std::size_t>(r)] < 0) {
                    fan_vertex[static_cast<std::size_t>(r)] = static_cast<int>(verts.size());
                    verts.push_back(verts[v]);
                    patch.parent_vertex.push_back(patch.parent_vertex[v]);
                }
                for (int& p : faces[static_cast<std::size_t>(inc[a])]) {
                    if (p == static_cast<int>(v)) {
                        p = fan_vertex[static_cast<std::size_t>(r)];
                    }
                }
            }
        }
        patch.mesh = TriMesh(std::move(verts), std::move(faces));
    }
    return patch;
}

std::vector<int> vertex_components(const TriMesh& mesh)
{
    std::vector<int> parent(mesh.num_vertices());
    std::iota(parent.begin(), parent.end(), 0);
    for (const Edge& e : mesh.edges()) {
        const int a = root_of(parent, e.v0);
        const int b = root_of(parent, e.v1);
        if (a != b) {
            parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
        }
    }
    std::vector<int> label(mesh.num_vertices(), -1);
    std::vector<int> root_label(mesh.num_vertices(), -1);
    int next = 0;
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
        const int r = root_of(parent, static_cast<int>(v));
        if (root_label[static_cast<std::size_t>(r)] < 0) {
            root_label[static_cast<std::size_t>(r)] = next++;
        }
        label[v] = root_label[static_cast<std::size_t>(r)];
    }
    return label;
}

int component_count(const TriMesh& mesh)
{
    const auto label = vertex_components(mesh);
    return label.empty() ? 0 : *std::max_element(label.begin(), label.end()) + 1;
}

int boundary_loop_count(const TriMesh& mesh)
{
    // On a manifold mesh every boundary vertex has exactly two boundary edges,
    // so boundary loops are the components of the boundary-edge graph.
    std::vector<int> parent(mesh.num_vertices());
    std::iota(parent.begin(), parent.end(), 0);
    std::vector<std::uint8_t> on_loop(mesh.num_vertices(), 0);
    for (const Edge& e : mesh.edges()) {
        if (!e.is_boundary()) {
            continue;
        }
        on_loop[static_cast<std::size_t>(e.v0)] = 1;
        on_loop[static_cast<std::size_t>(e.v1)] = 1;
        const int a = root_of(parent, e.v0);
        const int b = root_of(parent, e.v1);
        if (a != b) {
            parent[static_cast<std::size_t>(a)] = b;
        }
    }
    int loops = 0;
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
        loops += (on_loop[v] && root_of(parent, static_cast<int>(v)) == static_cast<int>(v)) ? 1 : 0;
    }
    return loops;
}

int genus(const TriMesh& mesh)
{
    if (mesh.empty()) {
        throw MeshError("genus: empty mesh");
    }
    if (!mesh.is_closed()) {
        throw MeshError("genus: mesh has boundary");
    }
    if (component_count(mesh) != 1) {
        throw MeshError("genus: mesh is disconnected");
    }
    const long chi = mesh.euler_characteristic();
    if (chi % 2 != 0) {
        throw MeshError("genus: odd Euler characteristic");
    }
    return static_cast<int>((2 - chi) / 2);
}

int capped_genus(const TriMesh& mesh)
{
    if (mesh.empty()) {
        return 0;
    }
    const auto label = vertex_components(mesh);
    const int count = *std::max_element(label.begin(), label.end()) + 1;
    std::vector<long> chi(static_cast<std::size_t>(count), 0);
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
        ++chi[static_cast<std::size_t>(label[v])];
    }
    for (const Edge& e : mesh.edges()) {
        --chi[static_cast<std::size_t>(label[static_cast<std::size_t>(e.v0)])];
    }
    for (const Face& f : mesh.faces()) {
        ++chi[static_cast<std::size_t>(label[static_cast<std::size_t>(f[0])])];
    }
    // Each boundary loop gets capped by a disk: chi increases by one.
    std::vector<int> parent(mesh.num_vertices());
    std::iota(parent.begin(), parent.end(), 0);
    std::vector<std::uint8_t> on_loop(mesh.num_vertices(), 0);
    for (const Edge& e : mesh.edges()) {
        if (e.is_boundary()) {
            on_loop[static_cast<std::size_t>(e.v0)] = 1;
            on_loop[static_cast<std::size_t>(e.v1)] = 1;
            parent[static_cast<std::size_t>(root_of(parent, e.v0))] = root_of(parent, e.v1);
        }
    }
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
        if (on_loop[v] && root_of(parent, static_cast<int>(v)) == static_cast<int>(v)) {
            ++chi[static_cast<std::size_t>(label[v])];
        }
    }
    int total = 0;
    for (long c : chi) {
        total += static_cast<int>((2 - c) / 2);
    }
    return total;
}

bool is_convex(const TriMesh& mesh, double relative_tolerance)
{
    const auto& x = mesh.vertices();
    for (const Edge& e : mesh.edges()) {
        if (e.is_boundary()) {
            continue;
        }
        const double len = (x[static_cast<std::size_t>(e.v0)] - x[static_cast<std::size_t>(e.v1)]).norm();
        const Vec3 n0 = face_area_vector(mesh, static_cast<std::size_t>(e.f0)).normalized();
        const Face& other = mesh.faces()[static_cast<std::size_t>(e.f1)];
        for (int v : other) {
            if (v == e.v0 || v == e.v1) {
                continue;
            }
            const double side = n0.dot(x[static_cast<std::size_t>(v)] - x[static_cast<std::size_t>(e.v0)]);
            if (side > relative_tolerance * len) {
                return false;
            }
        }
    }
    return true;
}

}  // namespace lambdalab
