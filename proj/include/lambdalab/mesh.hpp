#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace lambdalab {

using Vec3 = Eigen::Vector3d;
using Face = std::array<int, 3>;
using Field = Eigen::VectorXd;

/// Raised for malformed meshes: bad indices, inconsistent orientation,
/// non-manifold edges or vertices, degenerate faces.
class MeshError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Undirected edge with its one or two incident faces. `f1 == -1` on the boundary.
struct Edge {
    int v0 = -1;
    int v1 = -1;
    int f0 = -1;
    int f1 = -1;
    bool is_boundary() const { return f1 < 0; }
};

/// Connectivity shared by every mesh with the same faces.
struct Topology {
    std::size_t vertex_count = 0;
    std::vector<Face> faces;
    std::vector<Edge> edges;
    std::vector<std::uint8_t> boundary;           // per vertex
    std::vector<std::vector<int>> neighbors;      // sorted 1-ring
    std::vector<std::vector<int>> vertex_faces;   // incident faces, ascending
    std::vector<std::array<int, 3>> face_edges;   // edge opposite corner k
    int boundary_edge_count = 0;
};

/// Indexed, consistently oriented, manifold triangle mesh. Immutable after
/// construction; all derived quantities are pure functions of it.
class TriMesh {
public:
    TriMesh();
    TriMesh(std::vector<Vec3> vertices, std::vector<Face> faces);

    /// Same connectivity, new vertex positions. Only the degeneracy check is rerun.
    TriMesh with_positions(std::vector<Vec3> vertices) const;

    const std::vector<Vec3>& vertices() const { return vertices_; }
    const std::vector<Face>& faces() const { return topo_->faces; }
    const std::vector<Edge>& edges() const { return topo_->edges; }
    const std::vector<std::uint8_t>& boundary() const { return topo_->boundary; }
    const std::vector<std::vector<int>>& neighbors() const { return topo_->neighbors; }
    const std::vector<std::vector<int>>& vertex_faces() const { return topo_->vertex_faces; }
    const std::vector<std::array<int, 3>>& face_edges() const { return topo_->face_edges; }
    const Topology& topology() const { return *topo_; }

    std::size_t num_vertices() const { return vertices_.size(); }
    std::size_t num_faces() const { return topo_->faces.size(); }
    std::size_t num_edges() const { return topo_->edges.size(); }
    bool empty() const { return topo_->faces.empty(); }
    bool is_closed() const { return topo_->boundary_edge_count == 0; }
    bool is_boundary(int v) const { return topo_->boundary[static_cast<std::size_t>(v)] != 0; }

    /// V - E + F.
    long euler_characteristic() const;

    /// FNV-1a over positions and faces; stable across runs and platforms with
    /// IEEE doubles.
    std::uint64_t hash() const;
    std::string hash_hex() const;

    double mean_edge_length() const;

private:
    TriMesh(std::vector<Vec3> vertices, std::shared_ptr<const Topology> topo);
    void check_degenerate() const;

    std::vector<Vec3> vertices_;
    std::shared_ptr<const Topology> topo_;
};

/// Unnormalized face normal (twice the area vector).
Vec3 face_area_vector(const TriMesh& mesh, std::size_t f);
double face_area(const TriMesh& mesh, std::size_t f);
double total_area(const TriMesh& mesh);

/// Rigid/similarity transform x -> scale * (x - shift).
TriMesh transformed(const TriMesh& mesh, const Vec3& shift, double scale);
/// Componentwise axis scaling, used to build ellipsoids from spheres.
TriMesh scaled_axes(const TriMesh& mesh, const Vec3& axes);
TriMesh translated(const TriMesh& mesh, const Vec3& offset);

}  // namespace lambdalab
