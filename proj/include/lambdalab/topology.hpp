#pragma once

#include <vector>

#include "lambdalab/mesh.hpp"

namespace lambdalab {

/// Submesh restricted to an ambient ball. Keeps the faces whose three
/// vertices satisfy |x - center| <= radius (no clipping).
struct Patch {
    TriMesh mesh;
    /// parent_vertex[i] is the index in the source mesh of patch vertex i.
    std::vector<int> parent_vertex;
    std::vector<int> parent_face;
};

Patch ball_patch(const TriMesh& mesh, const Vec3& center, double radius);

/// Connected component id per vertex, numbered in order of first appearance.
std::vector<int> vertex_components(const TriMesh& mesh);
int component_count(const TriMesh& mesh);

/// Number of closed boundary loops.
int boundary_loop_count(const TriMesh& mesh);

/// Genus of a closed, connected, oriented mesh: (2 - chi) / 2.
int genus(const TriMesh& mesh);

/// Total genus of a (possibly bordered, possibly disconnected) mesh after
/// capping every boundary loop with a disk. Zero for an empty mesh.
int capped_genus(const TriMesh& mesh);

/// True when every interior edge is convex: the far vertex of each adjacent
/// face lies on the inner side of the other face's plane, up to
/// `relative_tolerance` times the local edge length.
bool is_convex(const TriMesh& mesh, double relative_tolerance = 1e-9);

}  // namespace lambdalab
