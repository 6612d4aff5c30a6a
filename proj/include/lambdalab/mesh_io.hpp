#pragma once

#include <iosfwd>
#include <string>

#include "lambdalab/mesh.hpp"

namespace lambdalab {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CurvatureData;

/// Reads OBJ or OFF based on the file extension. Polygons are fan-triangulated.
TriMesh read_mesh(const std::string& path);
TriMesh read_obj(std::istream& in);
TriMesh read_off(std::istream& in);

void write_obj(std::ostream& out, const TriMesh& mesh);
void write_off(std::ostream& out, const TriMesh& mesh);
void write_mesh(const std::string& path, const TriMesh& mesh);

/// vertex_id,H,A_norm2,A3
void write_curvature_csv(std::ostream& out, const CurvatureData& curvature);

}  // namespace lambdalab
