#pragma once

#include <string>

#include "lambdalab/mesh.hpp"

namespace lambdalab {

enum class ShapeKind {
    icosphere,
    cylinder_band,
    torus,
    disk,
    ellipsoid,
    catenoid_band,
    double_torus,
    file,
};

/// Description of a generated (or loaded) surface. Which radii are used
/// depends on the kind:
///   icosphere      radius
///   cylinder_band  radius, height
///   torus          radius (major), minor_radius
///   disk           radius
///   ellipsoid      axes
///   catenoid_band  radius (waist), height
///   double_torus   radius (major), minor_radius
struct ShapeSpec {
    ShapeKind kind = ShapeKind::icosphere;
    double radius = 1.0;
    double minor_radius = 0.5;
    double height = 1.0;
    Vec3 axes = Vec3(1.0, 1.0, 1.0);
    int level = 0;
    Vec3 center = Vec3::Zero();
    std::string path;
};

ShapeKind parse_shape_kind(const std::string& name);
std::string to_string(ShapeKind kind);

TriMesh build_primitive(const ShapeSpec& spec);

TriMesh make_icosphere(double radius, int level, const Vec3& center = Vec3::Zero());
TriMesh make_torus(double major, double minor, int level);
TriMesh make_cylinder_band(double radius, double height, int level);
TriMesh make_disk(double radius, int level);
TriMesh make_catenoid_band(double waist, double height, int level);
/// Connected sum of two tori joined by a short square tube; genus 2.
TriMesh make_double_torus(double major, double minor, int level);

}  // namespace lambdalab
