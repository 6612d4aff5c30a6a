#include "lambdalab/primitives.hpp"

#include <cmath>
#include <map>
#include <numbers>

#include "lambdalab/mesh_io.hpp"

namespace lambdalab {

namespace {

constexpr double kPi = std::numbers::pi;

void require_positive(double value, const char* what)
{
    if (!(value > 0.0) || !std::isfinite(value)) {
        throw std::invalid_argument(std::string(what) + " must be positive");
    }
}

void require_level(int level)
{
    if (level < 0) {
        throw std::invalid_argument("refinement level must be >= 0");
    }
}

// Periodic-in-u grid (nu columns), rows j = 0..rows-1, optionally periodic in v.
// Quads (i,j)-(i+1,j)-(i+1,j+1)-(i,j+1) are split along the (i,j)-(i+1,j+1) diagonal.
std::vector<Face> grid_faces(int nu, int rows, bool periodic_v, const std::vector<std::pair<int, int>>& skip = {})
{
    auto id = [nu, rows](int i, int j) { return ((j % rows + rows) % rows) * nu + ((i % nu + nu) % nu); };
    std::vector<Face> faces;
    const int jmax = periodic_v ? rows : rows - 1;
    for (int j = 0; j < jmax; ++j) {
        for (int i = 0; i < nu; ++i) {
            bool skipped = false;
            for (const auto& s : skip) {
                skipped = skipped || (s.first == i && s.second == j);
            }
            if (skipped) {
                continue;
            }
            const int p00 = id(i, j);
            const int p10 = id(i + 1, j);
            const int p11 = id(i + 1, j + 1);
            const int p01 = id(i, j + 1);
            faces.push_back({p00, p10, p11});
            faces.push_back({p00, p11, p01});
        }
    }
    return faces;
}

int torus_minor_segments(int level)
{
    return 6 << level;
}

int torus_major_segments(double major, double minor, int level)
{
    return std::max(3, static_cast<int>(std::lround(torus_minor_segments(level) * major / minor)));
}

std::vector<Vec3> torus_points(double major, double minor, int nu, int nv)
{
    std::vector<Vec3> x;
    x.reserve(static_cast<std::size_t>(nu * nv));
    for (int j = 0; j < nv; ++j) {
        const double v = 2.0 * kPi * j / nv;
        for (int i = 0; i < nu; ++i) {
            const double u = 2.0 * kPi * i / nu;
            const double w = major + minor * std::cos(v);
            x.emplace_back(w * std::cos(u), w * std::sin(u), minor * std::sin(v));
        }
    }
    return x;
}

}  // namespace

ShapeKind parse_shape_kind(const std::string& name)
{
    static const std::map<std::string, ShapeKind> names = {
        {"icosphere", ShapeKind::icosphere},       {"sphere", ShapeKind::icosphere},
        {"cylinder-band", ShapeKind::cylinder_band}, {"cylinder", ShapeKind::cylinder_band},
        {"torus", ShapeKind::torus},               {"disk", ShapeKind::disk},
        {"ellipsoid", ShapeKind::ellipsoid},       {"catenoid", ShapeKind::catenoid_band},
        {"catenoid-band", ShapeKind::catenoid_band}, {"double-torus", ShapeKind::double_torus},
        {"file", ShapeKind::file},
    };
    auto it = names.find(name);
    if (it == names.end()) {
        throw std::invalid_argument("unknown shape kind '" + name + "'");
    }
    return it->second;
}

std::string to_string(ShapeKind kind)
{
    switch (kind) {
    case ShapeKind::icosphere: return "icosphere";
    case ShapeKind::cylinder_band: return "cylinder-band";
    case ShapeKind::torus: return "torus";
    case ShapeKind::disk: return "disk";
    case ShapeKind::ellipsoid: return "ellipsoid";
    case ShapeKind::catenoid_band: return "catenoid-band";
    case ShapeKind::double_torus: return "double-torus";
    case ShapeKind::file: return "file";
    }
    return "unknown";
}

TriMesh build_primitive(const ShapeSpec& spec)
{
    require_level(spec.level);
    TriMesh mesh;
    switch (spec.kind) {
    case ShapeKind::icosphere:
        return make_icosphere(spec.radius, spec.level, spec.center);
    case ShapeKind::cylinder_band:
        mesh = make_cylinder_band(spec.radius, spec.height, spec.level);
        break;
    case ShapeKind::torus:
        mesh = make_torus(spec.radius, spec.minor_radius, spec.level);
        break;
    case ShapeKind::disk:
        mesh = make_disk(spec.radius, spec.level);
        break;
    case ShapeKind::ellipsoid:
        require_positive(spec.axes.minCoeff(), "ellipsoid axes");
        mesh = scaled_axes(make_icosphere(1.0, spec.level), spec.axes);
        break;
    case ShapeKind::catenoid_band:
        mesh = make_catenoid_band(spec.radius, spec.height, spec.level);
        break;
    case ShapeKind::double_torus:
        mesh = make_double_torus(spec.radius, spec.minor_radius, spec.level);
        break;
    case ShapeKind::file:
        return read_mesh(spec.path);
    }
    return spec.center.isZero() ? mesh : translated(mesh, spec.center);
}

TriMesh make_icosphere(double radius, int level, const Vec3& center)
{
    require_positive(radius, "icosphere radius");
    require_level(level);
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> x = {
        {-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
        {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1},
    };
    for (Vec3& p : x) {
        p.normalize();
    }
    std::vector<Face> faces = {
        {0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
        {11, 10, 2}, {10, 7, 6}, {7, 1, 8}, {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8},
        {3, 8, 9}, {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1},
    };
    for (int l = 0; l < level; ++l) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            const auto key = std::minmax(a, b);
            auto it = midpoint.find(key);
            if (it != midpoint.end()) {
                return it->second;
            }
            x.push_back((x[static_cast<std::size_t>(a)] + x[static_cast<std::size_t>(b)]).normalized());
            const int id = static_cast<int>(x.size()) - 1;
            midpoint.emplace(key, id);
            return id;
        };
        std::vector<Face> next;
        next.reserve(faces.size() * 4);
        for (const Face& f : faces) {
            const int ab = mid(f[0], f[1]);
            const int bc = mid(f[1], f[2]);
            const int ca = mid(f[2], f[0]);
            next.push_back({f[0], ab, ca});
            next.push_back({f[1], bc, ab});
            next.push_back({f[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        faces = std::move(next);
    }
    for (Vec3& p : x) {
        p = center + radius * p;
    }
    return TriMesh(std::move(x), std::move(faces));
}

TriMesh make_torus(double major, double minor, int level)
{
    require_positive(major, "torus major radius");
    require_positive(minor, "torus minor radius");
    require_level(level);
    if (minor >= major) {
        throw std::invalid_argument("torus minor radius must be below the major radius");
    }
    const int nv = torus_minor_segments(level);
    const int nu = torus_major_segments(major, minor, level);
    return TriMesh(torus_points(major, minor, nu, nv), grid_faces(nu, nv, true));
}

TriMesh make_cylinder_band(double radius, double height, int level)
{
    require_positive(radius, "cylinder radius");
    require_positive(height, "cylinder height");
    require_level(level);
    const int nu = 16 << level;
    const double du = 2.0 * kPi * radius / nu;
    const int rows = std::max(2, static_cast<int>(std::lround(height / du)) + 1);
    std::vector<Vec3> x;
    for (int j = 0; j < rows; ++j) {
        const double z = -0.5 * height + height * j / (rows - 1);
        for (int i = 0; i < nu; ++i) {
            const double u = 2.0 * kPi * i / nu;
            x.emplace_back(radius * std::cos(u), radius * std::sin(u), z);
        }
    }
    return TriMesh(std::move(x), grid_faces(nu, rows, false));
}

TriMesh make_catenoid_band(double waist, double height, int level)
{
    require_positive(waist, "catenoid waist");
    require_positive(height, "catenoid height");
    require_level(level);
    const int nu = 16 << level;
    const double zmax = 0.5 * height;
    const double smax = waist * std::sinh(zmax / waist);
    const double ds = 2.0 * kPi * waist / nu;
    const int half_rows = std::max(1, static_cast<int>(std::lround(smax / ds)));
    const int rows = 2 * half_rows + 1;
    std::vector<Vec3> x;
    for (int j = 0; j < rows; ++j) {
        const double s = -smax + 2.0 * smax * j / (rows - 1);
        const double z = waist * std::asinh(s / waist);
        const double w = waist * std::cosh(z / waist);
        for (int i = 0; i < nu; ++i) {
            const double u = 2.0 * kPi * i / nu;
            x.emplace_back(w * std::cos(u), w * std::sin(u), z);
        }
    }
    return TriMesh(std::move(x), grid_faces(nu, rows, false));
}

TriMesh make_disk(double radius, int level)
{
    require_positive(radius, "disk radius");
    require_level(level);
    const int k = 2 << level;
    std::map<std::pair<int, int>, int> index;
    std::vector<Vec3> x;
    auto hexnorm = [](int i, int j) { return std::max({std::abs(i), std::abs(j), std::abs(i + j)}); };
    for (int j = -k; j <= k; ++j) {
        for (int i = -k; i <= k; ++i) {
            if (hexnorm(i, j) > k) {
                continue;
            }
            const double px = i + 0.5 * j;
            const double py = 0.5 * std::sqrt(3.0) * j;
            const double r = std::hypot(px, py);
            Vec3 q = Vec3::Zero();
            if (r > 0.0) {
                // Distance from the center to the lattice hexagon boundary along this ray.
                const double phi = std::atan2(py, px);
                const double sector = std::fmod(phi + 2.0 * kPi, kPi / 3.0) - kPi / 6.0;
                const double boundary = k * std::cos(kPi / 6.0) / std::cos(sector);
                q = Vec3(px, py, 0.0) * (radius / boundary);
            }
            index.emplace(std::make_pair(i, j), static_cast<int>(x.size()));
            x.push_back(q);
        }
    }
    std::vector<Face> faces;
    auto lookup = [&](int i, int j) {
        auto it = index.find({i, j});
        return it == index.end() ? -1 : it->second;
    };
    for (int j = -k; j <= k; ++j) {
        for (int i = -k; i <= k; ++i) {
            const int a = lookup(i, j);
            const int b = lookup(i + 1, j);
            const int c = lookup(i, j + 1);
            const int d = lookup(i + 1, j + 1);
            if (a >= 0 && b >= 0 && c >= 0) {
                faces.push_back({a, b, c});
            }
            if (b >= 0 && d >= 0 && c >= 0) {
                faces.push_back({b, d, c});
            }
        }
    }
    return TriMesh(std::move(x), std::move(faces));
}

TriMesh make_double_torus(double major, double minor, int level)
{
    require_positive(major, "torus major radius");
    require_positive(minor, "torus minor radius");
    require_level(level);
    const int nv = torus_minor_segments(level);
    const int nu = torus_major_segments(major, minor, level);
    const int per = nu * nv;
    const double gap = 2.0 * kPi * (major + minor) / nu;
    const double shift = 2.0 * (major + minor) + gap;

    std::vector<Vec3> x = torus_points(major, minor, nu, nv);
    std::vector<Face> faces = grid_faces(nu, nv, true, {{0, 0}});
    // Second torus: rotated by pi about z and shifted so its hole faces the first one.
    for (const Vec3& p : torus_points(major, minor, nu, nv)) {
        x.emplace_back(shift - p.x(), -p.y(), p.z());
    }
    for (const Face& f : grid_faces(nu, nv, true, {{nu - 1, 0}})) {
        faces.push_back({f[0] + per, f[1] + per, f[2] + per});
    }

    auto a = [nu](int i, int j) { return j * nu + i; };
    auto b = [nu, per](int i, int j) { return per + j * nu + i; };
    // Tube between the square holes, matched corner to corner.
    struct Corner {
        int first;
        int second;
    };
    const Corner c00{a(0, 0), b(0, 0)};
    const Corner c10{a(1, 0), b(nu - 1, 0)};
    const Corner c11{a(1, 1), b(nu - 1, 1)};
    const Corner c01{a(0, 1), b(0, 1)};
    // Boundary half-edges left on the first torus after removing quad (0,0).
    const std::array<std::pair<Corner, Corner>, 4> hole = {{{c10, c00}, {c11, c10}, {c01, c11}, {c00, c01}}};
    for (const auto& [from, to] : hole) {
        faces.push_back({to.first, from.first, from.second});
        faces.push_back({to.first, from.second, to.second});
    }
    return TriMesh(std::move(x), std::move(faces));
}

}  // namespace lambdalab
