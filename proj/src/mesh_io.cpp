#include "lambdalab/mesh_io.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "lambdalab/curvature.hpp"

namespace lambdalab {

namespace {

std::string extension_of(const std::string& path)
{
    const auto dot = path.find_last_of('.');
    if (dot == std::string::npos) {
        return {};
    }
    std::string ext = path.substr(dot + 1);
    for (char& c : ext) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return ext;
}

void append_polygon(std::vector<Face>& faces, const std::vector<int>& poly, std::size_t line)
{
    if (poly.size() < 3) {
        throw IoError("polygon with fewer than 3 vertices at line " + std::to_string(line));
    }
    for (std::size_t k = 1; k + 1 < poly.size(); ++k) {
        faces.push_back({poly[0], poly[k], poly[k + 1]});
    }
}

void write_double(std::ostream& out, double v)
{
    out << std::setprecision(17) << v;
}

}  // namespace

TriMesh read_mesh(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open mesh file '" + path + "'");
    }
    const std::string ext = extension_of(path);
    if (ext == "obj") {
        return read_obj(in);
    }
    if (ext == "off") {
        return read_off(in);
    }
    throw IoError("unsupported mesh format '" + ext + "' (expected .obj or .off)");
}

TriMesh read_obj(std::istream& in)
{
    std::vector<Vec3> x;
    std::vector<Face> faces;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag) || tag[0] == '#') {
            continue;
        }
        if (tag == "v") {
            Vec3 p;
            if (!(ls >> p.x() >> p.y() >> p.z())) {
                throw IoError("malformed vertex at line " + std::to_string(lineno));
            }
            x.push_back(p);
        } else if (tag == "f") {
            std::vector<int> poly;
            std::string token;
            while (ls >> token) {
                // v, v/vt, v//vn, v/vt/vn
                const std::string head = token.substr(0, token.find('/'));
                int idx = 0;
                const auto [ptr, ec] = std::from_chars(head.data(), head.data() + head.size(), idx);
                if (ec != std::errc() || ptr != head.data() + head.size() || idx == 0) {
                    throw IoError("malformed face index '" + token + "' at line " + std::to_string(lineno));
                }
                poly.push_back(idx > 0 ? idx - 1 : static_cast<int>(x.size()) + idx);
            }
            append_polygon(faces, poly, lineno);
        }
    }
    try {
        return TriMesh(std::move(x), std::move(faces));
    } catch (const MeshError& e) {
        throw IoError(std::string("invalid OBJ mesh: ") + e.what());
    }
}

TriMesh read_off(std::istream& in)
{
    // Comments may appear anywhere; strip them and read a token stream.
    std::stringstream tokens;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        tokens << (hash == std::string::npos ? line : line.substr(0, hash)) << '\n';
    }
    std::string magic;
    if (!(tokens >> magic) || magic != "OFF") {
        throw IoError("missing OFF header");
    }
    long nv = 0;
    long nf = 0;
    long ne = 0;
    if (!(tokens >> nv >> nf >> ne) || nv < 0 || nf < 0) {
        throw IoError("malformed OFF counts");
    }
    std::vector<Vec3> x(static_cast<std::size_t>(nv));
    for (auto& p : x) {
        if (!(tokens >> p.x() >> p.y() >> p.z())) {
            throw IoError("truncated OFF vertex list");
        }
    }
    std::vector<Face> faces;
    for (long f = 0; f < nf; ++f) {
        int n = 0;
        if (!(tokens >> n) || n < 3) {
            throw IoError("malformed OFF face " + std::to_string(f));
        }
        std::vector<int> poly(static_cast<std::size_t>(n));
        for (int& i : poly) {
            if (!(tokens >> i)) {
                throw IoError("truncated OFF face " + std::to_string(f));
            }
        }
        append_polygon(faces, poly, static_cast<std::size_t>(f));
    }
    try {
        return TriMesh(std::move(x), std::move(faces));
    } catch (const MeshError& e) {
        throw IoError(std::string("invalid OFF mesh: ") + e.what());
    }
}

void write_obj(std::ostream& out, const TriMesh& mesh)
{
    for (const Vec3& p : mesh.vertices()) {
        out << "v ";
        write_double(out, p.x());
        out << ' ';
        write_double(out, p.y());
        out << ' ';
        write_double(out, p.z());
        out << '\n';
    }
    for (const Face& f : mesh.faces()) {
        out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
    }
}

void write_off(std::ostream& out, const TriMesh& mesh)
{
    out << "OFF\n" << mesh.num_vertices() << ' ' << mesh.num_faces() << ' ' << mesh.num_edges() << '\n';
    for (const Vec3& p : mesh.vertices()) {
        write_double(out, p.x());
        out << ' ';
        write_double(out, p.y());
        out << ' ';
        write_double(out, p.z());
        out << '\n';
    }
    for (const Face& f : mesh.faces()) {
        out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
    }
}

void write_mesh(const std::string& path, const TriMesh& mesh)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write '" + path + "'");
    }
    const std::string ext = extension_of(path);
    if (ext == "obj") {
        write_obj(out, mesh);
    } else if (ext == "off") {
        write_off(out, mesh);
    } else {
        throw IoError("unsupported mesh format '" + ext + "'");
    }
}

void write_curvature_csv(std::ostream& out, const CurvatureData& curvature)
{
    out << "vertex_id,H,A_norm2,A3\n";
    for (Eigen::Index i = 0; i < curvature.H.size(); ++i) {
        out << i << ',';
        write_double(out, curvature.H[i]);
        out << ',';
        write_double(out, curvature.A_norm2[i]);
        out << ',';
        write_double(out, curvature.A3[i]);
        out << '\n';
    }
}

}  // namespace lambdalab
