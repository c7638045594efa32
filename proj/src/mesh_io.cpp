#include "dcv/mesh_io.hpp"

#include "dcv/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace dcv {

namespace {

std::string format_coord(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

std::string lower_extension(const std::filesystem::path& path)
{
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext;
}

TriangleMesh assemble(const std::vector<double>& coords, std::vector<Face> faces, const char* fmt)
{
    Field v(static_cast<Eigen::Index>(coords.size() / 3), 3);
    for (Eigen::Index i = 0; i < v.rows(); ++i)
        for (Eigen::Index c = 0; c < 3; ++c)
            v(i, c) = coords[static_cast<std::size_t>(3 * i + c)];
    try {
        return TriangleMesh(std::move(v), std::move(faces));
    } catch (const std::invalid_argument& e) {
        throw IoError(std::string(fmt) + ": " + e.what());
    }
}

void push_polygon(std::vector<Face>& faces, const std::vector<int>& poly, int line_no)
{
    if (poly.size() < 3)
        throw IoError("obj line " + std::to_string(line_no) + ": face with fewer than 3 vertices");
    for (std::size_t k = 1; k + 1 < poly.size(); ++k)
        faces.push_back({poly[0], poly[k], poly[k + 1]});
}

std::ifstream open_in(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open '" + path.string() + "' for reading");
    return in;
}

std::ofstream open_out(const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot open '" + path.string() + "' for writing");
    return out;
}

} // namespace

TriangleMesh read_obj(std::istream& in)
{
    std::vector<double> coords;
    std::vector<Face> faces;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag) || tag[0] == '#')
            continue;
        if (tag == "v") {
            double x, y, z;
            if (!(ls >> x >> y >> z))
                throw IoError("obj line " + std::to_string(line_no) + ": malformed vertex");
            coords.insert(coords.end(), {x, y, z});
        } else if (tag == "f") {
            std::vector<int> poly;
            std::string tok;
            const int nv = static_cast<int>(coords.size() / 3);
            while (ls >> tok) {
                // "i", "i/t", "i//n", "i/t/n"
                const std::string head = tok.substr(0, tok.find('/'));
                int idx = 0;
                try {
                    std::size_t used = 0;
                    idx = std::stoi(head, &used);
                    if (used != head.size())
                        throw std::invalid_argument(head);
                } catch (const std::exception&) {
                    throw IoError("obj line " + std::to_string(line_no) + ": bad face index '" +
                                  tok + "'");
                }
                idx = idx < 0 ? nv + idx : idx - 1;
                poly.push_back(idx);
            }
            push_polygon(faces, poly, line_no);
        }
    }
    if (in.bad())
        throw IoError("obj: read error");
    return assemble(coords, std::move(faces), "obj");
}

TriangleMesh read_obj(const std::filesystem::path& path)
{
    auto in = open_in(path);
    return read_obj(in);
}

void write_obj(std::ostream& out, const TriangleMesh& mesh)
{
    const Field& v = mesh.vertices();
    for (Eigen::Index i = 0; i < v.rows(); ++i)
        out << "v " << format_coord(v(i, 0)) << ' ' << format_coord(v(i, 1)) << ' '
            << format_coord(v(i, 2)) << '\n';
    for (const Face& f : mesh.faces())
        out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
    if (!out)
        throw IoError("obj: write error");
}

void write_obj(const std::filesystem::path& path, const TriangleMesh& mesh)
{
    auto out = open_out(path);
    write_obj(out, mesh);
}

TriangleMesh read_ply(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line) || line.rfind("ply", 0) != 0)
        throw IoError("ply: missing magic");
    long n_vertices = -1;
    long n_faces = 0;
    std::vector<std::string> vertex_props;
    std::string current;
    bool ascii = false;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "format") {
            std::string kind;
            ls >> kind;
            ascii = kind == "ascii";
        } else if (tag == "element") {
            long count = 0;
            ls >> current >> count;
            if (current == "vertex")
                n_vertices = count;
            else if (current == "face")
                n_faces = count;
        } else if (tag == "property" && current == "vertex") {
            std::string type, name;
            ls >> type >> name;
            vertex_props.push_back(name);
        } else if (tag == "end_header") {
            break;
        }
    }
    if (!ascii)
        throw IoError("ply: only ascii format is supported");
    if (n_vertices < 0)
        throw IoError("ply: no vertex element");
    const auto find_prop = [&](const char* name) {
        const auto it = std::find(vertex_props.begin(), vertex_props.end(), name);
        if (it == vertex_props.end())
            throw IoError(std::string("ply: vertex property '") + name + "' missing");
        return static_cast<std::size_t>(it - vertex_props.begin());
    };
    const std::size_t ix = find_prop("x"), iy = find_prop("y"), iz = find_prop("z");

    std::vector<double> coords;
    coords.reserve(static_cast<std::size_t>(n_vertices) * 3);
    std::vector<double> row(vertex_props.size());
    for (long i = 0; i < n_vertices; ++i) {
        for (double& r : row)
            if (!(in >> r))
                throw IoError("ply: truncated vertex list");
        coords.insert(coords.end(), {row[ix], row[iy], row[iz]});
    }
    std::vector<Face> faces;
    for (long i = 0; i < n_faces; ++i) {
        int count = 0;
        if (!(in >> count) || count < 3)
            throw IoError("ply: malformed face " + std::to_string(i));
        std::vector<int> poly(static_cast<std::size_t>(count));
        for (int& p : poly)
            if (!(in >> p))
                throw IoError("ply: truncated face list");
        for (std::size_t k = 1; k + 1 < poly.size(); ++k)
            faces.push_back({poly[0], poly[k], poly[k + 1]});
    }
    return assemble(coords, std::move(faces), "ply");
}

TriangleMesh read_ply(const std::filesystem::path& path)
{
    auto in = open_in(path);
    return read_ply(in);
}

void write_ply(std::ostream& out, const TriangleMesh& mesh)
{
    const Field& v = mesh.vertices();
    out << "ply\nformat ascii 1.0\n"
        << "element vertex " << v.rows() << "\n"
        << "property double x\nproperty double y\nproperty double z\n"
        << "element face " << mesh.num_faces() << "\n"
        << "property list uchar int vertex_indices\nend_header\n";
    for (Eigen::Index i = 0; i < v.rows(); ++i)
        out << format_coord(v(i, 0)) << ' ' << format_coord(v(i, 1)) << ' '
            << format_coord(v(i, 2)) << '\n';
    for (const Face& f : mesh.faces())
        out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
    if (!out)
        throw IoError("ply: write error");
}

void write_ply(const std::filesystem::path& path, const TriangleMesh& mesh)
{
    auto out = open_out(path);
    write_ply(out, mesh);
}

TriangleMesh read_mesh(const std::filesystem::path& path)
{
    const std::string ext = lower_extension(path);
    if (ext == ".obj")
        return read_obj(path);
    if (ext == ".ply")
        return read_ply(path);
    throw IoError("unsupported mesh extension '" + ext + "'");
}

void write_mesh(const std::filesystem::path& path, const TriangleMesh& mesh)
{
    const std::string ext = lower_extension(path);
    if (ext == ".obj")
        return write_obj(path, mesh);
    if (ext == ".ply")
        return write_ply(path, mesh);
    throw IoError("unsupported mesh extension '" + ext + "'");
}

} // namespace dcv
