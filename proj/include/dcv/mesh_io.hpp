#pragma once

#include "dcv/mesh.hpp"

#include <filesystem>
#include <iosfwd>

namespace dcv {

// ASCII OBJ and PLY with vertex positions and triangle faces only. Polygons
// with more than three corners are fan-triangulated on read. Writers print
// coordinates with 9 significant digits. Read failures throw IoError.

TriangleMesh read_obj(std::istream& in);
TriangleMesh read_obj(const std::filesystem::path& path);
void write_obj(std::ostream& out, const TriangleMesh& mesh);
void write_obj(const std::filesystem::path& path, const TriangleMesh& mesh);

TriangleMesh read_ply(std::istream& in);
TriangleMesh read_ply(const std::filesystem::path& path);
void write_ply(std::ostream& out, const TriangleMesh& mesh);
void write_ply(const std::filesystem::path& path, const TriangleMesh& mesh);

/// Dispatches on the file extension (.obj or .ply).
TriangleMesh read_mesh(const std::filesystem::path& path);
void write_mesh(const std::filesystem::path& path, const TriangleMesh& mesh);

} // namespace dcv
