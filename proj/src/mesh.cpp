#include "dcv/mesh.hpp"

#include "dcv/rng.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace dcv {

namespace {

void require_cols(const Field& f, Eigen::Index rows, const char* what)
{
    if (f.rows() != rows)
        throw std::invalid_argument(std::string(what) + ": expected " + std::to_string(rows) +
                                    " rows, got " + std::to_string(f.rows()));
}

double rad_to_deg(double r)
{
    return r * 180.0 / std::numbers::pi;
}

} // namespace

std::vector<Edge> edges_from_faces(std::span<const Face> faces)
{
    std::vector<Edge> edges;
    edges.reserve(faces.size() * 3);
    for (const Face& f : faces) {
        for (int k = 0; k < 3; ++k) {
            const int u = f[k];
            const int v = f[(k + 1) % 3];
            edges.push_back({std::min(u, v), std::max(u, v)});
        }
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return edges;
}

TriangleMesh::TriangleMesh(Field vertices, std::vector<Face> faces)
    : vertices_(std::move(vertices)), faces_(std::move(faces))
{
    if (vertices_.cols() != 3)
        throw std::invalid_argument("mesh vertices must have 3 columns");
    const int n = num_vertices();
    for (std::size_t i = 0; i < faces_.size(); ++i) {
        const Face& f = faces_[i];
        for (int idx : f) {
            if (idx < 0 || idx >= n)
                throw std::invalid_argument("face " + std::to_string(i) + " references vertex " +
                                            std::to_string(idx) + " outside [0, " +
                                            std::to_string(n) + ")");
        }
        if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2])
            throw std::invalid_argument("face " + std::to_string(i) + " is degenerate");
    }

    edges_ = edges_from_faces(faces_);

    std::vector<std::pair<int, int>> incidence; // (edge, face)
    incidence.reserve(faces_.size() * 3);
    for (std::size_t i = 0; i < faces_.size(); ++i) {
        const Face& f = faces_[i];
        for (int k = 0; k < 3; ++k) {
            const int e = find_edge(f[k], f[(k + 1) % 3]);
            incidence.emplace_back(e, static_cast<int>(i));
        }
    }
    std::sort(incidence.begin(), incidence.end());
    edge_face_offsets_.assign(edges_.size() + 1, 0);
    for (const auto& [e, f] : incidence)
        ++edge_face_offsets_[e + 1];
    for (std::size_t e = 0; e < edges_.size(); ++e)
        edge_face_offsets_[e + 1] += edge_face_offsets_[e];
    edge_face_list_.reserve(incidence.size());
    for (const auto& [e, f] : incidence)
        edge_face_list_.push_back(f);
}

std::span<const int> TriangleMesh::edge_faces(int e) const
{
    const auto begin = static_cast<std::size_t>(edge_face_offsets_.at(e));
    const auto end = static_cast<std::size_t>(edge_face_offsets_.at(e + 1));
    return std::span<const int>(edge_face_list_).subspan(begin, end - begin);
}

int TriangleMesh::find_edge(int a, int b) const
{
    const Edge key{std::min(a, b), std::max(a, b)};
    const auto it = std::lower_bound(edges_.begin(), edges_.end(), key);
    if (it == edges_.end() || *it != key)
        return -1;
    return static_cast<int>(it - edges_.begin());
}

TriangleMesh TriangleMesh::with_vertices(Field vertices) const
{
    if (vertices.rows() != vertices_.rows() || vertices.cols() != 3)
        throw std::invalid_argument("with_vertices: position field has wrong shape");
    TriangleMesh out = *this;
    out.vertices_ = std::move(vertices);
    return out;
}

bool TriangleMesh::same_connectivity(const TriangleMesh& other) const
{
    return num_vertices() == other.num_vertices() && faces_ == other.faces_;
}

Eigen::Vector3d TriangleMesh::face_normal(int f) const
{
    const Face& face = faces_.at(static_cast<std::size_t>(f));
    const Eigen::Vector3d p0 = vertices_.row(face[0]).transpose();
    const Eigen::Vector3d p1 = vertices_.row(face[1]).transpose();
    const Eigen::Vector3d p2 = vertices_.row(face[2]).transpose();
    return (p1 - p0).cross(p2 - p0);
}

EdgeDifferentialOperator::EdgeDifferentialOperator(int cols, std::vector<Edge> edges)
    : cols_(cols), edges_(std::move(edges))
{
    if (edges_.empty())
        throw std::invalid_argument("empty operator");
    row_offsets_.reserve(edges_.size() + 1);
    row_offsets_.push_back(0);
    row_entries_.reserve(edges_.size() * 2);
    for (const Edge& e : edges_) {
        if (e.a < 0 || e.b >= cols_ || e.a >= e.b)
            throw std::invalid_argument("invalid edge (" + std::to_string(e.a) + ", " +
                                        std::to_string(e.b) + ") for " + std::to_string(cols_) +
                                        " columns");
        row_entries_.push_back({e.a, -1.0});
        row_entries_.push_back({e.b, 1.0});
        row_offsets_.push_back(static_cast<int>(row_entries_.size()));
    }
    index_columns();
}

EdgeDifferentialOperator::EdgeDifferentialOperator(int cols, std::vector<Edge> edges,
                                                   const std::vector<std::vector<Entry>>& rows)
    : cols_(cols), edges_(std::move(edges))
{
    if (edges_.empty())
        throw std::invalid_argument("empty operator");
    if (rows.size() != edges_.size())
        throw std::invalid_argument("operator rows and edges differ in length");
    row_offsets_.push_back(0);
    for (const auto& r : rows) {
        for (const Entry& en : r) {
            if (en.col < 0 || en.col >= cols_)
                throw std::invalid_argument("operator column " + std::to_string(en.col) +
                                            " out of range");
            row_entries_.push_back(en);
        }
        row_offsets_.push_back(static_cast<int>(row_entries_.size()));
    }
    index_columns();
}

void EdgeDifferentialOperator::index_columns()
{
    col_offsets_.assign(static_cast<std::size_t>(cols_) + 1, 0);
    for (const Entry& en : row_entries_)
        ++col_offsets_[static_cast<std::size_t>(en.col) + 1];
    for (int v = 0; v < cols_; ++v)
        col_offsets_[v + 1] += col_offsets_[v];
    col_entries_.resize(row_entries_.size());
    normal_diagonal_.assign(static_cast<std::size_t>(cols_), 0.0);
    std::vector<int> cursor(col_offsets_.begin(), col_offsets_.end() - 1);
    for (int i = 0; i < rows(); ++i) {
        for (const Entry& en : row(i)) {
            col_entries_[static_cast<std::size_t>(cursor[en.col]++)] = {i, en.weight};
            normal_diagonal_[static_cast<std::size_t>(en.col)] += en.weight * en.weight;
        }
    }
}

std::span<const EdgeDifferentialOperator::Entry> EdgeDifferentialOperator::row(int i) const
{
    const auto begin = static_cast<std::size_t>(row_offsets_[static_cast<std::size_t>(i)]);
    const auto end = static_cast<std::size_t>(row_offsets_[static_cast<std::size_t>(i) + 1]);
    return std::span<const Entry>(row_entries_).subspan(begin, end - begin);
}

std::span<const EdgeDifferentialOperator::Entry> EdgeDifferentialOperator::column(int v) const
{
    const auto begin = static_cast<std::size_t>(col_offsets_[static_cast<std::size_t>(v)]);
    const auto end = static_cast<std::size_t>(col_offsets_[static_cast<std::size_t>(v) + 1]);
    return std::span<const Entry>(col_entries_).subspan(begin, end - begin);
}

std::vector<Eigen::Triplet<double>> EdgeDifferentialOperator::triplets() const
{
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(row_entries_.size());
    for (int i = 0; i < rows(); ++i)
        for (const Entry& en : row(i))
            t.emplace_back(i, en.col, en.weight);
    return t;
}

Eigen::SparseMatrix<double> EdgeDifferentialOperator::to_sparse() const
{
    Eigen::SparseMatrix<double> d(rows(), cols_);
    const auto t = triplets();
    d.setFromTriplets(t.begin(), t.end());
    return d;
}

Field EdgeDifferentialOperator::apply(const Field& x) const
{
    require_cols(x, cols_, "apply_operator");
    const Eigen::Index k = x.cols();
    Field out(rows(), k);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < rows(); ++i) {
        const auto r = row(i);
        for (Eigen::Index c = 0; c < k; ++c) {
            double s = 0.0;
            for (const Entry& en : r)
                s += en.weight * x(en.col, c);
            out(i, c) = s;
        }
    }
    return out;
}

Field EdgeDifferentialOperator::apply_transpose(const Field& psi) const
{
    require_cols(psi, rows(), "apply_transpose");
    const Eigen::Index k = psi.cols();
    Field out(cols_, k);
#pragma omp parallel for schedule(static)
    for (int v = 0; v < cols_; ++v) {
        const auto col = column(v);
        for (Eigen::Index c = 0; c < k; ++c) {
            double s = 0.0;
            for (const Entry& en : col)
                s += en.weight * psi(en.col, c);
            out(v, c) = s;
        }
    }
    return out;
}

Field EdgeDifferentialOperator::apply_normal(const Field& x) const
{
    return apply_transpose(apply(x));
}

EdgeDifferentialOperator build_edge_operator(const TriangleMesh& mesh)
{
    return EdgeDifferentialOperator(mesh.num_vertices(), mesh.edges());
}

EdgeDifferentialOperator build_area_edge_operator(const TriangleMesh& mesh, const Field* at)
{
    const Field& x = at != nullptr ? *at : mesh.vertices();
    if (x.rows() != mesh.num_vertices() || x.cols() != 3)
        throw std::invalid_argument("area operator geometry has wrong shape");
    const auto pos = [&](int v) { return Eigen::Vector3d(x(v, 0), x(v, 1), x(v, 2)); };
    const auto opposite = [&](int f, int a, int b) {
        for (int v : mesh.faces()[static_cast<std::size_t>(f)])
            if (v != a && v != b)
                return v;
        return -1;
    };

    std::vector<Edge> edges;
    std::vector<std::vector<EdgeDifferentialOperator::Entry>> rows;
    for (int e = 0; e < mesh.num_edges(); ++e) {
        const auto faces = mesh.edge_faces(e);
        if (faces.size() != 2)
            continue;
        const Edge& ed = mesh.edges()[static_cast<std::size_t>(e)];
        const int v1 = ed.a, v3 = ed.b;
        const int v2 = opposite(faces[0], v1, v3);
        const int v4 = opposite(faces[1], v1, v3);
        const Eigen::Vector3d p1 = pos(v1), p2 = pos(v2), p3 = pos(v3), p4 = pos(v4);
        const Eigen::Vector3d axis = p3 - p1;
        const double len2 = axis.squaredNorm();
        const double a123 = 0.5 * (p2 - p1).cross(axis).norm();
        const double a134 = 0.5 * axis.cross(p4 - p1).norm();
        const double total = a123 + a134;
        if (len2 == 0.0 || total == 0.0)
            continue;
        const double t2 = (p2 - p1).dot(axis) / len2;
        const double t4 = (p4 - p1).dot(axis) / len2;
        const double w2 = a134 / total, w4 = a123 / total;
        std::vector<EdgeDifferentialOperator::Entry> r = {
            {v1, -(w2 * (1.0 - t2) + w4 * (1.0 - t4))},
            {v2, w2},
            {v3, -(w2 * t2 + w4 * t4)},
            {v4, w4},
        };
        std::sort(r.begin(), r.end(), [](const auto& l, const auto& rr) { return l.col < rr.col; });
        edges.push_back(ed);
        rows.push_back(std::move(r));
    }
    return EdgeDifferentialOperator(mesh.num_vertices(), std::move(edges), rows);
}

std::vector<double> row_norms(const Field& f)
{
    std::vector<double> out(static_cast<std::size_t>(f.rows()));
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < f.rows(); ++i)
        out[static_cast<std::size_t>(i)] = f.row(i).norm();
    return out;
}

TriangleMesh add_gaussian_noise(const TriangleMesh& mesh, double sigma, std::uint64_t seed)
{
    if (!(sigma >= 0.0))
        throw std::invalid_argument("noise sigma must be >= 0");
    Field v = mesh.vertices();
    if (sigma == 0.0)
        return mesh.with_vertices(std::move(v));
    SplitMix64 rng(seed);
    for (Eigen::Index i = 0; i < v.rows(); ++i)
        for (Eigen::Index c = 0; c < 3; ++c)
            v(i, c) += sigma * rng.normal();
    return mesh.with_vertices(std::move(v));
}

double dihedral_angle_deg(const TriangleMesh& mesh, int edge)
{
    const auto faces = mesh.edge_faces(edge);
    if (faces.size() != 2)
        throw std::invalid_argument("edge " + std::to_string(edge) + " has " +
                                    std::to_string(faces.size()) + " incident faces, need 2");
    const Eigen::Vector3d n0 = mesh.face_normal(faces[0]);
    const Eigen::Vector3d n1 = mesh.face_normal(faces[1]);
    const double between = std::atan2(n0.cross(n1).norm(), n0.dot(n1));
    return 180.0 - rad_to_deg(between);
}

std::vector<int> detect_crease_edges(const TriangleMesh& mesh, double threshold_deg)
{
    std::vector<int> creases;
    for (int e = 0; e < mesh.num_edges(); ++e) {
        if (mesh.edge_face_count(e) != 2)
            continue;
        if (180.0 - dihedral_angle_deg(mesh, e) > threshold_deg)
            creases.push_back(e);
    }
    return creases;
}

MeshQualityReport quality_report(const TriangleMesh& candidate, const TriangleMesh& reference,
                                 std::span<const int> crease_edges)
{
    if (!candidate.same_connectivity(reference))
        throw std::invalid_argument("quality_report: connectivity mismatch");
    MeshQualityReport r;
    const Field diff = candidate.vertices() - reference.vertices();
    const auto n = diff.rows();
    if (n > 0) {
        double sq = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double d2 = diff.row(i).squaredNorm();
            sq += d2;
            r.max_deviation = std::max(r.max_deviation, std::sqrt(d2));
        }
        r.vertex_rmse = std::sqrt(sq / static_cast<double>(n));
    }
    if (!crease_edges.empty()) {
        double err = 0.0;
        for (int e : crease_edges)
            err += std::abs(dihedral_angle_deg(candidate, e) - dihedral_angle_deg(reference, e));
        r.mean_dihedral_error_deg = err / static_cast<double>(crease_edges.size());
    }
    return r;
}

namespace reference {

Field apply(const EdgeDifferentialOperator& op, const Field& x)
{
    require_cols(x, op.cols(), "apply_operator");
    Field out = Field::Zero(op.rows(), x.cols());
    for (int i = 0; i < op.rows(); ++i)
        for (const auto& en : op.row(i))
            out.row(i) += en.weight * x.row(en.col);
    return out;
}

Field apply_transpose(const EdgeDifferentialOperator& op, const Field& psi)
{
    require_cols(psi, op.rows(), "apply_transpose");
    Field out = Field::Zero(op.cols(), psi.cols());
    for (int i = 0; i < op.rows(); ++i)
        for (const auto& en : op.row(i))
            out.row(en.col) += en.weight * psi.row(i);
    return out;
}

} // namespace reference

} // namespace dcv
