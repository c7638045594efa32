#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace dcv {

/// Row-major n x k field; k = 3 for vertex positions, k = 1 for depth maps.
using Field = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Face = std::array<int, 3>;

/// Undirected edge with a < b.
struct Edge {
    int a = 0;
    int b = 0;

    friend bool operator==(const Edge&, const Edge&) = default;
    friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Indexed triangle mesh. Edges are derived from the faces, stored once each
/// (lower index first, sorted lexicographically) together with the faces
/// incident to them. Non-manifold and boundary edges are allowed.
class TriangleMesh {
  public:
    TriangleMesh() = default;

    /// Throws std::invalid_argument on out-of-range or repeated face indices,
    /// or when `vertices` does not have three columns.
    TriangleMesh(Field vertices, std::vector<Face> faces);

    const Field& vertices() const { return vertices_; }
    const std::vector<Face>& faces() const { return faces_; }
    const std::vector<Edge>& edges() const { return edges_; }

    int num_vertices() const { return static_cast<int>(vertices_.rows()); }
    int num_faces() const { return static_cast<int>(faces_.size()); }
    int num_edges() const { return static_cast<int>(edges_.size()); }

    /// Faces incident to edge `e`, in ascending face order.
    std::span<const int> edge_faces(int e) const;
    int edge_face_count(int e) const { return static_cast<int>(edge_faces(e).size()); }

    /// Index of edge (a, b) in either orientation, or -1.
    int find_edge(int a, int b) const;

    /// Same connectivity, new positions (must be num_vertices() x 3).
    TriangleMesh with_vertices(Field vertices) const;

    /// True when faces (and therefore edges) match exactly.
    bool same_connectivity(const TriangleMesh& other) const;

    Eigen::Vector3d face_normal(int f) const;

  private:
    Field vertices_;
    std::vector<Face> faces_;
    std::vector<Edge> edges_;
    std::vector<int> edge_face_offsets_;
    std::vector<int> edge_face_list_;
};

/// Distinct sorted undirected edges of a face list.
std::vector<Edge> edges_from_faces(std::span<const Face> faces);

/// Sparse m x n operator with one row per mesh edge, mapping a vertex field to
/// per-edge gradient vectors. Rows are stored compressed together with the
/// column-major transpose so both products gather in a fixed order.
class EdgeDifferentialOperator {
  public:
    struct Entry {
        int col = 0;
        double weight = 0.0;
    };

    /// Signed vertex difference: row i has -1 at column a and +1 at column b
    /// of edge i, so that it yields x_b - x_a. Throws
    /// std::invalid_argument("empty operator") when `edges` is empty, and on
    /// edges that are out of range or not ordered a < b.
    EdgeDifferentialOperator(int cols, std::vector<Edge> edges);

    /// General rows; rows[i] belongs to edges[i]. Throws on empty input,
    /// length mismatch or out-of-range columns.
    EdgeDifferentialOperator(int cols, std::vector<Edge> edges,
                             const std::vector<std::vector<Entry>>& rows);

    int rows() const { return static_cast<int>(edges_.size()); }
    int cols() const { return cols_; }
    const std::vector<Edge>& edges() const { return edges_; }

    std::span<const Entry> row(int i) const;

    /// Nonzeros as (row, col, weight) triplets in row order.
    std::vector<Eigen::Triplet<double>> triplets() const;
    Eigen::SparseMatrix<double> to_sparse() const;

    /// D X (m x k). Throws std::invalid_argument on dimension mismatch.
    Field apply(const Field& x) const;

    /// D^T psi (n x k), gathered per column in row order.
    Field apply_transpose(const Field& psi) const;

    /// D^T D X.
    Field apply_normal(const Field& x) const;

    /// Diagonal entry v of D^T D; the vertex degree for a difference operator.
    double normal_diagonal(int v) const { return normal_diagonal_[static_cast<std::size_t>(v)]; }

    /// Rows touching column v, as (row, weight) pairs in ascending row order.
    std::span<const Entry> column(int v) const;

  private:
    void index_columns();

    int cols_ = 0;
    std::vector<Edge> edges_;
    std::vector<int> row_offsets_;
    std::vector<Entry> row_entries_;
    std::vector<int> col_offsets_;
    std::vector<Entry> col_entries_; // Entry::col holds the row index here
    std::vector<double> normal_diagonal_;
};

/// Signed-difference operator over the mesh's edge list.
EdgeDifferentialOperator build_edge_operator(const TriangleMesh& mesh);

/// Area-weighted edge operator spanning the four vertices of the two faces
/// at every edge with exactly two incident faces (other edges get no row).
/// For an edge (v1, v3) with opposite vertices v2 and v4 in faces of areas
/// A123 and A134, the row is (A134 h2 + A123 h4) / (A123 + A134), where hk is
/// the component of x_vk - x_v1 orthogonal to the edge line. It vanishes on
/// coplanar configurations, so its values are sparse on piecewise flat
/// surfaces. Coefficients are taken from the geometry in `at`
/// (defaults to the mesh's own vertices).
EdgeDifferentialOperator build_area_edge_operator(const TriangleMesh& mesh, const Field* at = nullptr);

inline Field apply_operator(const EdgeDifferentialOperator& op, const Field& positions)
{
    return op.apply(positions);
}

/// Per-row Euclidean norms of an m x k field.
std::vector<double> row_norms(const Field& f);

/// Every vertex coordinate perturbed by an independent N(0, sigma^2) draw from
/// SplitMix64(seed), consumed in vertex-major (x, y, z) order.
TriangleMesh add_gaussian_noise(const TriangleMesh& mesh, double sigma, std::uint64_t seed);

/// Interior dihedral angle in degrees at an edge with exactly two incident
/// faces (180 for a flat configuration). Throws otherwise.
double dihedral_angle_deg(const TriangleMesh& mesh, int edge);

/// Edges with two incident faces whose normals differ by more than
/// `threshold_deg`.
std::vector<int> detect_crease_edges(const TriangleMesh& mesh, double threshold_deg = 30.0);

struct MeshQualityReport {
    double vertex_rmse = 0.0;
    double mean_dihedral_error_deg = 0.0;
    double max_deviation = 0.0;
};

/// Throws std::invalid_argument when the two meshes differ in connectivity.
MeshQualityReport quality_report(const TriangleMesh& candidate, const TriangleMesh& reference,
                                 std::span<const int> crease_edges);

namespace reference {

/// Serial D X, kept as the test reference for the OpenMP kernel.
Field apply(const EdgeDifferentialOperator& op, const Field& x);

/// Serial D^T psi via scatter over edges.
Field apply_transpose(const EdgeDifferentialOperator& op, const Field& psi);

} // namespace reference

} // namespace dcv
