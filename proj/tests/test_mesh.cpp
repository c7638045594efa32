#include "dcv/errors.hpp"
#include "dcv/mesh.hpp"
#include "dcv/mesh_io.hpp"
#include "dcv/parallel.hpp"
#include "dcv/rng.hpp"
#include "dcv/synth.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <set>
#include <sstream>

using namespace dcv;

namespace {

TriangleMesh single_triangle()
{
    Field v(3, 3);
    v << 0, 0, 0, 1, 0, 0, 0, 1, 0;
    return TriangleMesh(v, {Face{0, 1, 2}});
}

Field random_field(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed)
{
    SplitMix64 rng(seed);
    Field f(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j)
            f(i, j) = rng.uniform(-1.0, 1.0);
    return f;
}

} // namespace

TEST_CASE("mesh construction validates faces and derives sorted unique edges")
{
    const TriangleMesh t = single_triangle();
    CHECK(t.num_edges() == 3);
    for (const Edge& e : t.edges())
        CHECK(e.a < e.b);
    CHECK(t.edge_face_count(0) == 1);

    Field v = Field::Zero(3, 3);
    CHECK_THROWS_AS(TriangleMesh(v, {Face{0, 1, 3}}), std::invalid_argument);
    CHECK_THROWS_AS(TriangleMesh(v, {Face{0, 1, 1}}), std::invalid_argument);
    CHECK_THROWS_AS(TriangleMesh(Field::Zero(3, 2), {Face{0, 1, 2}}), std::invalid_argument);
}

TEST_CASE("non-manifold edges are accepted and count their faces")
{
    Field v(5, 3);
    v << 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, -1, 0, 0, 0, 1;
    const TriangleMesh m(v, {Face{0, 1, 2}, Face{1, 0, 3}, Face{0, 1, 4}});
    const int e = m.find_edge(1, 0);
    REQUIRE(e >= 0);
    CHECK(m.edge_face_count(e) == 3);
}

TEST_CASE("edge operator of a single triangle")
{
    const EdgeDifferentialOperator d = build_edge_operator(single_triangle());
    CHECK(d.rows() == 3);
    CHECK(d.cols() == 3);
    for (int i = 0; i < d.rows(); ++i) {
        REQUIRE(d.row(i).size() == 2);
        const Edge e = d.edges()[static_cast<std::size_t>(i)];
        for (const auto& entry : d.row(i))
            CHECK(entry.weight == (entry.col == e.a ? -1.0 : 1.0));
    }
}

TEST_CASE("edge operator on constant positions is exactly zero")
{
    const TriangleMesh cube = make_cube(3);
    const Field x = Field::Constant(cube.num_vertices(), 3, 0.731);
    CHECK(build_edge_operator(cube).apply(x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("unit cube operator: 18 x 8 with magnitudes 1 and sqrt 2")
{
    const TriangleMesh cube = make_cube(1);
    REQUIRE(cube.num_vertices() == 8);
    REQUIRE(cube.num_faces() == 12);
    const EdgeDifferentialOperator d = build_edge_operator(cube);
    CHECK(d.rows() == 18);
    CHECK(d.cols() == 8);
    int ones = 0;
    int diagonals = 0;
    for (double n : row_norms(d.apply(cube.vertices()))) {
        if (std::abs(n - 1.0) < 1e-15)
            ++ones;
        else if (std::abs(n - std::sqrt(2.0)) < 1e-15)
            ++diagonals;
    }
    CHECK(ones == 12);
    CHECK(diagonals == 6);
}

TEST_CASE("apply on a segment pair and dimension errors")
{
    const EdgeDifferentialOperator d(2, {Edge{0, 1}});
    Field x(2, 3);
    x << 0, 0, 0, 1, 0, 0;
    const Field g = d.apply(x);
    CHECK(g(0, 0) == 1.0);
    CHECK(g(0, 1) == 0.0);
    CHECK(g(0, 2) == 0.0);
    CHECK_THROWS_AS(d.apply(Field::Zero(3, 3)), std::invalid_argument);
    CHECK_THROWS_AS(d.apply_transpose(Field::Zero(2, 3)), std::invalid_argument);
}

TEST_CASE("empty operator is an error")
{
    CHECK_THROWS_WITH_AS(EdgeDifferentialOperator(2, {}), "empty operator", std::invalid_argument);
    CHECK_THROWS_AS(EdgeDifferentialOperator(2, {Edge{1, 0}}), std::invalid_argument);
    CHECK_THROWS_AS(EdgeDifferentialOperator(2, {Edge{0, 2}}), std::invalid_argument);
}

TEST_CASE("translation invariance of the edge operator")
{
    const TriangleMesh m = make_sphere(3);
    const EdgeDifferentialOperator d = build_edge_operator(m);
    const Field x = random_field(m.num_vertices(), 3, 11);
    Field shifted = x;
    shifted.rowwise() += Eigen::RowVector3d(0.3, -2.0, 5.5);
    CHECK((d.apply(shifted) - d.apply(x)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("displacing one cube vertex changes exactly its rows")
{
    const TriangleMesh cube = make_cube(1);
    const EdgeDifferentialOperator d = build_edge_operator(cube);
    Field x = cube.vertices();
    const Field before = d.apply(x);
    x(5, 2) += 0.5;
    const Field after = d.apply(x);
    for (int i = 0; i < d.rows(); ++i) {
        const Edge e = d.edges()[static_cast<std::size_t>(i)];
        Eigen::RowVector3d expected = Eigen::RowVector3d::Zero();
        if (e.b == 5)
            expected(2) = 0.5;
        else if (e.a == 5)
            expected(2) = -0.5;
        CHECK((after.row(i) - before.row(i) - expected).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("null space of the edge operator is the constants")
{
    for (const TriangleMesh& m : {make_cube(1), make_prism(2), make_sphere(2)}) {
        const Eigen::MatrixXd dm = build_edge_operator(m).to_sparse();
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dm.transpose() * dm);
        int zeros = 0;
        for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
            if (std::abs(es.eigenvalues()(i)) < 1e-10)
                ++zeros;
        CHECK(zeros == 1);
    }
}

TEST_CASE("transpose and normal products agree with the sparse matrix")
{
    const TriangleMesh m = make_prism(3);
    const EdgeDifferentialOperator d = build_edge_operator(m);
    const Eigen::SparseMatrix<double> s = d.to_sparse();
    const Field x = random_field(m.num_vertices(), 3, 5);
    const Field psi = random_field(d.rows(), 3, 6);
    CHECK((d.apply(x) - Field(s * x)).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((d.apply_transpose(psi) - Field(s.transpose() * psi)).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((d.apply_normal(x) - Field(s.transpose() * (s * x))).cwiseAbs().maxCoeff() < 1e-13);
    const Eigen::SparseMatrix<double> sts = s.transpose() * s;
    for (int v = 0; v < m.num_vertices(); ++v)
        CHECK(d.normal_diagonal(v) == doctest::Approx(sts.coeff(v, v)));
}

TEST_CASE("OpenMP operator products match the serial reference bit for bit")
{
    const TriangleMesh m = make_sphere(12);
    const EdgeDifferentialOperator d = build_edge_operator(m);
    const EdgeDifferentialOperator a = build_area_edge_operator(m);
    const Field x = random_field(m.num_vertices(), 3, 21);
    const Field psi = random_field(d.rows(), 3, 22);
    const Field psi_a = random_field(a.rows(), 3, 23);
    const int saved = thread_count();
    for (int threads : {1, 3}) {
        set_thread_count(threads);
        CHECK(d.apply(x) == reference::apply(d, x));
        CHECK(d.apply_transpose(psi) == reference::apply_transpose(d, psi));
        CHECK(a.apply(x) == reference::apply(a, x));
        CHECK(a.apply_transpose(psi_a) == reference::apply_transpose(a, psi_a));
    }
    set_thread_count(saved);
}

TEST_CASE("area operator vanishes on flat patches and keeps creases")
{
    const TriangleMesh cube = make_cube(4);
    const EdgeDifferentialOperator a = build_area_edge_operator(cube);
    const std::vector<int> creases = detect_crease_edges(cube);
    const std::set<int> crease_set(creases.begin(), creases.end());
    const std::vector<double> n = row_norms(a.apply(cube.vertices()));
    REQUIRE(static_cast<int>(n.size()) == a.rows());
    int nonzero = 0;
    for (int i = 0; i < a.rows(); ++i) {
        const Edge e = a.edges()[static_cast<std::size_t>(i)];
        const bool crease = crease_set.count(cube.find_edge(e.a, e.b)) > 0;
        if (crease) {
            CHECK(n[static_cast<std::size_t>(i)] > 0.1);
            ++nonzero;
        } else {
            CHECK(n[static_cast<std::size_t>(i)] < 1e-14);
        }
    }
    CHECK(nonzero == static_cast<int>(creases.size()));

    Field shifted = cube.vertices();
    shifted.rowwise() += Eigen::RowVector3d(1.0, 2.0, 3.0);
    CHECK((a.apply(shifted) - a.apply(cube.vertices())).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("area operator has no rows for boundary edges")
{
    CHECK_THROWS_WITH_AS(build_area_edge_operator(single_triangle()), "empty operator",
                         std::invalid_argument);
}

TEST_CASE("gaussian noise: zero sigma, determinism and statistics")
{
    const TriangleMesh cube = make_cube(41);
    REQUIRE(cube.num_vertices() >= 10000);
    CHECK(add_gaussian_noise(cube, 0.0, 3).vertices() == cube.vertices());
    const TriangleMesh a = add_gaussian_noise(cube, 0.1, 3);
    const TriangleMesh b = add_gaussian_noise(cube, 0.1, 3);
    CHECK(a.vertices() == b.vertices());
    CHECK(a.same_connectivity(cube));
    CHECK(add_gaussian_noise(cube, 0.1, 4).vertices() != a.vertices());

    const Field diff = a.vertices() - cube.vertices();
    const double n = static_cast<double>(diff.size());
    const double mean = diff.sum() / n;
    const double sd = std::sqrt((diff.array() - mean).square().sum() / (n - 1.0));
    CHECK(sd >= 0.097);
    CHECK(sd <= 0.103);
    CHECK(std::abs(mean) <= 4.0 * 0.1 / std::sqrt(n));
}

TEST_CASE("noise draws follow the documented generator order")
{
    const TriangleMesh t = single_triangle();
    const TriangleMesh n = add_gaussian_noise(t, 0.5, 99);
    SplitMix64 rng(99);
    for (int v = 0; v < 3; ++v)
        for (int k = 0; k < 3; ++k)
            CHECK(n.vertices()(v, k) == t.vertices()(v, k) + 0.5 * rng.normal());
}

TEST_CASE("quality report examples")
{
    const TriangleMesh cube = make_cube(1);
    const std::vector<int> creases = detect_crease_edges(cube);
    CHECK(creases.size() == 12);

    const MeshQualityReport same = quality_report(cube, cube, creases);
    CHECK(same.vertex_rmse == 0.0);
    CHECK(same.mean_dihedral_error_deg == 0.0);
    CHECK(same.max_deviation == 0.0);

    Field moved = cube.vertices();
    moved.col(0).array() += 1.0;
    const MeshQualityReport shifted = quality_report(cube.with_vertices(moved), cube, creases);
    CHECK(shifted.vertex_rmse == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(shifted.mean_dihedral_error_deg == doctest::Approx(0.0).epsilon(1e-9));

    Field pushed = cube.vertices();
    int count = 0;
    for (Eigen::Index i = 0; i < pushed.rows(); ++i) {
        if (pushed(i, 2) > 0.0) {
            pushed(i, 2) += 0.2;
            ++count;
        }
    }
    REQUIRE(count == 4);
    const MeshQualityReport r = quality_report(cube.with_vertices(pushed), cube, creases);
    CHECK(r.vertex_rmse == doctest::Approx(std::sqrt(4.0 * 0.04 / 8.0)).epsilon(1e-12));
    CHECK(r.max_deviation == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(r.vertex_rmse <= r.max_deviation);

    CHECK_THROWS_AS(quality_report(make_cube(2), cube, creases), std::invalid_argument);
}

TEST_CASE("dihedral angles of the cube")
{
    const TriangleMesh cube = make_cube(1);
    for (int e = 0; e < cube.num_edges(); ++e) {
        const double a = dihedral_angle_deg(cube, e);
        CHECK((std::abs(a - 90.0) < 1e-9 || std::abs(a - 180.0) < 1e-9));
    }
    CHECK_THROWS(dihedral_angle_deg(single_triangle(), 0));
}

TEST_CASE("OBJ and PLY round trips keep 9 significant digits")
{
    const TriangleMesh m = add_gaussian_noise(make_sphere(3), 0.01, 1);
    for (const bool ply : {false, true}) {
        std::stringstream ss;
        if (ply)
            write_ply(ss, m);
        else
            write_obj(ss, m);
        const TriangleMesh r = ply ? read_ply(ss) : read_obj(ss);
        CHECK(r.same_connectivity(m));
        for (Eigen::Index i = 0; i < m.vertices().rows(); ++i)
            for (Eigen::Index k = 0; k < 3; ++k) {
                const double v = m.vertices()(i, k);
                CHECK(std::abs(r.vertices()(i, k) - v) <= 1e-8 * std::max(1.0, std::abs(v)));
            }
    }
}

TEST_CASE("OBJ reader triangulates polygons and handles index forms")
{
    std::stringstream ss("# quad\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvn 0 0 1\nf 1//1 2//1 3//1 4//1\n");
    const TriangleMesh m = read_obj(ss);
    CHECK(m.num_vertices() == 4);
    CHECK(m.num_faces() == 2);
    std::stringstream neg("v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\n");
    CHECK(read_obj(neg).num_faces() == 1);
}

TEST_CASE("malformed mesh files raise IoError")
{
    std::stringstream bad_vertex("v 0 0\nf 1 2 3\n");
    CHECK_THROWS_AS(read_obj(bad_vertex), IoError);
    std::stringstream bad_index("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 7\n");
    CHECK_THROWS_AS(read_obj(bad_index), IoError);
    std::stringstream bad_ply("ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\n"
                              "property float y\nproperty float z\nelement face 1\n"
                              "property list uchar int vertex_indices\nend_header\n0 0 0\n1 0 0\n");
    CHECK_THROWS_AS(read_ply(bad_ply), IoError);
    std::stringstream binary("ply\nformat binary_little_endian 1.0\nend_header\n");
    CHECK_THROWS_AS(read_ply(binary), IoError);
    CHECK_THROWS_AS(read_mesh("/nonexistent/x.obj"), IoError);
    CHECK_THROWS_AS(read_mesh("x.stl"), IoError);
}
