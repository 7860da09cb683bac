#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace dflab {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using VertexSet = std::vector<Index>;

/// Finite window of a weighted graph carrying a non-local Dirichlet form
///
///   E(u, v) = sum_{x != y} j(x,y) (u(x) - u(y)) (v(x) - v(y)) + sum_x k(x) u(x) v(x)
///
/// on l^2(X, m). The double sum runs over ordered pairs, so every edge is
/// counted twice. `jump` stores both triangles; it is expected to be
/// symmetric with an empty diagonal, which `validate` checks.
struct GraphForm {
    Eigen::MatrixXi coords;  ///< n x d lattice coordinates, 0 columns when absent
    Vector mass;
    SparseMatrix jump;
    Vector killing;
    std::vector<bool> interior;
    Vector tail_bound;  ///< jump mass per vertex lost to window truncation
    double tail_tolerance = 1e-8;
    std::vector<std::string> labels;  ///< optional vertex names

    Index size() const { return mass.size(); }
    int dimension() const { return static_cast<int>(coords.cols()); }
    bool has_coords() const { return coords.cols() > 0; }

    VertexSet interior_vertices() const;
    /// Index of the vertex with the given lattice coordinates, or -1.
    Index find_coords(const Eigen::VectorXi& x) const;
    /// Index of the vertex with the given label, or -1.
    Index find_label(const std::string& label) const;
};

enum class ModelKind { lattice, powerlaw, exponential, topo_example, three_point, mirror, explicit_graph };

struct ExplicitEdge {
    Index x;
    Index y;
    double weight;
};

/// Parameter carrier for the model catalog.
///
/// `radius` is the window half-width R for lattice-type models and the
/// size parameter N for `topo_example` and `mirror`.
struct ModelSpec {
    ModelKind kind = ModelKind::lattice;
    int dimension = 1;
    int radius = 1;
    double edge_weight = 1.0;
    double alpha = 1.0;
    double beta = 1.0;
    double amplitude = 1.0;
    double mass = 1.0;
    int interior_margin = 1;
    double tail_tolerance = 1e-8;

    // explicit_graph only
    std::vector<double> masses;
    std::vector<double> killing;
    std::vector<ExplicitEdge> edges;
    std::vector<bool> interior;
};

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

/// Builds the window described by `spec`. Throws std::invalid_argument for
/// parameters outside the documented ranges or a window with no interior.
GraphForm build_model(const ModelSpec& spec);

/// m'(x) = sum_y j(x,y).
Vector degree_measure(const GraphForm& g);

/// Number of neighbours (nonzero jump weights) per vertex.
Eigen::VectorXi vertex_degree(const GraphForm& g);

struct Diagnostic {
    enum class Kind { shape, symmetry, diagonal, negative_jump, mass, killing, degree, tail } kind;
    Index x = -1;
    Index y = -1;
    std::string message;
};

/// Lists every invariant violation; empty iff `g` is a valid window.
std::vector<Diagnostic> validate(const GraphForm& g);

/// Line-oriented text dump: header `n edges`, then `id m k interior [coords]`
/// per vertex, then `x y j` per edge with x < y. 17 significant digits.
void write_graph_dump(std::ostream& os, const GraphForm& g);
GraphForm read_graph_dump(std::istream& is);

/// Vertex-induced restriction onto `keep` (in the given order).
GraphForm restrict_to(const GraphForm& g, const VertexSet& keep);

/// Formats a double with 17 significant digits; "inf" for infinities.
std::string format_number(double value);

}  // namespace dflab
