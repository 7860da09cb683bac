#pragma once

#include <functional>
#include <string>

#include "dflab/graph_form.hpp"

namespace dflab {

using VectorRef = Eigen::Ref<const Vector>;

/// Weight on ordered vertex pairs for pair integrals.
using PairWeight = std::function<double(Index, Index)>;

// ---------------------------------------------------------------------------
// Forms

/// Jump part sum_{x != y} j(x,y) (u(x)-u(y)) (v(x)-v(y)), ordered pairs.
double jump_energy(const GraphForm& g, const VectorRef& u, const VectorRef& v);

/// E(u, v) including the killing term.
double energy(const GraphForm& g, const VectorRef& u, const VectorRef& v);
inline double energy(const GraphForm& g, const VectorRef& u) { return energy(g, u, u); }

/// h(u, v) = E(u, v) + sum_x nu(x) u(x) v(x) for signed per-vertex weights nu.
double energy(const GraphForm& g, const VectorRef& nu, const VectorRef& u, const VectorRef& v);

/// m-weighted inner product.
double inner(const GraphForm& g, const VectorRef& u, const VectorRef& v);
inline double norm_sq(const GraphForm& g, const VectorRef& u) { return inner(g, u, u); }

// ---------------------------------------------------------------------------
// Energy measures

enum class MeasurePart { a, b, d };

MeasurePart measure_part_from_string(const std::string& name);

struct EnergyMeasure {
    MeasurePart part;
    Vector values;  ///< measure of each singleton {x}

    double total() const { return values.sum(); }
};

/// Part b: sum_y j(x,y)(u(x)-u(y))^2. Part a: u(x)^2 k(x). Part d equals
/// part b since graphs carry no strongly local part.
EnergyMeasure energy_measure(const GraphForm& g, const VectorRef& u, MeasurePart part);

/// Bilinear version of part b: sum_y j(x,y)(u(x)-u(y))(v(x)-v(y)).
Vector jump_measure(const GraphForm& g, const VectorRef& u, const VectorRef& v);
inline Vector jump_measure(const GraphForm& g, const VectorRef& u) { return jump_measure(g, u, u); }

/// Gamma(u,v)(x,y) = j(x,y)(u(x)-u(y))(v(x)-v(y)) on the support of j.
SparseMatrix gamma_matrix(const GraphForm& g, const VectorRef& u, const VectorRef& v);

/// sum_{x != y} f(x,y) Gamma(u,v)(x,y).
double gamma_integral(const GraphForm& g, const PairWeight& f, const VectorRef& u, const VectorRef& v);
double gamma_integral(const GraphForm& g, const Matrix& f, const VectorRef& u, const VectorRef& v);

struct IdentityResidual {
    double residual = 0.0;
    double scale = 0.0;  ///< sum of absolute values of the contributing terms

    double relative() const { return scale > 0.0 ? residual / scale : residual; }
};

/// |sum f dGamma(uv, w) - sum f u(x) dGamma(v, w) - sum f v(y) dGamma(u, w)|.
IdentityResidual leibniz_residual(const GraphForm& g, const PairWeight& f, const VectorRef& u, const VectorRef& v,
                                  const VectorRef& w);

// ---------------------------------------------------------------------------
// Capacity and contractions

struct CapacityResult {
    double value = 0.0;
    Vector minimizer;
};

/// Minimises E(v) + sum_x m(x) v(x)^2 over v with v = 1 on `set`.
CapacityResult capacity(const GraphForm& g, const VertexSet& set);

struct NormalContraction {
    enum class Kind { identity, clamp, absolute, unit_clamp } kind = Kind::identity;
    double lo = 0.0;
    double hi = 0.0;

    static NormalContraction identity() { return {}; }
    /// Requires lo <= 0 <= hi so that T(0) = 0.
    static NormalContraction clamp(double lo, double hi);
    static NormalContraction absolute() { return {Kind::absolute, 0.0, 0.0}; }
    /// t -> (t min 1) max 0
    static NormalContraction unit_clamp() { return {Kind::unit_clamp, 0.0, 1.0}; }

    double operator()(double t) const;
    Vector apply(const VectorRef& u) const;
};

/// E(u) - E(T o u); nonnegative by the Markov property.
IdentityResidual contraction_deficit(const GraphForm& g, const VectorRef& u, const NormalContraction& t);

struct ProductBound {
    double product_energy = 0.0;  ///< E(uv)
    double sharp_rhs = 0.0;       ///< |u|_inf^2 E(v) + |v|_inf^2 E(u)
    double doubled_rhs = 0.0;     ///< twice the sharp right-hand side
};

ProductBound product_energy_bound(const GraphForm& g, const VectorRef& u, const VectorRef& v);

// ---------------------------------------------------------------------------
// Operator

/// 2 (D - J) with D = diag(m'), so that u^T L u is the jump energy.
SparseMatrix jump_laplacian(const GraphForm& g);

/// Matrix of h = E + nu in the plain inner product: 2(D - J) + diag(k + nu).
SparseMatrix form_matrix(const GraphForm& g, const VectorRef& nu);
SparseMatrix form_matrix(const GraphForm& g);

/// (Hu)(x) = (2 sum_y j(x,y)(u(x)-u(y)) + (k(x)+nu(x)) u(x)) / m(x), so that
/// <Hu, v>_m = h(u, v).
Vector generator_apply(const GraphForm& g, const VectorRef& nu, const VectorRef& u);
Vector generator_apply(const GraphForm& g, const VectorRef& u);

/// M^{-1/2} (2(D-J) + diag(k+nu)) M^{-1/2}, unitarily equivalent to H.
Matrix generator_matrix(const GraphForm& g, const VectorRef& nu);
Matrix generator_matrix(const GraphForm& g);

/// Zero potential of the right size.
inline Vector zero_potential(const GraphForm& g) { return Vector::Zero(g.size()); }

}  // namespace dflab
