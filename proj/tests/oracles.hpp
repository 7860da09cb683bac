#pragma once

// Brute-force reference computations that share no code with the library.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "dflab/graph_form.hpp"

namespace oracle {

using dflab::GraphForm;
using dflab::Index;
using dflab::Matrix;
using dflab::Vector;

inline Matrix dense_jump(const GraphForm& g) { return Matrix(g.jump); }

/// Ordered-pair double loop.
inline double energy(const GraphForm& g, const Vector& u, const Vector& v) {
    const Matrix j = dense_jump(g);
    double s = 0.0;
    for (Index x = 0; x < g.size(); ++x) {
        for (Index y = 0; y < g.size(); ++y)
            if (x != y) s += j(x, y) * (u(x) - u(y)) * (v(x) - v(y));
        s += g.killing(x) * u(x) * v(x);
    }
    return s;
}

inline double energy(const GraphForm& g, const Vector& u) { return energy(g, u, u); }

/// Generator applied pointwise: (2 sum_y j(x,y)(u(x)-u(y)) + (k+nu) u) / m.
inline Vector apply_h(const GraphForm& g, const Vector& nu, const Vector& u) {
    const Matrix j = dense_jump(g);
    Vector out(g.size());
    for (Index x = 0; x < g.size(); ++x) {
        double s = 0.0;
        for (Index y = 0; y < g.size(); ++y) s += 2.0 * j(x, y) * (u(x) - u(y));
        out(x) = (s + (g.killing(x) + nu(x)) * u(x)) / g.mass(x);
    }
    return out;
}

/// Matrix of H in the standard basis, built column by column from apply_h.
inline Matrix h_matrix(const GraphForm& g, const Vector& nu) {
    Matrix h(g.size(), g.size());
    for (Index c = 0; c < g.size(); ++c) h.col(c) = apply_h(g, nu, Vector::Unit(g.size(), c));
    return h;
}

/// Eigenvalues of H via the generalised symmetric problem A v = lambda M v.
inline Vector eigenvalues(const GraphForm& g, const Vector& nu) {
    const Matrix a = Matrix(g.mass.asDiagonal()) * h_matrix(g, nu);
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(0.5 * (a + a.transpose()), Matrix(g.mass.asDiagonal()),
                                                         Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

/// All-pairs shortest paths with edge lengths len(x, y) (inf = no edge).
inline Matrix floyd_warshall(Matrix d) {
    const Index n = d.rows();
    for (Index x = 0; x < n; ++x) d(x, x) = 0.0;
    for (Index k = 0; k < n; ++k)
        for (Index i = 0; i < n; ++i)
            for (Index j = 0; j < n; ++j) d(i, j) = std::min(d(i, j), d(i, k) + d(k, j));
    return d;
}

/// sum_y rho(x,y)^2 j(x,y)
inline Vector rowsum(const GraphForm& g, const Matrix& rho) {
    const Matrix j = dense_jump(g);
    Vector out = Vector::Zero(g.size());
    for (Index x = 0; x < g.size(); ++x)
        for (Index y = 0; y < g.size(); ++y) out(x) += rho(x, y) * rho(x, y) * j(x, y);
    return out;
}

/// sum_y j(x,y) (u(x)-u(y))^2
inline Vector mu(const GraphForm& g, const Vector& u) {
    const Matrix j = dense_jump(g);
    Vector out = Vector::Zero(g.size());
    for (Index x = 0; x < g.size(); ++x)
        for (Index y = 0; y < g.size(); ++y) out(x) += j(x, y) * (u(x) - u(y)) * (u(x) - u(y));
    return out;
}

/// Simpson's rule on [lo, hi] with n (even) panels.
template <typename F>
double simpson(F f, double lo, double hi, int n) {
    const double h = (hi - lo) / n;
    double s = f(lo) + f(hi);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(lo + i * h);
    return s * h / 3.0;
}

}  // namespace oracle
