#include "dflab/energy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/SparseCholesky>

namespace dflab {

namespace {

void check_size(const GraphForm& g, const VectorRef& u, const char* what) {
    if (u.size() != g.size())
        throw std::invalid_argument(std::string(what) + ": vector of size " + std::to_string(u.size()) +
                                    " on a window of size " + std::to_string(g.size()));
}

/// Calls fn(x, y, j) for every stored ordered pair.
template <typename Fn>
void for_each_pair(const GraphForm& g, Fn&& fn) {
    for (Index c = 0; c < g.jump.outerSize(); ++c)
        for (SparseMatrix::InnerIterator it(g.jump, c); it; ++it)
            if (it.row() != it.col()) fn(it.row(), it.col(), it.value());
}

}  // namespace

double jump_energy(const GraphForm& g, const VectorRef& u, const VectorRef& v) {
    check_size(g, u, "energy");
    check_size(g, v, "energy");
    double sum = 0.0;
    for_each_pair(g, [&](Index x, Index y, double j) { sum += j * (u(x) - u(y)) * (v(x) - v(y)); });
    return sum;
}

double energy(const GraphForm& g, const VectorRef& u, const VectorRef& v) {
    return jump_energy(g, u, v) + (g.killing.array() * u.array() * v.array()).sum();
}

double energy(const GraphForm& g, const VectorRef& nu, const VectorRef& u, const VectorRef& v) {
    check_size(g, nu, "energy");
    return energy(g, u, v) + (nu.array() * u.array() * v.array()).sum();
}

double inner(const GraphForm& g, const VectorRef& u, const VectorRef& v) {
    check_size(g, u, "inner");
    check_size(g, v, "inner");
    return (g.mass.array() * u.array() * v.array()).sum();
}

MeasurePart measure_part_from_string(const std::string& name) {
    if (name == "a") return MeasurePart::a;
    if (name == "b") return MeasurePart::b;
    if (name == "d") return MeasurePart::d;
    throw std::invalid_argument("unknown energy measure part: " + name);
}

EnergyMeasure energy_measure(const GraphForm& g, const VectorRef& u, MeasurePart part) {
    check_size(g, u, "energy_measure");
    switch (part) {
        case MeasurePart::a: return {part, (u.array().square() * g.killing.array()).matrix()};
        case MeasurePart::b:
        case MeasurePart::d: return {part, jump_measure(g, u, u)};
    }
    throw std::invalid_argument("unknown energy measure part");
}

Vector jump_measure(const GraphForm& g, const VectorRef& u, const VectorRef& v) {
    check_size(g, u, "jump_measure");
    check_size(g, v, "jump_measure");
    Vector out = Vector::Zero(g.size());
    for_each_pair(g, [&](Index x, Index y, double j) { out(x) += j * (u(x) - u(y)) * (v(x) - v(y)); });
    return out;
}

SparseMatrix gamma_matrix(const GraphForm& g, const VectorRef& u, const VectorRef& v) {
    check_size(g, u, "gamma_matrix");
    check_size(g, v, "gamma_matrix");
    SparseMatrix out = g.jump;
    for (Index c = 0; c < out.outerSize(); ++c)
        for (SparseMatrix::InnerIterator it(out, c); it; ++it) {
            const Index x = it.row(), y = it.col();
            it.valueRef() = x == y ? 0.0 : it.value() * (u(x) - u(y)) * (v(x) - v(y));
        }
    return out;
}

double gamma_integral(const GraphForm& g, const PairWeight& f, const VectorRef& u, const VectorRef& v) {
    check_size(g, u, "gamma_integral");
    check_size(g, v, "gamma_integral");
    double sum = 0.0;
    for_each_pair(g, [&](Index x, Index y, double j) { sum += f(x, y) * j * (u(x) - u(y)) * (v(x) - v(y)); });
    return sum;
}

double gamma_integral(const GraphForm& g, const Matrix& f, const VectorRef& u, const VectorRef& v) {
    if (f.rows() != g.size() || f.cols() != g.size())
        throw std::invalid_argument("gamma_integral: weight table must be n x n");
    return gamma_integral(g, [&f](Index x, Index y) { return f(x, y); }, u, v);
}

IdentityResidual leibniz_residual(const GraphForm& g, const PairWeight& f, const VectorRef& u, const VectorRef& v,
                                  const VectorRef& w) {
    check_size(g, u, "leibniz_residual");
    check_size(g, v, "leibniz_residual");
    check_size(g, w, "leibniz_residual");
    double lhs = 0.0, first = 0.0, second = 0.0, scale = 0.0;
    for_each_pair(g, [&](Index x, Index y, double j) {
        const double fj = f(x, y) * j;
        const double dw = w(x) - w(y);
        const double a = fj * (u(x) * v(x) - u(y) * v(y)) * dw;
        const double b = fj * u(x) * (v(x) - v(y)) * dw;
        const double c = fj * v(y) * (u(x) - u(y)) * dw;
        lhs += a;
        first += b;
        second += c;
        scale += std::abs(a) + std::abs(b) + std::abs(c);
    });
    return {std::abs(lhs - first - second), scale};
}

CapacityResult capacity(const GraphForm& g, const VertexSet& set) {
    if (set.empty()) throw std::invalid_argument("capacity: the set must be nonempty");
    const Index n = g.size();
    std::vector<char> fixed(n, 0);
    for (Index x : set) {
        if (x < 0 || x >= n) throw std::invalid_argument("capacity: vertex out of range");
        fixed[x] = 1;
    }
    std::vector<Index> position(n, -1);
    Index free_count = 0;
    for (Index x = 0; x < n; ++x)
        if (!fixed[x]) position[x] = free_count++;

    CapacityResult result;
    result.minimizer = Vector::Ones(n);
    if (free_count > 0) {
        // (L + M)_FF v_F = -(L + M)_FA 1_A
        const SparseMatrix mass_matrix(g.mass.asDiagonal());
        const SparseMatrix system = form_matrix(g) + mass_matrix;
        std::vector<Eigen::Triplet<double>> t;
        Vector rhs = Vector::Zero(free_count);
        for (Index c = 0; c < system.outerSize(); ++c)
            for (SparseMatrix::InnerIterator it(system, c); it; ++it) {
                const Index r = it.row();
                if (fixed[r]) continue;
                if (fixed[c]) rhs(position[r]) -= it.value();
                else t.emplace_back(position[r], position[c], it.value());
            }
        SparseMatrix reduced(free_count, free_count);
        reduced.setFromTriplets(t.begin(), t.end());
        Eigen::SimplicialLDLT<SparseMatrix> solver(reduced);
        if (solver.info() != Eigen::Success) throw std::runtime_error("capacity: factorisation failed");
        const Vector free_values = solver.solve(rhs);
        for (Index x = 0; x < n; ++x)
            if (!fixed[x]) result.minimizer(x) = free_values(position[x]);
    }
    result.value = energy(g, result.minimizer) + norm_sq(g, result.minimizer);
    return result;
}

NormalContraction NormalContraction::clamp(double lo, double hi) {
    if (!(lo <= 0.0 && 0.0 <= hi)) throw std::invalid_argument("clamp contraction requires lo <= 0 <= hi");
    return {Kind::clamp, lo, hi};
}

double NormalContraction::operator()(double t) const {
    switch (kind) {
        case Kind::identity: return t;
        case Kind::clamp:
        case Kind::unit_clamp: return std::clamp(t, lo, hi);
        case Kind::absolute: return std::abs(t);
    }
    return t;
}

Vector NormalContraction::apply(const VectorRef& u) const {
    return u.unaryExpr([this](double t) { return (*this)(t); });
}

IdentityResidual contraction_deficit(const GraphForm& g, const VectorRef& u, const NormalContraction& t) {
    const double before = energy(g, u);
    const double after = energy(g, t.apply(u));
    return {before - after, std::abs(before) + std::abs(after)};
}

ProductBound product_energy_bound(const GraphForm& g, const VectorRef& u, const VectorRef& v) {
    const Vector uv = u.cwiseProduct(v);
    const double us = u.cwiseAbs().maxCoeff(), vs = v.cwiseAbs().maxCoeff();
    ProductBound b;
    b.product_energy = energy(g, uv);
    b.sharp_rhs = us * us * energy(g, v) + vs * vs * energy(g, u);
    b.doubled_rhs = 2.0 * b.sharp_rhs;
    return b;
}

SparseMatrix jump_laplacian(const GraphForm& g) {
    SparseMatrix d(g.size(), g.size());
    const Vector deg = 2.0 * degree_measure(g);
    std::vector<Eigen::Triplet<double>> t;
    for (Index x = 0; x < g.size(); ++x) t.emplace_back(x, x, deg(x));
    d.setFromTriplets(t.begin(), t.end());
    return d - 2.0 * g.jump;
}

SparseMatrix form_matrix(const GraphForm& g, const VectorRef& nu) {
    check_size(g, nu, "form_matrix");
    SparseMatrix d(g.size(), g.size());
    const Vector diag = g.killing + nu;
    std::vector<Eigen::Triplet<double>> t;
    for (Index x = 0; x < g.size(); ++x) t.emplace_back(x, x, diag(x));
    d.setFromTriplets(t.begin(), t.end());
    return jump_laplacian(g) + d;
}

SparseMatrix form_matrix(const GraphForm& g) { return form_matrix(g, zero_potential(g)); }

Vector generator_apply(const GraphForm& g, const VectorRef& nu, const VectorRef& u) {
    check_size(g, u, "generator_apply");
    check_size(g, nu, "generator_apply");
    Vector out = ((g.killing + nu).array() * u.array()).matrix();
    for_each_pair(g, [&](Index x, Index y, double j) { out(x) += 2.0 * j * (u(x) - u(y)); });
    return out.cwiseQuotient(g.mass);
}

Vector generator_apply(const GraphForm& g, const VectorRef& u) { return generator_apply(g, zero_potential(g), u); }

Matrix generator_matrix(const GraphForm& g, const VectorRef& nu) {
    const Vector s = g.mass.cwiseSqrt().cwiseInverse();
    Matrix h = Matrix(form_matrix(g, nu));
    return s.asDiagonal() * h * s.asDiagonal();
}

Matrix generator_matrix(const GraphForm& g) { return generator_matrix(g, zero_potential(g)); }

}  // namespace dflab
