#include "dflab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace dflab {

namespace {

void check_size(const GraphForm& g, const VectorRef& u, const char* what) {
    if (u.size() != g.size())
        throw std::invalid_argument(std::string(what) + ": vector of size " + std::to_string(u.size()) +
                                    " on a window of size " + std::to_string(g.size()));
}

void require_interior_support(const GraphForm& g, const VectorRef& f, const char* what) {
    for (Index x = 0; x < g.size(); ++x)
        if (f(x) != 0.0 && !g.interior[x])
            throw std::invalid_argument(std::string(what) + ": support leaks out of the interior at vertex " +
                                        std::to_string(x));
}

Vector sorted_eigenvalues(const Matrix& a) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(a, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw std::runtime_error("eigensolver failed");
    return solver.eigenvalues();
}

Matrix principal_submatrix(const Matrix& a, const VertexSet& vertices) {
    const Index k = static_cast<Index>(vertices.size());
    Matrix out(k, k);
    for (Index i = 0; i < k; ++i)
        for (Index j = 0; j < k; ++j) out(i, j) = a(vertices[i], vertices[j]);
    return out;
}

double lattice_weight(const GraphForm& g) {
    if (!g.has_coords()) throw std::invalid_argument("waves need a lattice model");
    double w = 0.0;
    for (Index c = 0; c < g.jump.outerSize(); ++c)
        for (SparseMatrix::InnerIterator it(g.jump, c); it; ++it) w = std::max(w, it.value());
    return w;
}

template <typename Fn>
Wave product_wave(const GraphForm& g, const std::vector<double>& angles, Fn&& profile, double lambda_per_unit) {
    if (static_cast<Index>(angles.size()) != g.dimension())
        throw std::invalid_argument("wave: one angle per lattice dimension expected");
    Wave w;
    w.u = Vector::Ones(g.size());
    for (Index x = 0; x < g.size(); ++x)
        for (Index i = 0; i < g.dimension(); ++i) w.u(x) *= profile(angles[i] * g.coords(x, i));
    w.lambda = 4.0 * lattice_weight(g) * lambda_per_unit / g.mass(0);
    return w;
}

double mass_of(const GraphForm& g, const VectorRef& u, const VertexSet& set) {
    double sum = 0.0;
    for (Index x : set) sum += g.mass(x) * u(x) * u(x);
    return sum;
}

bool inside_interior(const GraphForm& g, const VertexSet& set) {
    return std::all_of(set.begin(), set.end(), [&](Index x) { return static_cast<bool>(g.interior[x]); });
}

Vector cutoff_or_zero(const PseudoMetric& rho, const VertexSet& set, double a) {
    if (set.empty()) return Vector::Zero(rho.size());
    return cutoff(rho, set, a);
}

}  // namespace

// ---------------------------------------------------------------------------
// PerturbedForm

PerturbedForm PerturbedForm::unperturbed(GraphForm g) {
    const Index n = g.size();
    return {std::move(g), Vector::Zero(n), Vector::Zero(n), std::nullopt};
}

Vector PerturbedForm::nu() const { return nu_plus - nu_minus; }

BoundCertificate PerturbedForm::effective_certificate() const {
    if (certificate) {
        if (!(certificate->q > 0.0 && certificate->q < 1.0)) throw std::invalid_argument("certificate: q must lie in (0, 1)");
        if (!(certificate->c_q >= 0.0)) throw std::invalid_argument("certificate: c_q must be nonnegative");
        return *certificate;
    }
    if (nu_minus.size() > 0 && nu_minus.cwiseAbs().maxCoeff() > 0.0)
        throw std::invalid_argument("negative perturbation without a form-bound certificate");
    return {};
}

// ---------------------------------------------------------------------------
// Spectra

SparseMatrix symmetric_generator(const GraphForm& g, const VectorRef& nu) {
    const Vector s = g.mass.cwiseSqrt().cwiseInverse();
    return s.asDiagonal() * form_matrix(g, nu) * s.asDiagonal();
}

Vector spectrum(const GraphForm& g, const VectorRef& nu) {
    if (g.size() > kDenseLimit) throw std::invalid_argument("spectrum: window exceeds the dense limit; use extremes");
    return sorted_eigenvalues(generator_matrix(g, nu));
}

Vector spectrum(const GraphForm& g) { return spectrum(g, zero_potential(g)); }

Vector restricted_spectrum(const GraphForm& g, const VectorRef& nu, const VertexSet& vertices) {
    if (vertices.empty()) throw std::invalid_argument("restricted_spectrum: empty vertex set");
    if (static_cast<Index>(vertices.size()) > kDenseLimit) throw std::invalid_argument("restricted_spectrum: too large");
    return sorted_eigenvalues(principal_submatrix(generator_matrix(g, nu), vertices));
}

ExtremeEigenvalues extreme_eigenvalues(const GraphForm& g, const VectorRef& nu, int steps, std::uint64_t seed) {
    const SparseMatrix a = symmetric_generator(g, nu);
    const Index n = a.rows();
    const int k = static_cast<int>(std::min<Index>(steps, n));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Matrix basis(n, k);
    Vector alpha = Vector::Zero(k), beta = Vector::Zero(k);
    Vector q = Vector::NullaryExpr(n, [&]() { return normal(rng); });
    q.normalize();
    int used = 0;
    for (int i = 0; i < k; ++i) {
        basis.col(i) = q;
        Vector w = a * q;
        alpha(i) = q.dot(w);
        // full reorthogonalisation, twice for stability
        for (int pass = 0; pass < 2; ++pass) w -= basis.leftCols(i + 1) * (basis.leftCols(i + 1).transpose() * w);
        used = i + 1;
        const double b = w.norm();
        if (i + 1 == k || b < 1e-12) break;
        beta(i) = b;
        q = w / b;
    }
    Matrix t = Matrix::Zero(used, used);
    for (int i = 0; i < used; ++i) {
        t(i, i) = alpha(i);
        if (i + 1 < used) t(i, i + 1) = t(i + 1, i) = beta(i);
    }
    const Vector ritz = sorted_eigenvalues(t);
    return {ritz(0), ritz(used - 1), used};
}

double distance_to_spectrum(const Vector& eigenvalues, double lambda) {
    if (eigenvalues.size() == 0) return kInfinity;
    return (eigenvalues.array() - lambda).abs().minCoeff();
}

FormBoundReport form_bound_check(const GraphForm& g, const VectorRef& nu_minus, double q, double c_q) {
    check_size(g, nu_minus, "form_bound_check");
    if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("form_bound_check: q must lie in (0, 1)");
    if (g.size() > kDenseLimit) throw std::invalid_argument("form_bound_check: window exceeds the dense limit");
    Matrix p = q * Matrix(form_matrix(g));
    p.diagonal() += c_q * g.mass - nu_minus;
    FormBoundReport r;
    r.min_eigenvalue = sorted_eigenvalues(p)(0);
    r.scale = std::max(1.0, p.cwiseAbs().maxCoeff());
    r.pass = r.min_eigenvalue >= -1e-10 * r.scale;
    return r;
}

double min_cq(const GraphForm& g, const VectorRef& nu_minus, double q) {
    check_size(g, nu_minus, "min_cq");
    if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("min_cq: q must lie in (0, 1)");
    const Vector s = g.mass.cwiseSqrt().cwiseInverse();
    Matrix p = -q * Matrix(form_matrix(g));
    p.diagonal() += nu_minus;
    const Matrix sym = s.asDiagonal() * p * s.asDiagonal();
    const Vector eig = sorted_eigenvalues(sym);
    return std::max(0.0, eig(eig.size() - 1));
}

// ---------------------------------------------------------------------------
// Generalised eigenfunctions

EigenCandidate gen_eigen_residual(const GraphForm& g, const VectorRef& nu, const VectorRef& u, double lambda) {
    check_size(g, u, "gen_eigen_residual");
    if (u.cwiseAbs().maxCoeff() == 0.0) throw std::invalid_argument("gen_eigen_residual: u must be nonzero");
    const Vector r = generator_apply(g, nu, u) - lambda * u;
    EigenCandidate c{u, lambda, 0.0, 0.0};
    double l2 = 0.0;
    for (Index x = 0; x < g.size(); ++x) {
        if (!g.interior[x]) continue;
        c.residual_sup = std::max(c.residual_sup, std::abs(r(x)));
        l2 += g.mass(x) * r(x) * r(x);
    }
    c.residual_l2 = std::sqrt(l2);
    return c;
}

Wave plane_wave(const GraphForm& g, const std::vector<double>& theta) {
    double sum = 0.0;
    for (double t : theta) sum += 1.0 - std::cos(t);
    return product_wave(g, theta, [](double t) { return std::cos(t); }, sum);
}

Wave cosh_wave(const GraphForm& g, const std::vector<double>& mu) {
    double sum = 0.0;
    for (double t : mu) sum += 1.0 - std::cosh(t);
    return product_wave(g, mu, [](double t) { return std::cosh(t); }, sum);
}

Wave perron_vector(const GraphForm& g, const VectorRef& nu) {
    const VertexSet inside = g.interior_vertices();
    if (inside.empty()) throw std::invalid_argument("perron_vector: empty interior");
    const Matrix sub = principal_submatrix(generator_matrix(g, nu), inside);
    Eigen::SelfAdjointEigenSolver<Matrix> solver(sub);
    if (solver.info() != Eigen::Success) throw std::runtime_error("eigensolver failed");
    Vector v = solver.eigenvectors().col(0);
    if (v.sum() < 0.0) v = -v;
    Wave w;
    w.lambda = solver.eigenvalues()(0);
    w.u = Vector::Zero(g.size());
    for (std::size_t i = 0; i < inside.size(); ++i) w.u(inside[i]) = v(static_cast<Index>(i)) / std::sqrt(g.mass(inside[i]));
    return w;
}

// ---------------------------------------------------------------------------
// Ground state transform

GstVariant gst_variant_from_string(const std::string& name) {
    if (name == "inverse") return GstVariant::inverse;
    if (name == "multiplicative") return GstVariant::multiplicative;
    throw std::invalid_argument("unknown ground state transform variant: " + name);
}

std::string to_string(GstVariant variant) {
    return variant == GstVariant::inverse ? "inverse" : "multiplicative";
}

GstReport gst_check(const GraphForm& g, const VectorRef& nu, const VectorRef& u, double lambda, const VectorRef& phi,
                    const VectorRef& psi, GstVariant variant) {
    check_size(g, u, "gst_check");
    check_size(g, phi, "gst_check");
    check_size(g, psi, "gst_check");
    require_interior_support(g, phi, "gst_check");
    require_interior_support(g, psi, "gst_check");

    Vector left_a, left_b, diff_a, diff_b;
    if (variant == GstVariant::inverse) {
        if ((u.array() == 0.0).any()) throw std::invalid_argument("gst_check: u has zeros");
        left_a = phi;
        left_b = psi;
        diff_a = phi.cwiseQuotient(u);
        diff_b = psi.cwiseQuotient(u);
    } else {
        left_a = u.cwiseProduct(phi);
        left_b = u.cwiseProduct(psi);
        diff_a = phi;
        diff_b = psi;
    }
    GstReport r;
    const double form = energy(g, nu, left_a, left_b);
    const double shift = lambda * inner(g, left_a, left_b);
    r.lhs = form - shift;
    r.scale = std::abs(form) + std::abs(shift);
    for (Index c = 0; c < g.jump.outerSize(); ++c)
        for (SparseMatrix::InnerIterator it(g.jump, c); it; ++it) {
            const Index x = it.row(), y = it.col();
            if (x == y) continue;
            const double term = u(x) * u(y) * it.value() * (diff_a(x) - diff_a(y)) * (diff_b(x) - diff_b(y));
            r.rhs += term;
            r.scale += std::abs(term);
        }
    r.residual = std::abs(r.lhs - r.rhs);
    return r;
}

PositiveSolutionReport allegretto_piepenbrink(const GraphForm& g, const VectorRef& nu, const VectorRef& u) {
    check_size(g, u, "allegretto_piepenbrink");
    const VertexSet inside = g.interior_vertices();
    if (inside.empty()) throw std::invalid_argument("allegretto_piepenbrink: empty interior");
    for (Index x = 0; x < g.size(); ++x)
        if (u(x) < 0.0 || (g.interior[x] && !(u(x) > 0.0)))
            throw std::invalid_argument("allegretto_piepenbrink: u must be positive on the interior");
    const Vector hu = generator_apply(g, nu, u);
    PositiveSolutionReport r;
    r.lambda_lo = kInfinity;
    r.lambda_hi = -kInfinity;
    for (Index x : inside) {
        const double ratio = hu(x) / u(x);
        r.lambda_lo = std::min(r.lambda_lo, ratio);
        r.lambda_hi = std::max(r.lambda_hi, ratio);
    }
    r.lambda_min = restricted_spectrum(g, nu, inside)(0);
    r.margin = r.lambda_min - r.lambda_lo;
    const double scale = std::max({1.0, std::abs(r.lambda_lo), std::abs(r.lambda_min)});
    r.pass = r.margin >= -1e-10 * scale;
    return r;
}

// ---------------------------------------------------------------------------
// Caccioppoli and Shnol

double caccioppoli_constant(double lambda, double q, double c_q) {
    if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("caccioppoli_constant: q must lie in (0, 1)");
    const double top = std::max(q, 1.0 - q);
    const double split = (1.0 - q) / (8.0 * top * top);
    return 2.0 / (1.0 - q) * std::max(std::max(lambda + c_q, 0.0), q + 1.0 / (4.0 * split));
}

namespace {

BoundCertificate verified_certificate(const PerturbedForm& form) {
    const BoundCertificate cert = form.effective_certificate();
    const Vector nu_minus = form.nu_minus.size() ? form.nu_minus : zero_potential(form.base);
    if (nu_minus.cwiseAbs().maxCoeff() > 0.0 && !form_bound_check(form.base, nu_minus, cert.q, cert.c_q).pass)
        throw std::invalid_argument("form-bound certificate does not hold for the negative perturbation");
    return cert;
}

}  // namespace

CaccioppoliReport caccioppoli(const PerturbedForm& form, const VectorRef& u, double lambda, const VectorRef& eta) {
    const GraphForm& g = form.base;
    check_size(g, u, "caccioppoli");
    check_size(g, eta, "caccioppoli");
    require_interior_support(g, eta, "caccioppoli");
    const BoundCertificate cert = verified_certificate(form);
    const Vector nu = form.nu();

    CaccioppoliReport r;
    const Vector test = u.cwiseProduct(eta.cwiseAbs2());
    const double form_value = energy(g, nu, u, test);
    const double shift = lambda * inner(g, u, test);
    r.precondition_gap = form_value - shift;
    // magnitude of the summands, so that cancellation does not shrink the tolerance
    const SparseMatrix a = form_matrix(g, nu).cwiseAbs();
    const double scale = u.cwiseAbs().dot(a * test.cwiseAbs()) +
                         std::abs(lambda) * g.mass.dot(u.cwiseProduct(test).cwiseAbs());
    if (r.precondition_gap > 1e-9 * std::max(scale, 1e-300))
        throw std::domain_error("caccioppoli: h(u, u eta^2) <= lambda (u, u eta^2) fails");

    const Vector mu_u = jump_measure(g, u);
    const Vector mu_eta = jump_measure(g, eta);
    r.lhs = eta.cwiseAbs2().dot(mu_u);
    r.norm_term = norm_sq(g, u.cwiseProduct(eta));
    r.eta_term = u.cwiseAbs2().dot(mu_eta);
    r.q = cert.q;
    r.c_q = cert.c_q;
    const double top = std::max(cert.q, 1.0 - cert.q);
    r.split = (1.0 - cert.q) / (8.0 * top * top);
    r.constant = caccioppoli_constant(lambda, cert.q, cert.c_q);
    r.rhs = r.constant * (r.norm_term + r.eta_term);
    r.pass = r.lhs <= r.rhs * (1.0 + 1e-12) + 1e-300;
    return r;
}

double shnol_constant(double a, double s, double cacc) {
    if (!(a > 0.0 && s > 0.0)) throw std::invalid_argument("shnol_constant: a and s must be positive");
    return (2.0 + 4.0 / s) * (2.0 + 4.0 / s) + 4.0 * cacc / (a * a);
}

ShnolReport shnol_bound(const PerturbedForm& form, const PseudoMetric& rho, const VectorRef& u, double lambda,
                        const VertexSet& set, double a, double s, const VectorRef& v) {
    const GraphForm& g = form.base;
    check_size(g, u, "shnol_bound");
    check_size(g, v, "shnol_bound");
    if (set.empty()) throw std::invalid_argument("shnol_bound: empty set");
    if (!inside_interior(g, ball(rho, set, 2.0 * a + s)))
        throw std::invalid_argument("shnol_bound: B_{2a+s}(E) does not fit inside the interior");
    const BoundCertificate cert = verified_certificate(form);
    const Vector nu = form.nu();

    const Vector eta1 = cutoff(rho, set, a);
    const Vector eta2 = cutoff_or_zero(rho, annulus(rho, set, a + s), a);
    const Vector test = u.cwiseProduct(eta1.cwiseAbs2());

    ShnolReport r;
    const double pairing = energy(g, nu, test, v) - lambda * inner(g, test, v);
    r.lhs = pairing * pairing;
    const double energy_v = energy(g, v);
    const double norm_v = norm_sq(g, v);
    r.energy_v = energy_v + norm_v;
    const Vector u2 = u.cwiseAbs2();
    r.cutoff_term = u2.dot(jump_measure(g, eta1));
    r.annulus_cutoff_term = u2.dot(jump_measure(g, eta2));
    r.annulus_mass = mass_of(g, u, annulus(rho, set, 2.0 * a + s));
    r.caccioppoli_constant = caccioppoli_constant(lambda, cert.q, cert.c_q);

    r.cauchy_bound = 2.0 * std::sqrt(energy_v * r.cutoff_term);
    const double eta2_mass = norm_sq(g, u.cwiseProduct(eta2));
    r.short_bound = 2.0 / a * std::sqrt(norm_v * r.caccioppoli_constant * (eta2_mass + r.annulus_cutoff_term));
    r.long_bound = 4.0 / s * std::sqrt(norm_v * r.cutoff_term);

    r.constant = shnol_constant(a, s, r.caccioppoli_constant);
    r.rhs = r.constant * r.energy_v * (r.cutoff_term + r.annulus_cutoff_term + r.annulus_mass);
    r.pass = r.lhs <= r.rhs * (1.0 + 1e-9) + 1e-300;
    return r;
}

ShnolRatioReport shnol_ratio(const PerturbedForm& form, const PseudoMetric& rho, const VectorRef& u, double lambda,
                             const std::vector<VertexSet>& shells, double a, double s, double threshold,
                             const Vector* window_spectrum) {
    const GraphForm& g = form.base;
    check_size(g, u, "shnol_ratio");
    ShnolRatioReport r;
    r.threshold = threshold;
    const Vector u2 = u.cwiseAbs2();
    for (std::size_t i = 0; i < shells.size(); ++i) {
        const VertexSet& set = shells[i];
        if (set.empty() || !inside_interior(g, ball(rho, set, 2.0 * a + s))) continue;
        const double bulk = mass_of(g, u, set);
        if (!(bulk > 0.0)) continue;
        const Vector eta1 = cutoff(rho, set, a);
        const Vector eta2 = cutoff_or_zero(rho, annulus(rho, set, a + s), a);
        const double general = u2.dot(jump_measure(g, eta1)) + u2.dot(jump_measure(g, eta2)) +
                               mass_of(g, u, annulus(rho, set, 2.0 * a + s));
        r.n.push_back(static_cast<int>(i) + 1);
        r.bulk.push_back(bulk);
        r.finite_ratio.push_back(mass_of(g, u, annulus(rho, set, 2.0 * s + 2.0 * a)) / bulk);
        r.general_ratio.push_back(general / bulk);
    }
    if (r.n.empty()) throw std::invalid_argument("shnol_ratio: no admissible n");

    std::vector<double> logs, positives;
    for (std::size_t i = 0; i < r.n.size(); ++i)
        if (r.finite_ratio[i] > 0.0) {
            logs.push_back(std::log(static_cast<double>(r.n[i])));
            positives.push_back(r.finite_ratio[i]);
        }
    const double last = r.finite_ratio.back();
    bool decreasing = last == 0.0;
    if (!decreasing && positives.size() >= 2) {
        r.fitted_slope = fit_log_slope(logs, positives);
        decreasing = r.fitted_slope < 0.0;
    }
    r.in_spectrum = decreasing && last < threshold;
    r.verdict = r.in_spectrum ? "in spectrum" : "inconclusive";
    if (window_spectrum) r.distance = distance_to_spectrum(*window_spectrum, lambda);
    return r;
}

bool decays_to_zero(const std::vector<double>& values) {
    if (values.size() < 3) return false;
    const double top = *std::max_element(values.begin(), values.end());
    if (!(values.back() <= 0.01 * top)) return false;
    for (std::size_t i = values.size() / 2 + 1; i < values.size(); ++i)
        if (values[i] > values[i - 1]) return false;
    return true;
}

ConditionCReport condition_c(const GraphForm& g, const PseudoMetric& rho, const VertexSet& first, double a, double s,
                             const Vector* u) {
    if (!(a > 0.0 && s >= 0.0)) throw std::invalid_argument("condition_c: need a > 0 and s >= 0");
    if (first.empty() || !inside_interior(g, first)) throw std::invalid_argument("shells exhaust window");
    ConditionCReport r;
    ShellDecomposition& d = r.decomposition;
    d.k = 2.0 * s + 2.0 * a;
    VertexSet current = first;
    std::sort(current.begin(), current.end());
    d.sets.push_back(current);
    while (true) {
        VertexSet next = ball(rho, current, d.k);
        if (next.size() == current.size() || !inside_interior(g, next)) break;
        d.sets.push_back(next);
        current = std::move(next);
    }
    if (d.sets.size() < 3) throw std::invalid_argument("shells exhaust window");

    d.shells.push_back(d.sets.front());
    for (std::size_t i = 1; i < d.sets.size(); ++i) {
        VertexSet shell;
        std::set_difference(d.sets[i].begin(), d.sets[i].end(), d.sets[i - 1].begin(), d.sets[i - 1].end(),
                            std::back_inserter(shell));
        d.shells.push_back(std::move(shell));
    }
    d.weight = Vector::Zero(g.size());
    for (std::size_t i = 0; i < d.shells.size(); ++i) {
        double mass = 0.0;
        for (Index x : d.shells[i]) mass += g.mass(x);
        r.shell_mass.push_back(mass);
        const double n = static_cast<double>(i + 1);
        for (Index x : d.shells[i]) d.weight(x) = mass > 0.0 ? 1.0 / (n * std::sqrt(mass)) : 0.0;
    }
    for (double gamma : r.gammas) {
        std::vector<double> row;
        for (std::size_t i = 0; i < r.shell_mass.size(); ++i)
            row.push_back(r.shell_mass[i] * std::exp(-gamma * static_cast<double>(i + 1)));
        r.decays.push_back(decays_to_zero(row));
        r.decay.push_back(std::move(row));
    }
    for (std::size_t i = 0; i + 1 < d.sets.size(); ++i) {
        const VertexSet outer = set_union(d.shells[i], d.shells[i + 1]);
        r.annulus_in_shells.push_back(is_subset(annulus(rho, d.sets[i], d.k), outer));
    }
    if (u) {
        check_size(g, *u, "condition_c");
        double sum = 0.0;
        for (const VertexSet& shell : d.shells) {
            for (Index x : shell) sum += g.mass(x) * std::pow(d.weight(x) * (*u)(x), 2);
            r.weighted_partial_sums.push_back(sum);
        }
    }
    return r;
}

}  // namespace dflab
