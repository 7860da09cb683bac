#include <doctest.h>

#include <numbers>
#include <numeric>
#include <random>

#include "dflab/energy.hpp"
#include "dflab/spectral.hpp"
#include "oracles.hpp"

using namespace dflab;

namespace {

constexpr double kPi = std::numbers::pi;

GraphForm three_point() {
    ModelSpec s;
    s.kind = ModelKind::three_point;
    return build_model(s);
}

GraphForm lattice(int d, int r) {
    ModelSpec s;
    s.dimension = d;
    s.radius = r;
    return build_model(s);
}

Index at(const GraphForm& g, int x) { return g.find_coords(Eigen::VectorXi::Constant(1, x)); }

Vector cosh_profile(const GraphForm& g, double mu) {
    Vector u(g.size());
    for (Index x = 0; x < g.size(); ++x) u(x) = std::cosh(mu * g.coords(x, 0));
    return u;
}

Vector bump(const GraphForm& g, int radius, std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    Vector out = Vector::Zero(g.size());
    for (Index x = 0; x < g.size(); ++x)
        if (std::abs(g.coords(x, 0)) <= radius) out(x) = n(rng);
    return out;
}

/// Both sides of the ground state transform by direct pair enumeration.
std::pair<double, double> gst_oracle(const GraphForm& g, const Vector& nu, const Vector& u, double lambda,
                                     const Vector& phi, const Vector& psi) {
    const Vector a = u.cwiseProduct(phi), b = u.cwiseProduct(psi);
    double lhs = oracle::energy(g, a, b) - lambda * (g.mass.array() * a.array() * b.array()).sum();
    lhs += (nu.array() * a.array() * b.array()).sum();
    const Matrix j = oracle::dense_jump(g);
    double rhs = 0.0;
    for (Index x = 0; x < g.size(); ++x)
        for (Index y = 0; y < g.size(); ++y)
            if (x != y) rhs += u(x) * u(y) * j(x, y) * (phi(x) - phi(y)) * (psi(x) - psi(y));
    return {lhs, rhs};
}

}  // namespace

TEST_CASE("spectrum of small windows") {
    const Vector e = spectrum(three_point());
    CHECK(e(0) == doctest::Approx(0.0).scale(1.0));
    CHECK(e(1) == doctest::Approx(2.0));
    CHECK(e(2) == doctest::Approx(6.0));
    // characteristic polynomial t (t - 2)(t - 6) of rows (2,-2,0), (-2,4,-2), (0,-2,2)
    Matrix h(3, 3);
    h << 2, -2, 0, -2, 4, -2, 0, -2, 2;
    CHECK((oracle::h_matrix(three_point(), Vector::Zero(3)) - h).cwiseAbs().maxCoeff() == 0.0);
    for (double t : {0.0, 2.0, 6.0}) CHECK(std::abs((h - t * Matrix::Identity(3, 3)).determinant()) < 1e-12);

    ModelSpec p;
    p.kind = ModelKind::explicit_graph;
    p.masses = {1, 2, 0.5, 3, 1.5};
    p.killing = {0, 0.5, 0, 1, 0};
    p.edges = {{0, 1, 1.0}, {1, 2, 0.3}, {2, 3, 2.0}, {0, 3, 0.7}, {3, 4, 1.1}};
    const GraphForm g = build_model(p);
    const Vector nu = (Vector(5) << 0.1, -0.2, 0.0, 0.4, 0.3).finished();
    CHECK((spectrum(g, nu) - oracle::eigenvalues(g, nu)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("lattice spectrum fills the band") {
    const GraphForm g = lattice(1, 200);
    const Vector e = spectrum(g);
    CHECK(e(0) >= -1e-12);
    CHECK(e(e.size() - 1) >= 7.99);
    CHECK(e(e.size() - 1) <= 8.0 + 1e-12);
    // dispersion oracle: every lambda(theta) is within a small gap of the window spectrum
    for (int i = 0; i <= 50; ++i) CHECK(distance_to_spectrum(e, 4.0 * (1.0 - std::cos(kPi * i / 50.0))) < 0.05);
}

TEST_CASE("a constant potential shifts the spectrum") {
    const GraphForm g = lattice(2, 5);
    const double c = 0.37;
    const Vector base = spectrum(g);
    const Vector shifted = spectrum(g, Vector::Constant(g.size(), c));
    CHECK((shifted - base - Vector::Constant(g.size(), c)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("Lanczos extremes agree with the dense solver") {
    const GraphForm g = lattice(2, 12);
    const Vector nu = Vector::LinSpaced(g.size(), -0.3, 0.5);
    const Vector e = spectrum(g, nu);
    const ExtremeEigenvalues ex = extreme_eigenvalues(g, nu, 300, 3);
    CHECK(ex.min == doctest::Approx(e(0)).epsilon(1e-8).scale(1.0));
    CHECK(ex.max == doctest::Approx(e(e.size() - 1)).epsilon(1e-8));
}

TEST_CASE("form bound certificates") {
    const GraphForm g = three_point();
    CHECK(min_cq(g, Vector::Zero(3), 0.5) == doctest::Approx(0.0).scale(1.0));
    CHECK(form_bound_check(g, Vector::Zero(3), 0.5, 0.0).pass);

    ModelSpec p;
    p.kind = ModelKind::explicit_graph;
    p.masses = {1, 2, 0.5};
    p.edges = {{0, 1, 1.0}, {1, 2, 1.0}};
    const GraphForm h = build_model(p);
    for (double q : {0.1, 0.5, 0.9}) CHECK(min_cq(h, 0.7 * h.mass, q) == doctest::Approx(0.7));

    const Vector nm = (Vector(3) << 0, 3, 0).finished();
    const double cq = min_cq(g, nm, 0.5);
    // random-vector oracle for sup (nu_minus(u) - q E(u)) / |u|^2
    std::mt19937_64 rng(6);
    std::normal_distribution<double> n;
    double best = -kInfinity;
    for (int i = 0; i < 1000000; ++i) {
        const Vector u = Vector::NullaryExpr(3, [&] { return n(rng); });
        const double value = (nm.dot(u.cwiseAbs2()) - 0.5 * oracle::energy(g, u)) / u.squaredNorm();
        best = std::max(best, value);
    }
    CHECK(best <= cq + 1e-12);
    CHECK(best >= cq - 1e-3);
    CHECK(form_bound_check(g, nm, 0.5, cq).pass);
    CHECK_FALSE(form_bound_check(g, nm, 0.5, cq - 1e-3).pass);

    PerturbedForm f = PerturbedForm::unperturbed(g);
    CHECK(f.effective_certificate().q == 0.01);
    CHECK(f.effective_certificate().c_q == 0.0);
    f.nu_minus = nm;
    CHECK_THROWS(f.effective_certificate());
}

TEST_CASE("generalised eigenfunctions") {
    const GraphForm g = lattice(1, 30);
    const Vector nu = zero_potential(g);

    const Wave w = plane_wave(g, {kPi / 5.0});
    CHECK(w.lambda == doctest::Approx(4.0 * (1.0 - std::cos(kPi / 5.0))));
    CHECK(gen_eigen_residual(g, nu, w.u, w.lambda).residual_sup <= 1e-10);

    const Vector c = cosh_profile(g, 0.3);
    const double lc = 4.0 * (1.0 - std::cosh(0.3));
    CHECK(cosh_wave(g, {0.3}).lambda == doctest::Approx(lc));
    CHECK(gen_eigen_residual(g, nu, c, lc).residual_sup <= 1e-8 * c.cwiseAbs().maxCoeff());
    // pointwise oracle on interior vertices
    const Vector hc = oracle::apply_h(g, nu, c);
    for (Index x : g.interior_vertices()) CHECK(std::abs(hc(x) - lc * c(x)) <= 1e-8 * c.cwiseAbs().maxCoeff());

    const Wave flat = plane_wave(g, {0.0});
    CHECK(flat.lambda == 0.0);
    CHECK((flat.u.array() == 1.0).all());

    const Wave top = plane_wave(g, {kPi});
    CHECK(top.lambda == doctest::Approx(8.0));
    for (Index x = 0; x < g.size(); ++x) CHECK(std::abs(std::abs(top.u(x)) - 1.0) < 1e-12);
    CHECK(gen_eigen_residual(g, nu, top.u, top.lambda).residual_sup <= 1e-10);

    const GraphForm g2 = lattice(2, 8);
    const Wave w2 = plane_wave(g2, {kPi / 3.0, kPi / 4.0});
    CHECK(w2.lambda == doctest::Approx(2.0 + 4.0 * (1.0 - std::sqrt(2.0) / 2.0)));
    CHECK(gen_eigen_residual(g2, zero_potential(g2), w2.u, w2.lambda).residual_sup <= 1e-10);

    // exact eigenvector of the whole window
    const GraphForm t = three_point();
    CHECK(gen_eigen_residual(t, Vector::Zero(3), (Vector(3) << 1, 0, -1).finished(), 2.0).residual_sup < 1e-14);
}

TEST_CASE("ground state transform") {
    SUBCASE("constant u") {
        const GraphForm g = lattice(1, 6);
        std::mt19937_64 rng(1);
        const Vector phi = bump(g, 5, rng), psi = bump(g, 5, rng);
        for (GstVariant v : {GstVariant::inverse, GstVariant::multiplicative}) {
            const GstReport r = gst_check(g, zero_potential(g), Vector::Ones(g.size()), 0.0, phi, psi, v);
            CHECK(r.relative() <= 1e-14);
            CHECK(r.lhs == doctest::Approx(oracle::energy(g, phi, psi)));
        }
    }
    SUBCASE("three point Perron vector") {
        const GraphForm g = three_point();
        const Vector nu = (Vector(3) << 0.5, 0.0, 1.0).finished();
        const Wave w = perron_vector(g, nu);
        std::mt19937_64 rng(2);
        std::normal_distribution<double> n;
        for (int i = 0; i < 20; ++i) {
            const Vector phi = Vector::NullaryExpr(3, [&] { return n(rng); });
            const Vector psi = Vector::NullaryExpr(3, [&] { return n(rng); });
            const GstReport r = gst_check(g, nu, w.u, w.lambda, phi, psi, GstVariant::multiplicative);
            CHECK(r.relative() <= 1e-9);
            const auto [lhs, rhs] = gst_oracle(g, nu, w.u, w.lambda, phi, psi);
            CHECK(r.lhs == doctest::Approx(lhs).epsilon(1e-12));
            CHECK(r.rhs == doctest::Approx(rhs).epsilon(1e-12));
            CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
            CHECK(gst_check(g, nu, w.u, w.lambda, phi.cwiseProduct(w.u), psi.cwiseProduct(w.u), GstVariant::inverse)
                      .relative() <= 1e-9);
        }
    }
    SUBCASE("cosh solution on Z") {
        const GraphForm g = lattice(1, 30);
        const double mu = 0.2;
        const Vector u = cosh_profile(g, mu);
        const double lambda = 4.0 * (1.0 - std::cosh(mu));
        std::mt19937_64 rng(3);
        for (int i = 0; i < 20; ++i) {
            const Vector phi = bump(g, 10, rng), psi = bump(g, 10, rng);
            CHECK(gst_check(g, zero_potential(g), u, lambda, phi, psi, GstVariant::multiplicative).relative() <= 1e-8);
            CHECK(gst_check(g, zero_potential(g), u, lambda, phi, psi, GstVariant::inverse).relative() <= 1e-8);
            const auto [lhs, rhs] = gst_oracle(g, zero_potential(g), u, lambda, phi, psi);
            CHECK(lhs == doctest::Approx(rhs).epsilon(1e-8));
        }
    }
}

TEST_CASE("positive solutions bound the spectrum from below") {
    const GraphForm g = lattice(1, 20);
    const Wave p = perron_vector(g, zero_potential(g));
    const PositiveSolutionReport r = allegretto_piepenbrink(g, zero_potential(g), p.u);
    CHECK(r.pass);
    CHECK(r.lambda_lo == doctest::Approx(r.lambda_min).epsilon(1e-9));
    CHECK(r.lambda_hi == doctest::Approx(r.lambda_min).epsilon(1e-9));

    const PositiveSolutionReport one = allegretto_piepenbrink(g, zero_potential(g), Vector::Ones(g.size()));
    CHECK(one.pass);
    CHECK(one.lambda_lo <= one.lambda_min);

    const GraphForm l = lattice(1, 50);
    const PositiveSolutionReport c = allegretto_piepenbrink(l, zero_potential(l), cosh_profile(l, 0.2));
    CHECK(c.pass);
    CHECK(c.lambda_lo == doctest::Approx(4.0 * (1.0 - std::cosh(0.2))));
    CHECK(c.lambda_min >= 0.0);
    CHECK(c.lambda_lo <= c.lambda_min);
}

TEST_CASE("Caccioppoli inequality") {
    CHECK(caccioppoli_constant(0.0, 0.01, 0.0) ==
          doctest::Approx(2.0 / 0.99 * (0.01 + 8.0 * 0.99 * 0.99 / (4.0 * 0.99))));
    CHECK(caccioppoli_constant(100.0, 0.5, 1.0) == doctest::Approx(2.0 / 0.5 * 101.0));

    const GraphForm g = lattice(1, 100);
    const PseudoMetric rho = PseudoMetric::coordinate(g, 1.0 / std::sqrt(2.0));
    const PerturbedForm form = PerturbedForm::unperturbed(g);
    SUBCASE("constant u") {
        Vector u = Vector::Zero(g.size());
        for (Index x : g.interior_vertices()) u(x) = 1.0;
        const Vector eta = cutoff(rho, {at(g, 0)}, 5.0);
        const CaccioppoliReport r = caccioppoli(form, u, 0.0, eta);
        CHECK(r.lhs == 0.0);
        CHECK(r.pass);
    }
    SUBCASE("plane wave") {
        const Wave w = plane_wave(g, {kPi / 6.0});
        const Vector eta = cutoff(rho, {at(g, 0)}, 10.0 / std::sqrt(2.0));
        const CaccioppoliReport r = caccioppoli(form, w.u, w.lambda, eta);
        CHECK(r.pass);
        CHECK(r.lhs == doctest::Approx(eta.cwiseAbs2().dot(oracle::mu(g, w.u))).epsilon(1e-12));
        CHECK(r.eta_term == doctest::Approx(w.u.cwiseAbs2().dot(oracle::mu(g, eta))).epsilon(1e-12));
        CHECK(r.constant == doctest::Approx(caccioppoli_constant(w.lambda, 0.01, 0.0)));
    }
    SUBCASE("failed precondition") {
        const Wave w = plane_wave(g, {kPi / 6.0});
        const Vector eta = cutoff(rho, {at(g, 0)}, 10.0);
        CHECK_THROWS_AS(caccioppoli(form, w.u, w.lambda - 0.5, eta), std::domain_error);
    }
    SUBCASE("random interior eigenvectors") {
        const GraphForm s = lattice(1, 40);
        const PseudoMetric r = PseudoMetric::coordinate(s, 1.0 / std::sqrt(2.0));
        const VertexSet inside = s.interior_vertices();
        const Matrix h = oracle::h_matrix(s, zero_potential(s));
        Matrix sub(inside.size(), inside.size());
        for (std::size_t i = 0; i < inside.size(); ++i)
            for (std::size_t k = 0; k < inside.size(); ++k) sub(i, k) = h(inside[i], inside[k]);
        Eigen::SelfAdjointEigenSolver<Matrix> es(sub);
        std::mt19937_64 rng(200);
        std::uniform_int_distribution<Index> pick(0, static_cast<Index>(inside.size()) - 1);
        std::uniform_real_distribution<double> radius(0.3, 8.0);
        const PerturbedForm f = PerturbedForm::unperturbed(s);
        for (int i = 0; i < 200; ++i) {
            const Index e = pick(rng);
            Vector u = Vector::Zero(s.size());
            for (std::size_t k = 0; k < inside.size(); ++k) u(inside[k]) = es.eigenvectors()(k, e);
            Vector eta = cutoff(r, {inside[pick(rng)]}, radius(rng));
            for (Index x = 0; x < s.size(); ++x)
                if (!s.interior[x]) eta(x) = 0.0;
            CHECK(caccioppoli(f, u, es.eigenvalues()(e), eta).pass);
        }
    }
}

TEST_CASE("Shnol inequality") {
    const GraphForm g = lattice(1, 300);
    const double s = 1.0 / std::sqrt(2.0), a = 10.0 / std::sqrt(2.0);
    const PseudoMetric rho = PseudoMetric::coordinate(g, s);
    const PerturbedForm form = PerturbedForm::unperturbed(g);
    VertexSet e;
    for (Index x = 0; x < g.size(); ++x)
        if (std::abs(g.coords(x, 0)) <= 20) e.push_back(x);
    std::mt19937_64 rng(12);
    std::normal_distribution<double> n;
    Vector v = Vector::Zero(g.size());
    for (Index x : g.interior_vertices()) v(x) = n(rng);

    const Wave w = plane_wave(g, {0.8});
    const ShnolReport r = shnol_bound(form, rho, w.u, w.lambda, e, a, s, v);
    CHECK(r.pass);
    CHECK(r.constant == doctest::Approx(std::pow(2.0 + 4.0 / s, 2) + 4.0 * r.caccioppoli_constant / (a * a)));
    CHECK(std::abs(std::sqrt(r.lhs)) <= r.cauchy_bound + r.short_bound + r.long_bound);

    // v orthogonal in h - lambda to u eta^2
    const Vector eta = cutoff(rho, e, a);
    const Vector test = w.u.cwiseProduct(eta.cwiseAbs2());
    const Vector ht = generator_apply(g, test) - w.lambda * test;
    Vector v0 = v - (inner(g, ht, v) / inner(g, ht, ht)) * ht;
    const ShnolReport r0 = shnol_bound(form, rho, w.u, w.lambda, e, a, s, v0);
    CHECK(r0.lhs <= 1e-20 * r0.rhs);
    CHECK(r0.pass);

    // u vanishing on B_{2a+s}(E)
    Vector far = w.u;
    for (Index x : ball(rho, e, 2.0 * a + s)) far(x) = 0.0;
    const ShnolReport rf = shnol_bound(form, rho, far, w.lambda, e, a, s, v);
    CHECK(rf.lhs == 0.0);
    CHECK(rf.pass);

    CHECK(shnol_constant(1.0, 1.0, 0.0) == 36.0);
}

TEST_CASE("Shnol ratio verdicts") {
    const GraphForm g = lattice(1, 400);
    const double s = 1.0 / std::sqrt(2.0);
    const PseudoMetric rho = PseudoMetric::coordinate(g, s);
    const PerturbedForm form = PerturbedForm::unperturbed(g);
    std::vector<VertexSet> shells;
    for (int n = 1; n <= 78; ++n) {
        VertexSet set;
        for (Index x = 0; x < g.size(); ++x)
            if (std::abs(g.coords(x, 0)) <= 5 * n) set.push_back(x);
        shells.push_back(set);
    }
    const Vector eig = oracle::eigenvalues(g, zero_potential(g));

    const Wave w = plane_wave(g, {kPi / 7.0});
    const ShnolRatioReport in = shnol_ratio(form, rho, w.u, w.lambda, shells, s, s, 0.05, &eig);
    CHECK(in.verdict == "in spectrum");
    CHECK(in.distance <= 0.05);
    CHECK(in.finite_ratio.back() < 0.05);

    const Vector c = cosh_profile(g, 0.3);
    const ShnolRatioReport out = shnol_ratio(form, rho, c, 4.0 * (1.0 - std::cosh(0.3)), shells, s, s, 0.05, &eig);
    CHECK(out.verdict == "inconclusive");
    CHECK(out.distance >= 0.08);
    CHECK(*std::min_element(out.finite_ratio.begin(), out.finite_ratio.end()) > 0.5);

    // two leaves on one hub carry a finitely supported eigenvector
    ModelSpec spec;
    spec.kind = ModelKind::explicit_graph;
    spec.masses.assign(63, 1.0);
    for (int x = 0; x < 60; ++x) spec.edges.push_back({x, x + 1, 1.0});
    spec.edges.push_back({30, 61, 1.0});
    spec.edges.push_back({30, 62, 1.0});
    const GraphForm star = build_model(spec);
    const PseudoMetric hops = budget_metric(star, budgets_constant(star, 1.0));
    Vector u = Vector::Zero(star.size());
    u(61) = 1.0;
    u(62) = -1.0;
    CHECK((oracle::apply_h(star, zero_potential(star), u) - 2.0 * u).cwiseAbs().maxCoeff() == 0.0);
    std::vector<VertexSet> bs;
    for (int n = 1; n <= 6; ++n) bs.push_back(ball(hops, {30}, 4.0 * n));
    const ShnolRatioReport z = shnol_ratio(PerturbedForm::unperturbed(star), hops, u, 2.0, bs, 1.0, 1.0);
    CHECK(z.finite_ratio.back() == 0.0);
    CHECK(z.verdict == "in spectrum");
}

TEST_CASE("condition (C) shells") {
    const GraphForm g = lattice(1, 200);
    const double s = 1.0 / std::sqrt(2.0);
    const PseudoMetric rho = PseudoMetric::coordinate(g, s);
    const Wave w = plane_wave(g, {0.9});
    const ConditionCReport r = condition_c(g, rho, {at(g, 0)}, s, s, &w.u);
    CHECK(r.decomposition.k == doctest::Approx(2.0 * std::sqrt(2.0)));
    REQUIRE(r.shell_mass.size() >= 3);
    // B_k on the lattice reaches |x| <= 4, so each shell adds 4 points per side
    for (std::size_t i = 1; i < r.shell_mass.size(); ++i) CHECK(r.shell_mass[i] == 8.0);
    CHECK(r.decays[0]);
    for (bool b : r.annulus_in_shells) CHECK(b);
    // |w u|^2 <= sup|u|^2 sum 1/n^2
    double basel = 0.0;
    for (std::size_t n = 1; n <= r.shell_mass.size(); ++n) basel += 1.0 / (static_cast<double>(n) * n);
    CHECK(r.weighted_partial_sums.back() <= w.u.cwiseAbs2().maxCoeff() * basel * (1.0 + 1e-12));

    const GraphForm tiny = lattice(1, 3);
    CHECK_THROWS_WITH(condition_c(tiny, PseudoMetric::coordinate(tiny, s), {at(tiny, 0)}, s, s),
                      doctest::Contains("shells exhaust window"));
    CHECK(decays_to_zero({8, 8, 8, 8, 0.01}));
    CHECK_FALSE(decays_to_zero({8, 8, 8, 8, 8}));
}
