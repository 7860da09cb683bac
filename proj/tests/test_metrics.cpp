#include <doctest.h>

#include <numeric>
#include <random>

#include "dflab/energy.hpp"
#include "dflab/metrics.hpp"
#include "oracles.hpp"

using namespace dflab;

namespace {

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

GraphForm topo(int n) {
    ModelSpec s;
    s.kind = ModelKind::topo_example;
    s.radius = n;
    return build_model(s);
}

Index at(const GraphForm& g, int x) { return g.find_coords(Eigen::VectorXi::Constant(1, x)); }

// rho_1 = 1 on pairs containing vertex 3, rho_2 = 1 on pairs containing vertex 1
PseudoMetric rho1() {
    Matrix d(3, 3);
    d << 0, 0, 1, 0, 0, 1, 1, 1, 0;
    return PseudoMetric::table(d);
}

PseudoMetric rho2() {
    Matrix d(3, 3);
    d << 0, 1, 1, 1, 0, 0, 1, 0, 0;
    return PseudoMetric::table(d);
}

/// Budgets as an edge-length table for Floyd-Warshall (inf off the support).
Matrix budget_lengths(const EdgeBudgetSet& b) {
    const Index n = b.budgets.rows();
    Matrix d = Matrix::Constant(n, n, kInfinity);
    for (Index c = 0; c < b.budgets.outerSize(); ++c)
        for (SparseMatrix::InnerIterator it(b.budgets, c); it; ++it) d(it.row(), it.col()) = it.value();
    return d;
}

/// sup { f(x) - f(y) : f(z) - f(w) <= rho(z, w) } by Bellman-Ford on the
/// difference constraints of the Lipschitz polytope.
double lipschitz_sup(const Matrix& rho, Index x, Index y) {
    const Index n = rho.rows();
    Vector dist = Vector::Constant(n, kInfinity);
    dist(y) = 0.0;
    for (Index round = 0; round < n; ++round)
        for (Index w = 0; w < n; ++w)
            for (Index z = 0; z < n; ++z)
                if (dist(w) + rho(z, w) < dist(z)) dist(z) = dist(w) + rho(z, w);
    return dist(x);
}

}  // namespace

TEST_CASE("distance to a set, cutoffs and balls") {
    const GraphForm l = lattice(1, 10);
    const PseudoMetric rho = PseudoMetric::coordinate(l, 1.0 / std::sqrt(2.0));
    VertexSet all(l.size());
    std::iota(all.begin(), all.end(), 0);
    CHECK(distance_to_set(rho, all).cwiseAbs().maxCoeff() == 0.0);

    const Vector d0 = distance_to_set(rho, {at(l, 0)});
    for (Index x = 0; x < l.size(); ++x) CHECK(d0(x) == doctest::Approx(std::abs(l.coords(x, 0)) / std::sqrt(2.0)));

    const Vector t = distance_to_set(rho1(), {2});
    CHECK(t(0) == 1.0);
    CHECK(t(1) == 1.0);
    CHECK(t(2) == 0.0);

    const Vector eta = cutoff(rho, {at(l, 0)}, std::sqrt(2.0));
    CHECK(eta(at(l, 0)) == 1.0);
    CHECK(eta(at(l, 1)) == doctest::Approx(0.5));
    CHECK(eta(at(l, -1)) == doctest::Approx(0.5));
    CHECK(eta(at(l, 2)) == doctest::Approx(0.0).scale(1.0));
    CHECK(eta(at(l, -2)) == doctest::Approx(0.0).scale(1.0));
    CHECK(cutoff(rho, all, 1.0).minCoeff() == 1.0);

    const VertexSet e{at(l, 3), at(l, 4)};
    CHECK(ball(rho, e, 0.5) == e);
}

TEST_CASE("row-sum check") {
    for (int d : {1, 2, 3}) {
        const GraphForm g = lattice(d, d == 3 ? 5 : 12);
        const PseudoMetric rho = PseudoMetric::coordinate(g, 1.0 / std::sqrt(2.0 * d));
        const RowsumReport r = intrinsic_rowsum_check(g, rho);
        CHECK(r.pass);
        for (Index x : g.interior_vertices()) CHECK(std::abs(r.slack(x)) <= 1e-12);
        CHECK((r.row_sum - oracle::rowsum(g, rho.to_table())).cwiseAbs().maxCoeff() < 1e-14);
    }

    const RowsumReport bad = intrinsic_rowsum_check(three_point(), max_combine(rho1(), rho2()));
    CHECK_FALSE(bad.pass);
    CHECK(bad.slack(1) == -1.0);
    CHECK(bad.worst_vertex == 1);
    CHECK(intrinsic_rowsum_check(three_point(), rho1()).pass);
    CHECK(intrinsic_rowsum_check(three_point(), rho2()).pass);
}

TEST_CASE("power-law metric scaled to be intrinsic") {
    ModelSpec s;
    s.kind = ModelKind::powerlaw;
    s.radius = 40;
    s.alpha = 1.0;
    s.tail_tolerance = 0.1;
    const GraphForm g = build_model(s);
    const PseudoMetric unit = PseudoMetric::coordinate(g, 1.0, Profile::power, 0.4);
    // brute-force row-sum maximisation over interior vertices
    const Matrix table = unit.to_table();
    const Vector rows = oracle::rowsum(g, table);
    double worst = 0.0;
    for (Index x : g.interior_vertices()) worst = std::max(worst, rows(x) / g.mass(x));
    const double c = 1.0 / std::sqrt(worst);
    CHECK(intrinsic_scale(g, unit) == doctest::Approx(c).epsilon(1e-13));
    const PseudoMetric rho = unit.scaled(c);
    const RowsumReport r = intrinsic_rowsum_check(g, rho);
    CHECK(r.pass);
    CHECK(r.min_interior_slack >= -1e-12);

    std::mt19937_64 rng(48);
    std::bernoulli_distribution coin(0.3);
    const VertexSet inside = g.interior_vertices();
    for (int i = 0; i < 50; ++i) {
        VertexSet set;
        for (Index x : inside)
            if (coin(rng)) set.push_back(x);
        const SetRowsumReport rep = set_rowsum_check(g, rho, IntrinsicWitness::full(g), set);
        CHECK(rep.pass);
        CHECK(rep.lhs <= static_cast<double>(set.size()) * (1.0 + 1e-12));
    }
}

TEST_CASE("definitional check") {
    const GraphForm l = lattice(1, 10);
    const PseudoMetric rho = PseudoMetric::coordinate(l, 1.0 / std::sqrt(2.0));
    CHECK(definitional_check(l, rho, IntrinsicWitness::full(l), default_definitional_samples(rho, 1)).pass);

    const GraphForm g = three_point();
    const PseudoMetric mx = max_combine(rho1(), rho2());
    // rho_A for A = {2} is (1, 0, 1); mu_b at 2 is 2 against m = 1
    const DefinitionalReport bad =
        definitional_check(g, mx, IntrinsicWitness::full(g), {{VertexSet{1}, kInfinity}});
    CHECK_FALSE(bad.pass);
    CHECK(bad.worst_violation == 1.0);
    CHECK(bad.worst_vertex == 1);
    const Vector ra = distance_to_set(mx, {1});
    CHECK(oracle::mu(g, ra)(1) - g.mass(1) == 1.0);

    // tiny truncation always passes
    CHECK(definitional_check(g, mx, IntrinsicWitness::full(g), {{VertexSet{1}, 1e-9}}).pass);
    for (const PseudoMetric& r : {rho1(), rho2()})
        CHECK(definitional_check(g, r, IntrinsicWitness::full(g), exhaustive_definitional_samples(r)).pass);
    CHECK_FALSE(definitional_check(g, mx, IntrinsicWitness::full(g), exhaustive_definitional_samples(mx)).pass);
}

TEST_CASE("budget path metrics") {
    const GraphForm l = lattice(2, 4);
    const PseudoMetric hop = budget_metric(l, budgets_constant(l, 1.0));
    const Matrix fw = oracle::floyd_warshall(budget_lengths(budgets_constant(l, 1.0)));
    CHECK((hop.to_table() - fw).cwiseAbs().maxCoeff() == 0.0);
    for (Index x = 0; x < l.size(); ++x)
        CHECK(hop(0, x) == (l.coords.row(0) - l.coords.row(x)).cwiseAbs().sum());

    double previous2 = kInfinity, previous1 = kInfinity;
    for (int n : {100, 400, 1600}) {
        const GraphForm g = topo(n);
        const Index a1 = g.find_label("a1"), a2 = g.find_label("a2"), b1 = g.find_label("b1");
        const double r2 = budget_metric(g, budgets_m2(g))(a1, b1);
        const double r1 = budget_metric(g, budgets_m1(g))(a1, a2);
        CHECK(r2 <= 1.0 / std::sqrt(n) * (1.0 + 1e-12));
        CHECK(r1 <= 2.0 / std::sqrt(n) * (1.0 + 1e-12));
        CHECK(r2 < previous2);
        CHECK(r1 < previous1);
        previous2 = r2;
        previous1 = r1;
        if (n == 100) {
            const Matrix fw2 = oracle::floyd_warshall(budget_lengths(budgets_m2(g)));
            const Matrix fw1 = oracle::floyd_warshall(budget_lengths(budgets_m1(g)));
            CHECK(r2 == doctest::Approx(fw2(a1, b1)).epsilon(1e-14));
            CHECK(r1 == doctest::Approx(fw1(a1, a2)).epsilon(1e-14));
        }
    }
}

TEST_CASE("budget metrics are intrinsic") {
    const GraphForm g = topo(30);
    for (const EdgeBudgetSet& b : {budgets_m1(g), budgets_m2(g)}) {
        const PseudoMetric rho = budget_metric(g, b);
        CHECK(check_pseudometric(rho).ok(1e-12));
        CHECK(definitional_check(g, rho, IntrinsicWitness::full(g), default_definitional_samples(rho, 3)).pass);
    }
}

TEST_CASE("jump size") {
    for (int d : {1, 2, 3}) {
        const GraphForm g = lattice(d, 4);
        const PseudoMetric rho = PseudoMetric::coordinate(g, 1.0 / std::sqrt(2.0 * d));
        CHECK(jump_size(g, rho) == 1.0 / std::sqrt(2.0 * d));
    }
    const GraphForm g = lattice(1, 4);
    CHECK(jump_size(g, PseudoMetric::table(Matrix::Zero(g.size(), g.size()))) == 0.0);

    std::vector<double> sizes;
    for (int r : {10, 20, 40}) {
        ModelSpec s;
        s.kind = ModelKind::powerlaw;
        s.radius = r;
        s.tail_tolerance = 10.0;
        const GraphForm p = build_model(s);
        const double c = 0.3;
        const PseudoMetric rho = PseudoMetric::coordinate(p, c, Profile::power, 0.4);
        sizes.push_back(jump_size(p, rho));
        CHECK(sizes.back() == doctest::Approx(c * std::pow(2.0 * r, 0.4)));
    }
    CHECK(classify_jump_trend(sizes) == JumpTrend::infinite);
    CHECK(classify_jump_trend({0.5, 0.5, 0.5}) == JumpTrend::finite);
}

TEST_CASE("max combination") {
    const PseudoMetric m = max_combine(rho1(), rho2());
    for (Index x = 0; x < 3; ++x)
        for (Index y = 0; y < 3; ++y) CHECK(m(x, y) == (x == y ? 0.0 : 1.0));
    const PseudoMetric zero = PseudoMetric::table(Matrix::Zero(3, 3));
    CHECK((max_combine(rho1(), zero).to_table() - rho1().to_table()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((max_combine(rho2(), rho2()).to_table() - rho2().to_table()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("McShane extension") {
    const GraphForm l = lattice(1, 20);
    const PseudoMetric rho = PseudoMetric::coordinate(l, 1.0 / std::sqrt(2.0));
    const Index p = at(l, 3);
    CHECK((mcshane_extension(rho, {{p, 0.0}}) - distance_to_set(rho, {p})).cwiseAbs().maxCoeff() == 0.0);
    const VertexSet a{at(l, -4), at(l, 2), at(l, 9)};
    CHECK((mcshane_extension(rho, {{a[0], 0.0}, {a[1], 0.0}, {a[2], 0.0}}) - distance_to_set(rho, a))
              .cwiseAbs()
              .maxCoeff() == 0.0);
    CHECK_THROWS_AS(mcshane_extension(rho, {{a[0], 0.0}, {a[1], 100.0}}), std::invalid_argument);

    std::mt19937_64 rng(7);
    for (int i = 0; i < 20; ++i) {
        const Vector u = mcshane_extension(rho, random_admissible_anchors(rho, 5, rng));
        const Vector mu = oracle::mu(l, u);
        for (Index x : l.interior_vertices()) CHECK(mu(x) <= l.mass(x) * (1.0 + 1e-12));
    }
}

TEST_CASE("Lipschitz roundtrip") {
    const GraphForm l = lattice(1, 8);
    CHECK(roundtrip_check(PseudoMetric::coordinate(l, 1.0 / std::sqrt(2.0))).deviation == 0.0);
    CHECK(roundtrip_check(rho1()).deviation == 0.0);

    std::mt19937_64 rng(20);
    std::uniform_int_distribution<int> size(3, 6);
    std::uniform_real_distribution<double> w(0.1, 2.0);
    std::bernoulli_distribution coin(0.6);
    for (int i = 0; i < 20; ++i) {
        ModelSpec s;
        s.kind = ModelKind::explicit_graph;
        const int n = size(rng);
        s.masses.assign(n, 1.0);
        for (int x = 0; x + 1 < n; ++x) s.edges.push_back({x, x + 1, 1.0});
        for (int x = 0; x < n; ++x)
            for (int y = x + 2; y < n; ++y)
                if (coin(rng)) s.edges.push_back({x, y, 1.0});
        const GraphForm g = build_model(s);
        EdgeBudgetSet b = budgets_constant(g, 1.0);
        for (Index c = 0; c < b.budgets.outerSize(); ++c)
            for (SparseMatrix::InnerIterator it(b.budgets, c); it; ++it)
                if (it.row() < it.col()) {
                    const double value = w(rng);
                    it.valueRef() = value;
                    b.budgets.coeffRef(it.col(), it.row()) = value;
                }
        const PseudoMetric rho = budget_metric(g, b);
        CHECK(roundtrip_check(rho).deviation == 0.0);
        const Matrix table = rho.to_table();
        for (Index x = 0; x < n; ++x)
            for (Index y = 0; y < n; ++y) CHECK(lipschitz_sup(table, x, y) == doctest::Approx(table(x, y)).epsilon(1e-14));
    }
}

TEST_CASE("cutoff energy bounds") {
    const GraphForm l = lattice(1, 12);
    const double s = 1.0 / std::sqrt(2.0);
    const PseudoMetric rho = PseudoMetric::coordinate(l, s);
    const CutoffBoundsReport r = cutoff_energy_bounds(l, rho, {at(l, 0)}, std::sqrt(2.0), s);
    CHECK(r.cutoff_bound);
    CHECK(r.annulus_bound);
    const VertexSet ann = annulus(rho, {at(l, 0)}, s + std::sqrt(2.0));
    const Vector mu = oracle::mu(l, cutoff(rho, {at(l, 0)}, std::sqrt(2.0)));
    for (Index x = 0; x < l.size(); ++x)
        if (mu(x) > 0.0) CHECK(std::find(ann.begin(), ann.end(), x) != ann.end());

    VertexSet all(l.size());
    std::iota(all.begin(), all.end(), 0);
    const CutoffBoundsReport whole = cutoff_energy_bounds(l, rho, all, 1.0, s);
    CHECK(whole.measure.cwiseAbs().maxCoeff() == 0.0);
    CHECK(whole.cutoff_bound);
}

TEST_CASE("exponential kernel cutoff decay") {
    for (double beta : {0.5, 1.0}) {
        ModelSpec s;
        s.kind = ModelKind::exponential;
        s.dimension = 1;
        s.radius = 40;
        s.beta = beta;
        s.tail_tolerance = 10.0;
        const GraphForm g = build_model(s);
        const PseudoMetric rho = PseudoMetric::coordinate(g, 1.0);
        VertexSet left;
        for (Index x = 0; x < g.size(); ++x)
            if (g.coords(x, 0) <= 0) left.push_back(x);
        const Vector mu = oracle::mu(g, cutoff(rho, left, 2.0));
        std::vector<double> delta, values;
        for (Index x = 0; x < g.size(); ++x) {
            const int p = g.coords(x, 0);
            if (p >= 4 && p <= 20) {
                delta.push_back(p);
                values.push_back(mu(x));
            }
        }
        const double slope = fit_log_slope(delta, values);
        CHECK(std::abs(slope + beta) <= 0.15 * beta);
    }
}

TEST_CASE("least-squares log slope") {
    std::vector<double> xs, ys;
    for (int i = 0; i < 10; ++i) {
        xs.push_back(i);
        ys.push_back(3.0 * std::exp(-0.7 * i));
    }
    CHECK(fit_log_slope(xs, ys) == doctest::Approx(-0.7).epsilon(1e-12));
}
