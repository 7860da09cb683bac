#include "dflab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <ostream>
#include <queue>
#include <stdexcept>

#include "dflab/energy.hpp"

namespace dflab {

struct PseudoMetric::Path {
    EdgeBudgetSet budgets;
    mutable std::mutex mutex;
    mutable std::vector<std::shared_ptr<const Vector>> rows;

    explicit Path(EdgeBudgetSet b) : budgets(std::move(b)), rows(budgets.budgets.rows()) {}

    std::shared_ptr<const Vector> row(Index x) const {
        std::lock_guard lock(mutex);
        if (!rows[x]) rows[x] = std::make_shared<const Vector>(budget_distances(budgets, {x}));
        return rows[x];
    }
};

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

EdgeBudgetSet budgets_from(const GraphForm& g, const std::function<double(Index, Index, double)>& squared) {
    std::vector<Eigen::Triplet<double>> t;
    for (Index c = 0; c < g.jump.outerSize(); ++c)
        for (SparseMatrix::InnerIterator it(g.jump, c); it; ++it)
            if (it.row() != it.col() && it.value() > 0.0) {
                const Index x = it.row(), y = it.col();
                const double w2 = std::min({1.0, squared(x, y, it.value()), squared(y, x, it.value())});
                t.emplace_back(x, y, std::sqrt(std::max(w2, 0.0)));
            }
    EdgeBudgetSet b;
    b.budgets.resize(g.size(), g.size());
    b.budgets.setFromTriplets(t.begin(), t.end());
    return b;
}

double lattice_distance(const Eigen::MatrixXi& coords, Index x, Index y) {
    return (coords.row(x) - coords.row(y)).cast<double>().norm();
}

}  // namespace

// ---------------------------------------------------------------------------
// Budgets

EdgeBudgetSet budgets_m1(const GraphForm& g) {
    const Vector deg = degree_measure(g);
    return budgets_from(g, [&](Index x, Index, double) { return g.mass(x) / deg(x); });
}

EdgeBudgetSet budgets_m2(const GraphForm& g) {
    const Eigen::VectorXi deg = vertex_degree(g);
    return budgets_from(g, [&](Index x, Index, double j) { return g.mass(x) / (j * deg(x)); });
}

EdgeBudgetSet budgets_constant(const GraphForm& g, double w) {
    if (w < 0.0) throw std::invalid_argument("budgets must be nonnegative");
    return budgets_from(g, [w](Index, Index, double) { return w * w; });
}

// ---------------------------------------------------------------------------
// PseudoMetric

PseudoMetric PseudoMetric::table(Matrix distances) {
    if (distances.rows() != distances.cols()) throw std::invalid_argument("metric table must be square");
    PseudoMetric m;
    m.rep_ = Table{std::move(distances)};
    return m;
}

PseudoMetric PseudoMetric::coordinate(const GraphForm& g, double scale, Profile profile, double beta) {
    if (!g.has_coords()) throw std::invalid_argument("coordinate metric needs lattice coordinates");
    if (!(scale >= 0.0)) throw std::invalid_argument("metric scale must be nonnegative");
    if (profile == Profile::power && !(beta > 0.0 && beta <= 1.0))
        throw std::invalid_argument("power profile needs beta in (0, 1]");
    PseudoMetric m;
    m.rep_ = Coordinate{g.coords, scale, profile, beta};
    return m;
}

PseudoMetric PseudoMetric::path(const EdgeBudgetSet& budgets) {
    if (budgets.budgets.rows() != budgets.budgets.cols()) throw std::invalid_argument("budget matrix must be square");
    PseudoMetric m;
    m.rep_ = std::shared_ptr<const Path>(std::make_shared<Path>(budgets));
    return m;
}

PseudoMetric PseudoMetric::max_of(const PseudoMetric& a, const PseudoMetric& b) {
    if (a.size() != b.size()) throw std::invalid_argument("max_combine: metrics live on different windows");
    PseudoMetric m;
    m.rep_ = Max{std::make_shared<const PseudoMetric>(a), std::make_shared<const PseudoMetric>(b)};
    return m;
}

Index PseudoMetric::size() const {
    return std::visit(overloaded{[](const Table& t) { return t.distances.rows(); },
                                 [](const Coordinate& c) { return c.coords.rows(); },
                                 [](const std::shared_ptr<const Path>& p) { return p->budgets.budgets.rows(); },
                                 [](const Max& m) { return m.first->size(); }},
                      rep_);
}

double PseudoMetric::profile_value(double t) const {
    const auto* c = std::get_if<Coordinate>(&rep_);
    if (!c) throw std::logic_error("profile_value on a non-coordinate metric");
    const double f = c->profile == Profile::identity ? t : std::min(std::pow(t, c->beta), t);
    return c->scale * f;
}

double PseudoMetric::operator()(Index x, Index y) const {
    return std::visit(
        overloaded{[&](const Table& t) { return t.distances(x, y); },
                   [&](const Coordinate& c) {
                       if (x == y) return 0.0;
                       const double t = lattice_distance(c.coords, x, y);
                       const double f = c.profile == Profile::identity ? t : std::min(std::pow(t, c.beta), t);
                       return c.scale * f;
                   },
                   [&](const std::shared_ptr<const Path>& p) { return (*p->row(x))(y); },
                   [&](const Max& m) { return std::max((*m.first)(x, y), (*m.second)(x, y)); }},
        rep_);
}

Vector PseudoMetric::row(Index x) const {
    if (const auto* p = std::get_if<std::shared_ptr<const Path>>(&rep_)) return *(*p)->row(x);
    if (const auto* t = std::get_if<Table>(&rep_)) return t->distances.row(x).transpose();
    Vector out(size());
    for (Index y = 0; y < size(); ++y) out(y) = (*this)(x, y);
    return out;
}

Matrix PseudoMetric::to_table() const {
    if (const auto* t = std::get_if<Table>(&rep_)) return t->distances;
    Matrix out(size(), size());
    for (Index x = 0; x < size(); ++x) out.row(x) = row(x).transpose();
    return out;
}

PseudoMetric PseudoMetric::scaled(double t) const {
    if (!(t >= 0.0)) throw std::invalid_argument("metric scale must be nonnegative");
    return std::visit(overloaded{[&](const Table& tb) { return PseudoMetric::table(t * tb.distances); },
                                 [&](const Coordinate& c) {
                                     PseudoMetric m;
                                     Coordinate copy = c;
                                     copy.scale *= t;
                                     m.rep_ = std::move(copy);
                                     return m;
                                 },
                                 [&](const std::shared_ptr<const Path>& p) {
                                     EdgeBudgetSet b{t * p->budgets.budgets};
                                     return PseudoMetric::path(b);
                                 },
                                 [&](const Max& m) {
                                     return PseudoMetric::max_of(m.first->scaled(t), m.second->scaled(t));
                                 }},
                      rep_);
}

std::string PseudoMetric::kind_name() const {
    return std::visit(overloaded{[](const Table&) { return std::string("table"); },
                                 [](const Coordinate&) { return std::string("coordinate"); },
                                 [](const std::shared_ptr<const Path>&) { return std::string("path"); },
                                 [](const Max&) { return std::string("max"); }},
                      rep_);
}

IntrinsicWitness IntrinsicWitness::full(const GraphForm& g) { return {g.mass, Vector::Zero(g.size())}; }

std::string IntrinsicWitness::check(const GraphForm& g) const {
    if (m_b.size() != g.size() || m_c.size() != g.size()) return "witness size differs from the window";
    for (Index x = 0; x < g.size(); ++x) {
        if (m_b(x) < 0.0 || m_c(x) < 0.0) return "witness measures must be nonnegative";
        if (m_c(x) != 0.0) return "m_c must vanish on graphs";
        if (m_b(x) + m_c(x) > g.mass(x) * (1.0 + 1e-15)) return "m_b + m_c exceeds m at vertex " + std::to_string(x);
    }
    return {};
}

// ---------------------------------------------------------------------------
// Sets and distance functions

Vector budget_distances(const EdgeBudgetSet& budgets, const VertexSet& sources) {
    const SparseMatrix& w = budgets.budgets;
    const Index n = w.rows();
    Vector dist = Vector::Constant(n, kInfinity);
    using Item = std::pair<double, Index>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    for (Index s : sources) {
        if (s < 0 || s >= n) throw std::invalid_argument("source vertex out of range");
        dist(s) = 0.0;
        queue.emplace(0.0, s);
    }
    while (!queue.empty()) {
        const auto [d, x] = queue.top();
        queue.pop();
        if (d > dist(x)) continue;
        for (SparseMatrix::InnerIterator it(w, x); it; ++it) {
            const double nd = d + it.value();
            if (nd < dist(it.row())) {
                dist(it.row()) = nd;
                queue.emplace(nd, it.row());
            }
        }
    }
    return dist;
}

Vector distance_to_set(const PseudoMetric& rho, const VertexSet& set) {
    if (set.empty()) throw std::invalid_argument("distance_to_set: empty set");
    if (const auto* p = std::get_if<std::shared_ptr<const PseudoMetric::Path>>(&rho.representation()))
        return budget_distances((*p)->budgets, set);
    const Index n = rho.size();
    Vector out = Vector::Constant(n, kInfinity);
    if (const auto* c = std::get_if<PseudoMetric::Coordinate>(&rho.representation())) {
        // The profile is nondecreasing, so minimise the lattice distance first.
        for (Index x = 0; x < n; ++x) {
            double best = kInfinity;
            for (Index a : set) best = std::min(best, (c->coords.row(x) - c->coords.row(a)).cast<double>().squaredNorm());
            out(x) = best == 0.0 ? 0.0 : rho.profile_value(std::sqrt(best));
        }
        return out;
    }
    for (Index a : set) {
        const Vector r = rho.row(a);
        out = out.cwiseMin(r);
    }
    return out;
}

Vector cutoff(const PseudoMetric& rho, const VertexSet& set, double a) {
    if (!(a > 0.0)) throw std::invalid_argument("cutoff: range must be positive");
    const Vector d = distance_to_set(rho, set);
    return d.unaryExpr([a](double t) { return std::isinf(t) ? 0.0 : std::max(0.0, 1.0 - t / a); });
}

VertexSet ball(const PseudoMetric& rho, const VertexSet& set, double r) {
    VertexSet out;
    if (set.empty()) return out;
    const Vector d = distance_to_set(rho, set);
    for (Index x = 0; x < d.size(); ++x)
        if (d(x) <= r) out.push_back(x);
    return out;
}

VertexSet annulus(const PseudoMetric& rho, const VertexSet& set, double r) {
    const VertexSet outer = ball(rho, set, r);
    const VertexSet inner = ball(rho, complement(rho.size(), set), r);
    VertexSet out;
    std::set_intersection(outer.begin(), outer.end(), inner.begin(), inner.end(), std::back_inserter(out));
    return out;
}

VertexSet complement(Index n, const VertexSet& set) {
    std::vector<char> in(n, 0);
    for (Index x : set) in[x] = 1;
    VertexSet out;
    for (Index x = 0; x < n; ++x)
        if (!in[x]) out.push_back(x);
    return out;
}

VertexSet set_union(const VertexSet& a, const VertexSet& b) {
    VertexSet sa = a, sb = b, out;
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    std::set_union(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(out));
    return out;
}

bool is_subset(const VertexSet& a, const VertexSet& b) {
    VertexSet sa = a, sb = b;
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    return std::includes(sb.begin(), sb.end(), sa.begin(), sa.end());
}

TriangleReport check_pseudometric(const PseudoMetric& rho, std::uint64_t seed) {
    TriangleReport r;
    const Index n = rho.size();
    if (n == 0) return r;
    auto violation = [](double xy, double xz, double zy) {
        if (std::isinf(xz) || std::isinf(zy)) return 0.0;
        return xy - xz - zy;
    };
    if (n <= 300) {
        const Matrix t = rho.to_table();
        r.min_value = t.minCoeff();
        r.max_diagonal = t.diagonal().cwiseAbs().maxCoeff();
        for (Index x = 0; x < n; ++x)
            for (Index y = 0; y < n; ++y) {
                if (!(std::isinf(t(x, y)) && std::isinf(t(y, x))))
                    r.max_asymmetry = std::max(r.max_asymmetry, std::abs(t(x, y) - t(y, x)));
                for (Index z = 0; z < n; ++z) r.max_violation = std::max(r.max_violation, violation(t(x, y), t(x, z), t(z, y)));
            }
        return r;
    }
    r.exhaustive = false;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<Index> pick(0, n - 1);
    r.min_value = kInfinity;
    for (int i = 0; i < 100000; ++i) {
        const Index x = pick(rng), y = pick(rng), z = pick(rng);
        const double xy = rho(x, y), yx = rho(y, x);
        r.min_value = std::min(r.min_value, xy);
        r.max_diagonal = std::max(r.max_diagonal, std::abs(rho(x, x)));
        if (!(std::isinf(xy) && std::isinf(yx))) r.max_asymmetry = std::max(r.max_asymmetry, std::abs(xy - yx));
        r.max_violation = std::max(r.max_violation, violation(xy, rho(x, z), rho(z, y)));
    }
    return r;
}

// ---------------------------------------------------------------------------
// Intrinsic checks

RowsumReport intrinsic_rowsum_check(const GraphForm& g, const PseudoMetric& rho) {
    RowsumReport r;
    r.row_sum = Vector::Zero(g.size());
    for (Index c = 0; c < g.jump.outerSize(); ++c)
        for (SparseMatrix::InnerIterator it(g.jump, c); it; ++it)
            if (it.row() != it.col() && it.value() != 0.0) {
                const double d = rho(it.row(), it.col());
                r.row_sum(it.row()) += d * d * it.value();
            }
    r.slack = g.mass - r.row_sum;
    r.pass = true;
    for (Index x = 0; x < g.size(); ++x) {
        const bool ok = r.slack(x) >= -1e-12 * g.mass(x);
        if (g.interior[x]) {
            if (r.slack(x) < r.min_interior_slack) {
                r.min_interior_slack = r.slack(x);
                r.worst_vertex = x;
            }
            r.pass = r.pass && ok;
        } else if (!ok) {
            r.boundary_deficits.push_back(x);
        }
    }
    return r;
}

double max_rowsum_ratio(const GraphForm& g, const PseudoMetric& rho, const VertexSet& vertices) {
    const RowsumReport r = intrinsic_rowsum_check(g, rho);
    double best = 0.0;
    for (Index x : vertices) best = std::max(best, r.row_sum(x) / g.mass(x));
    return best;
}

double intrinsic_scale(const GraphForm& g, const PseudoMetric& rho) {
    const double ratio = max_rowsum_ratio(g, rho, g.interior_vertices());
    if (!(ratio > 0.0)) throw std::invalid_argument("intrinsic_scale: metric has zero row sums");
    return 1.0 / std::sqrt(ratio);
}

namespace {

double median_positive_distance(const PseudoMetric& rho, std::mt19937_64& rng) {
    const Index n = rho.size();
    std::vector<double> values;
    if (n <= 300) {
        for (Index x = 0; x < n; ++x)
            for (Index y = x + 1; y < n; ++y) values.push_back(rho(x, y));
    } else {
        std::uniform_int_distribution<Index> pick(0, n - 1);
        for (int i = 0; i < 20000; ++i) values.push_back(rho(pick(rng), pick(rng)));
    }
    std::erase_if(values, [](double v) { return !(v > 0.0) || std::isinf(v); });
    if (values.empty()) return 1.0;
    auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
    std::nth_element(values.begin(), mid, values.end());
    return *mid;
}

void push_truncations(std::vector<DefinitionalSample>& out, const VertexSet& set, double median) {
    for (double t : {kInfinity, median, 0.01 * median}) out.push_back({set, t});
}

}  // namespace

std::vector<DefinitionalSample> default_definitional_samples(const PseudoMetric& rho, std::uint64_t seed,
                                                             int random_sets) {
    std::mt19937_64 rng(seed);
    const double median = median_positive_distance(rho, rng);
    std::vector<DefinitionalSample> out;
    const Index n = rho.size();
    for (Index x = 0; x < n; ++x) push_truncations(out, {x}, median);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < random_sets; ++i) {
        const double p = 0.5 * unit(rng);
        VertexSet set;
        for (Index x = 0; x < n; ++x)
            if (unit(rng) < p) set.push_back(x);
        if (set.empty()) set.push_back(std::uniform_int_distribution<Index>(0, n - 1)(rng));
        push_truncations(out, set, median);
    }
    return out;
}

std::vector<DefinitionalSample> exhaustive_definitional_samples(const PseudoMetric& rho) {
    const Index n = rho.size();
    if (n > 16) throw std::invalid_argument("exhaustive samples need n <= 16");
    std::mt19937_64 rng(0);
    const double median = median_positive_distance(rho, rng);
    std::vector<DefinitionalSample> out;
    for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
        VertexSet set;
        for (Index x = 0; x < n; ++x)
            if (mask & (1u << x)) set.push_back(x);
        push_truncations(out, set, median);
    }
    return out;
}

DefinitionalReport definitional_check(const GraphForm& g, const PseudoMetric& rho, const IntrinsicWitness& witness,
                                      const std::vector<DefinitionalSample>& samples) {
    if (auto err = witness.check(g); !err.empty()) throw std::invalid_argument("definitional_check: " + err);
    DefinitionalReport r;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        Vector u = distance_to_set(rho, samples[i].set);
        double cap = samples[i].truncation;
        if (std::isinf(cap) && !u.allFinite()) {
            cap = 0.0;
            for (Index x = 0; x < u.size(); ++x)
                if (std::isfinite(u(x))) cap = std::max(cap, u(x));
        }
        u = u.cwiseMin(cap);
        const Vector mu = jump_measure(g, u);
        for (Index x = 0; x < g.size(); ++x) {
            if (!g.interior[x]) continue;
            const double v = mu(x) - witness.m_b(x);
            if (v > r.worst_violation) {
                r.worst_violation = v;
                r.worst_vertex = x;
                r.worst_sample = i;
            }
        }
    }
    r.pass = r.worst_violation <= 1e-12 * std::max(1.0, g.mass.maxCoeff());
    return r;
}

PseudoMetric budget_metric(const GraphForm& g, const EdgeBudgetSet& budgets) {
    if (budgets.budgets.rows() != g.size()) throw std::invalid_argument("budget set does not match the window");
    return PseudoMetric::path(budgets);
}

double jump_size(const GraphForm& g, const PseudoMetric& rho) {
    double best = 0.0;
    for (Index c = 0; c < g.jump.outerSize(); ++c)
        for (SparseMatrix::InnerIterator it(g.jump, c); it; ++it)
            if (it.row() != it.col() && it.value() > 0.0) best = std::max(best, rho(it.row(), it.col()));
    return best;
}

std::string to_string(JumpTrend trend) {
    switch (trend) {
        case JumpTrend::finite: return "finite";
        case JumpTrend::infinite: return "infinite";
        case JumpTrend::indeterminate: return "indeterminate";
    }
    return "indeterminate";
}

JumpTrend classify_jump_trend(const std::vector<double>& sizes) {
    if (sizes.size() < 2) return JumpTrend::indeterminate;
    if (std::any_of(sizes.begin(), sizes.end(), [](double s) { return std::isinf(s); })) return JumpTrend::infinite;
    const double last = sizes.back(), prev = sizes[sizes.size() - 2];
    if (std::abs(last - prev) <= 1e-12 * std::max(1.0, std::abs(last))) return JumpTrend::finite;
    for (std::size_t i = 1; i < sizes.size(); ++i)
        if (!(sizes[i] > sizes[i - 1])) return JumpTrend::indeterminate;
    return JumpTrend::infinite;
}

PseudoMetric max_combine(const PseudoMetric& a, const PseudoMetric& b) { return PseudoMetric::max_of(a, b); }

Vector mcshane_extension(const PseudoMetric& rho, const std::vector<Anchor>& anchors) {
    if (anchors.empty()) throw std::invalid_argument("mcshane_extension: no anchors");
    for (std::size_t i = 0; i < anchors.size(); ++i)
        for (std::size_t k = i + 1; k < anchors.size(); ++k) {
            const double gap = std::abs(anchors[i].second - anchors[k].second);
            const double d = rho(anchors[i].first, anchors[k].first);
            if (gap > d + 1e-12 * std::max(1.0, d))
                throw std::invalid_argument("mcshane_extension: anchor values are not admissible");
        }
    Vector u = Vector::Constant(rho.size(), kInfinity);
    for (const auto& [p, value] : anchors) u = u.cwiseMin((rho.row(p).array() + value).matrix());
    return u;
}

std::vector<Anchor> random_admissible_anchors(const PseudoMetric& rho, int count, std::mt19937_64& rng) {
    const Index n = rho.size();
    count = static_cast<int>(std::min<Index>(count, n));
    std::vector<Index> points(n);
    for (Index x = 0; x < n; ++x) points[x] = x;
    std::shuffle(points.begin(), points.end(), rng);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<Anchor> anchors;
    for (int i = 0; i < count; ++i) {
        const Index p = points[i];
        double lo = -kInfinity, hi = kInfinity;
        for (const auto& [q, value] : anchors) {
            const double d = rho(p, q);
            lo = std::max(lo, value - d);
            hi = std::min(hi, value + d);
        }
        double value;
        if (std::isfinite(lo) && std::isfinite(hi)) value = lo + unit(rng) * std::max(0.0, hi - lo);
        else if (std::isfinite(lo)) value = lo + unit(rng);
        else if (std::isfinite(hi)) value = hi - unit(rng);
        else value = 2.0 * unit(rng) - 1.0;
        anchors.emplace_back(p, std::min(value, hi));
    }
    return anchors;
}

Vector lipschitz_sample(const PseudoMetric& rho, int count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return mcshane_extension(rho, random_admissible_anchors(rho, count, rng));
}

RoundtripReport roundtrip_check(const PseudoMetric& rho) {
    const Matrix t = rho.to_table();
    const Index n = t.rows();
    RoundtripReport r;
    for (Index y = 0; y < n; ++y) {
        // f = rho(., y) lies in the Lipschitz ball with f(y) = 0
        const Vector f = t.col(y);
        r.deviation = std::max(r.deviation, std::abs(f(y)));
        for (Index x = 0; x < n; ++x) {
            if (!(std::isinf(f(x)) && std::isinf(t(x, y)))) r.deviation = std::max(r.deviation, std::abs(f(x) - t(x, y)));
        }
    }
    const bool exhaustive = n <= 200;
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<Index> pick(0, std::max<Index>(n - 1, 0));
    auto excess = [&](Index x, Index y, Index z) {
        if (std::isinf(t(x, y))) return 0.0;
        if (std::isinf(t(x, z))) return 0.0;
        return t(x, z) - t(y, z) - t(x, y);
    };
    if (exhaustive) {
        for (Index x = 0; x < n; ++x)
            for (Index y = 0; y < n; ++y)
                for (Index z = 0; z < n; ++z) r.max_excess = std::max(r.max_excess, excess(x, y, z));
    } else {
        for (int i = 0; i < 200000; ++i) r.max_excess = std::max(r.max_excess, excess(pick(rng), pick(rng), pick(rng)));
    }
    return r;
}

CutoffBoundsReport cutoff_energy_bounds(const GraphForm& g, const PseudoMetric& rho, const VertexSet& set, double a,
                                        double jump) {
    CutoffBoundsReport r;
    const Vector eta = cutoff(rho, set, a);
    r.measure = jump_measure(g, eta);
    const VertexSet ann = annulus(rho, set, jump + a);
    std::vector<char> in_annulus(g.size(), 0);
    for (Index x : ann) in_annulus[x] = 1;

    r.cutoff_bound = true;
    r.annulus_bound = true;
    for (Index x = 0; x < g.size(); ++x) {
        if (!in_annulus[x]) r.outside_annulus = std::max(r.outside_annulus, r.measure(x));
        if (!g.interior[x]) continue;
        const double ratio = a * a * r.measure(x) / g.mass(x);
        r.max_scaled_ratio = std::max(r.max_scaled_ratio, ratio);
    }
    r.cutoff_bound = r.max_scaled_ratio <= 1.0 + 1e-12;
    r.annulus_bound = r.cutoff_bound && r.outside_annulus == 0.0;
    return r;
}

SetRowsumReport set_rowsum_check(const GraphForm& g, const PseudoMetric& rho, const IntrinsicWitness& witness,
                            const VertexSet& set) {
    if (auto err = witness.check(g); !err.empty()) throw std::invalid_argument("set_rowsum_check: " + err);
    SetRowsumReport r;
    const RowsumReport rows = intrinsic_rowsum_check(g, rho);
    for (Index x : set) {
        r.lhs += rows.row_sum(x);
        r.rhs += witness.m_b(x);
    }
    r.pass = r.lhs <= r.rhs + 1e-12 * std::max(1.0, r.rhs);
    return r;
}

void write_metric_dump(std::ostream& os, const PseudoMetric& rho) {
    const Index n = rho.size();
    os << n << '\n';
    for (Index x = 0; x < n; ++x) {
        const Vector r = rho.row(x);
        for (Index y = 0; y <= x; ++y) os << (y ? " " : "") << format_number(r(y));
        os << '\n';
    }
}

double fit_log_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int count = 0;
    for (std::size_t i = 0; i < xs.size() && i < ys.size(); ++i) {
        if (!(ys[i] > 0.0)) continue;
        const double ly = std::log(ys[i]);
        sx += xs[i];
        sy += ly;
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ly;
        ++count;
    }
    if (count < 2) throw std::invalid_argument("fit_log_slope: need at least two positive samples");
    const double denom = count * sxx - sx * sx;
    if (denom == 0.0) throw std::invalid_argument("fit_log_slope: degenerate abscissae");
    return (count * sxy - sx * sy) / denom;
}

}  // namespace dflab
