#include "dflab/graph_form.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace dflab {

namespace {

using Triplet = Eigen::Triplet<double>;

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

/// All points of Z^d within [-R, R]^d, first coordinate slowest.
Eigen::MatrixXi lattice_points(int d, int radius) {
    const Index side = 2 * radius + 1;
    Index count = 1;
    for (int i = 0; i < d; ++i) count *= side;
    Eigen::MatrixXi pts(count, d);
    for (Index idx = 0; idx < count; ++idx) {
        Index rest = idx;
        for (int i = d - 1; i >= 0; --i) {
            pts(idx, i) = static_cast<int>(rest % side) - radius;
            rest /= side;
        }
    }
    return pts;
}

Index lattice_index(const Eigen::VectorXi& x, int radius) {
    const Index side = 2 * radius + 1;
    Index idx = 0;
    for (Index i = 0; i < x.size(); ++i) {
        if (std::abs(x(i)) > radius) return -1;
        idx = idx * side + (x(i) + radius);
    }
    return idx;
}

/// Smallest distance (sup norm) from x to the outside of the window.
int edge_distance(const Eigen::MatrixXi& pts, Index x, int radius) {
    int best = std::numeric_limits<int>::max();
    for (Index i = 0; i < pts.cols(); ++i) best = std::min(best, radius - std::abs(pts(x, i)));
    return best;
}

double euclidean(const Eigen::MatrixXi& pts, Index x, Index y) {
    return (pts.row(x) - pts.row(y)).cast<double>().norm();
}

GraphForm finish(GraphForm g, std::vector<Triplet>& triplets) {
    const Index n = g.size();
    g.jump.resize(n, n);
    g.jump.setFromTriplets(triplets.begin(), triplets.end());
    g.jump.makeCompressed();
    if (g.killing.size() != n) g.killing = Vector::Zero(n);
    if (g.tail_bound.size() != n) g.tail_bound = Vector::Zero(n);
    if (g.interior.size() != static_cast<std::size_t>(n)) g.interior.assign(n, true);
    return g;
}

void add_edge(std::vector<Triplet>& t, Index x, Index y, double w) {
    t.emplace_back(x, y, w);
    t.emplace_back(y, x, w);
}

void mark_interior_by_tail(GraphForm& g, const char* model) {
    g.interior.assign(g.size(), false);
    bool any = false;
    for (Index x = 0; x < g.size(); ++x) {
        g.interior[x] = g.tail_bound(x) <= g.tail_tolerance;
        any = any || g.interior[x];
    }
    require(any, std::string(model) + ": window too small for the requested tail tolerance (no interior vertex)");
}

GraphForm build_lattice(const ModelSpec& s) {
    require(s.dimension >= 1 && s.dimension <= 3, "lattice: dimension must be 1, 2 or 3");
    require(s.radius >= 1, "lattice: radius must be >= 1");
    require(s.edge_weight > 0.0, "lattice: edge weight must be positive");
    require(s.mass > 0.0, "lattice: mass must be positive");
    require(s.interior_margin >= 1, "lattice: interior margin must be >= 1");
    require(s.interior_margin <= s.radius, "lattice: window too small for the requested interior margin");

    GraphForm g;
    g.coords = lattice_points(s.dimension, s.radius);
    const Index n = g.coords.rows();
    g.mass = Vector::Constant(n, s.mass);
    g.tail_bound = Vector::Zero(n);
    g.tail_tolerance = s.tail_tolerance;
    g.interior.assign(n, false);

    std::vector<Triplet> t;
    for (Index x = 0; x < n; ++x) {
        Eigen::VectorXi p = g.coords.row(x).transpose();
        for (int i = 0; i < s.dimension; ++i) {
            for (int step : {-1, 1}) {
                p(i) += step;
                const Index y = lattice_index(p, s.radius);
                if (y < 0) g.tail_bound(x) += s.edge_weight;
                else if (y > x) add_edge(t, x, y, s.edge_weight);
                p(i) -= step;
            }
        }
        g.interior[x] = edge_distance(g.coords, x, s.radius) >= s.interior_margin;
    }
    return finish(std::move(g), t);
}

GraphForm build_powerlaw(const ModelSpec& s) {
    require(s.dimension == 1, "powerlaw: only dimension 1 is supported");
    require(s.radius >= 1, "powerlaw: radius must be >= 1");
    require(s.alpha > 0.0 && s.alpha < 2.0, "powerlaw: alpha must lie in (0, 2)");
    require(s.amplitude > 0.0, "powerlaw: amplitude must be positive");
    require(s.mass > 0.0, "powerlaw: mass must be positive");

    GraphForm g;
    g.coords = lattice_points(1, s.radius);
    const Index n = g.coords.rows();
    g.mass = Vector::Constant(n, s.mass);
    g.tail_tolerance = s.tail_tolerance;
    g.tail_bound.resize(n);

    // sum_{t > delta} t^{-1-alpha} <= (delta+1)^{-1-alpha} + (delta+1)^{-alpha} / alpha
    auto side_tail = [&](int delta) {
        const double t0 = delta + 1.0;
        return s.amplitude * (std::pow(t0, -1.0 - s.alpha) + std::pow(t0, -s.alpha) / s.alpha);
    };

    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(n * (n - 1)));
    for (Index x = 0; x < n; ++x) {
        const int px = g.coords(x, 0);
        g.tail_bound(x) = side_tail(s.radius - px) + side_tail(s.radius + px);
        for (Index y = x + 1; y < n; ++y) {
            const double r = std::abs(px - g.coords(y, 0));
            add_edge(t, x, y, s.amplitude * std::pow(r, -1.0 - s.alpha));
        }
    }
    mark_interior_by_tail(g, "powerlaw");
    return finish(std::move(g), t);
}

GraphForm build_exponential(const ModelSpec& s) {
    require(s.dimension >= 1 && s.dimension <= 3, "exponential: dimension must be 1, 2 or 3");
    require(s.radius >= 1, "exponential: radius must be >= 1");
    require(s.alpha > 0.0 && s.alpha < 2.0, "exponential: alpha must lie in (0, 2)");
    require(s.beta > 0.0, "exponential: beta must be positive");
    require(s.amplitude > 0.0, "exponential: amplitude must be positive");
    require(s.mass > 0.0, "exponential: mass must be positive");

    GraphForm g;
    g.coords = lattice_points(s.dimension, s.radius);
    const Index n = g.coords.rows();
    const int d = s.dimension;
    g.mass = Vector::Constant(n, s.mass);
    g.tail_tolerance = s.tail_tolerance;
    g.tail_bound.resize(n);

    // Lattice scale: the |x-y| <= 1 branch C|x-y|^{-d-alpha} only sees unit
    // distance, where it equals C.
    auto kernel = [&](double r) { return r <= 1.0 ? s.amplitude : s.amplitude * std::exp(-s.beta * r); };

    // Outside points at sup-distance t number at most (2t+1)^d - (2t-1)^d and
    // have Euclidean distance >= t.
    auto tail = [&](int delta) {
        double sum = 0.0;
        for (int t = delta + 1;; ++t) {
            const double shell = std::pow(2.0 * t + 1.0, d) - std::pow(2.0 * t - 1.0, d);
            const double term = shell * (t == 1 ? s.amplitude : s.amplitude * std::exp(-s.beta * t));
            sum += term;
            if (t > delta + 8 && term <= 1e-17 * sum) break;
            if (t > delta + 100000) break;
        }
        return sum;
    };

    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(n * (n - 1)));
    for (Index x = 0; x < n; ++x) {
        g.tail_bound(x) = tail(edge_distance(g.coords, x, s.radius));
        for (Index y = x + 1; y < n; ++y) add_edge(t, x, y, kernel(euclidean(g.coords, x, y)));
    }
    mark_interior_by_tail(g, "exponential");
    return finish(std::move(g), t);
}

GraphForm build_topo(const ModelSpec& s) {
    const int count = s.radius;
    require(count >= 1, "topo_example: N must be >= 1");
    require(s.mass > 0.0, "topo_example: mass must be positive");
    const Index n = 2 + 2 * static_cast<Index>(count);

    GraphForm g;
    g.mass = Vector::Constant(n, s.mass);
    g.tail_tolerance = s.tail_tolerance;
    g.tail_bound = Vector::Zero(n);
    g.labels = {"a1", "a2"};
    std::vector<Triplet> t;
    for (int k = 1; k <= count; ++k) {
        const Index b = 2 + 2 * (k - 1);
        const Index c = b + 1;
        g.labels.push_back("b" + std::to_string(k));
        g.labels.push_back("c" + std::to_string(k));
        const double w = 1.0 / (static_cast<double>(k) * k);
        add_edge(t, 0, b, w);
        add_edge(t, 1, b, w);
        add_edge(t, b, c, static_cast<double>(k));
    }
    // sum_{k > N} 1/k^2 < 1/N
    g.tail_bound(0) = g.tail_bound(1) = 1.0 / count;
    g.interior.assign(n, true);
    g.interior[0] = g.interior[1] = g.tail_bound(0) <= g.tail_tolerance;
    return finish(std::move(g), t);
}

GraphForm build_three_point() {
    GraphForm g;
    g.mass = Vector::Ones(3);
    g.labels = {"1", "2", "3"};
    std::vector<Triplet> t;
    add_edge(t, 0, 1, 1.0);
    add_edge(t, 1, 2, 1.0);
    return finish(std::move(g), t);
}

GraphForm build_mirror(const ModelSpec& s) {
    const int count = s.radius;
    require(count >= 2, "mirror: N must be >= 2");
    GraphForm g;
    std::vector<double> pos;
    for (int i = 0; i <= count; ++i) {
        if (2 * i == count) continue;  // no vertex at the singularity
        pos.push_back(-1.0 + 2.0 * i / count);
    }
    const Index n = static_cast<Index>(pos.size());
    g.mass = Vector::Constant(n, 2.0 / count);
    for (double p : pos) g.labels.push_back(format_number(p));

    // Ordered pairs count {x, -x} twice, so each carries half the cell weight.
    std::vector<Triplet> t;
    for (Index i = 0; i < n; ++i) {
        const Index partner = n - 1 - i;
        if (partner > i) add_edge(t, i, partner, std::pow(std::abs(pos[i]), -2.5) / count);
    }
    return finish(std::move(g), t);
}

GraphForm build_explicit(const ModelSpec& s) {
    const Index n = static_cast<Index>(s.masses.size());
    require(n >= 1, "explicit: at least one vertex required");
    GraphForm g;
    g.mass = Eigen::Map<const Vector>(s.masses.data(), n);
    if (!s.killing.empty()) {
        require(static_cast<Index>(s.killing.size()) == n, "explicit: killing size mismatch");
        g.killing = Eigen::Map<const Vector>(s.killing.data(), n);
    }
    if (!s.interior.empty()) {
        require(static_cast<Index>(s.interior.size()) == n, "explicit: interior size mismatch");
        g.interior = s.interior;
    }
    g.tail_tolerance = s.tail_tolerance;
    std::vector<Triplet> t;
    for (const auto& e : s.edges) {
        require(e.x >= 0 && e.x < n && e.y >= 0 && e.y < n, "explicit: edge endpoint out of range");
        require(e.x != e.y, "explicit: self loops are not allowed");
        require(e.weight >= 0.0, "explicit: negative jump weight");
        add_edge(t, e.x, e.y, e.weight);
    }
    return finish(std::move(g), t);
}

}  // namespace

VertexSet GraphForm::interior_vertices() const {
    VertexSet out;
    for (Index x = 0; x < size(); ++x)
        if (interior[x]) out.push_back(x);
    return out;
}

Index GraphForm::find_coords(const Eigen::VectorXi& x) const {
    for (Index i = 0; i < coords.rows(); ++i)
        if (coords.row(i).transpose() == x) return i;
    return -1;
}

Index GraphForm::find_label(const std::string& label) const {
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == label) return static_cast<Index>(i);
    return -1;
}

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::lattice: return "lattice";
        case ModelKind::powerlaw: return "powerlaw";
        case ModelKind::exponential: return "exponential";
        case ModelKind::topo_example: return "topo_example";
        case ModelKind::three_point: return "three_point";
        case ModelKind::mirror: return "mirror";
        case ModelKind::explicit_graph: return "explicit";
    }
    return "unknown";
}

ModelKind model_kind_from_string(const std::string& name) {
    for (auto k : {ModelKind::lattice, ModelKind::powerlaw, ModelKind::exponential, ModelKind::topo_example,
                   ModelKind::three_point, ModelKind::mirror, ModelKind::explicit_graph})
        if (to_string(k) == name) return k;
    throw std::invalid_argument("unknown model kind: " + name);
}

GraphForm build_model(const ModelSpec& spec) {
    require(spec.tail_tolerance >= 0.0, "tail tolerance must be nonnegative");
    switch (spec.kind) {
        case ModelKind::lattice: return build_lattice(spec);
        case ModelKind::powerlaw: return build_powerlaw(spec);
        case ModelKind::exponential: return build_exponential(spec);
        case ModelKind::topo_example: return build_topo(spec);
        case ModelKind::three_point: return build_three_point();
        case ModelKind::mirror: return build_mirror(spec);
        case ModelKind::explicit_graph: return build_explicit(spec);
    }
    throw std::invalid_argument("unknown model kind");
}

Vector degree_measure(const GraphForm& g) {
    Vector out = Vector::Zero(g.size());
    for (Index x = 0; x < g.jump.outerSize(); ++x)
        for (SparseMatrix::InnerIterator it(g.jump, x); it; ++it) out(it.col()) += it.value();
    return out;
}

Eigen::VectorXi vertex_degree(const GraphForm& g) {
    Eigen::VectorXi out = Eigen::VectorXi::Zero(g.size());
    for (Index x = 0; x < g.jump.outerSize(); ++x)
        for (SparseMatrix::InnerIterator it(g.jump, x); it; ++it)
            if (it.value() != 0.0) ++out(it.col());
    return out;
}

std::vector<Diagnostic> validate(const GraphForm& g) {
    using K = Diagnostic::Kind;
    std::vector<Diagnostic> out;
    const Index n = g.size();
    auto shape = [&](bool ok, const char* what) {
        if (!ok) out.push_back({K::shape, -1, -1, what});
        return ok;
    };
    bool ok = shape(g.jump.rows() == n && g.jump.cols() == n, "jump matrix is not n x n");
    ok = shape(g.killing.size() == n, "killing vector size differs from n") && ok;
    ok = shape(g.interior.size() == static_cast<std::size_t>(n), "interior flags size differs from n") && ok;
    ok = shape(g.tail_bound.size() == n, "tail bound size differs from n") && ok;
    ok = shape(g.coords.cols() == 0 || g.coords.rows() == n, "coordinate rows differ from n") && ok;
    if (!ok) return out;

    std::set<std::pair<Index, Index>> asym;
    for (Index c = 0; c < g.jump.outerSize(); ++c) {
        for (SparseMatrix::InnerIterator it(g.jump, c); it; ++it) {
            const Index x = it.row(), y = it.col();
            const double w = it.value();
            if (x == y) {
                if (w != 0.0) out.push_back({K::diagonal, x, x, "nonzero diagonal jump weight"});
                continue;
            }
            if (!(w >= 0.0)) out.push_back({K::negative_jump, x, y, "negative jump weight"});
            if (g.jump.coeff(y, x) != w) asym.emplace(std::min(x, y), std::max(x, y));
        }
    }
    for (auto [x, y] : asym) out.push_back({K::symmetry, x, y, "j(x,y) != j(y,x)"});

    const Vector deg = degree_measure(g);
    for (Index x = 0; x < n; ++x) {
        if (!(g.mass(x) > 0.0) || !std::isfinite(g.mass(x)))
            out.push_back({K::mass, x, -1, "mass must be positive and finite"});
        if (!(g.killing(x) >= 0.0)) out.push_back({K::killing, x, -1, "killing weight must be nonnegative"});
        if (!std::isfinite(deg(x))) out.push_back({K::degree, x, -1, "degree measure is not finite"});
        if (g.interior[x] && !(g.tail_bound(x) <= g.tail_tolerance))
            out.push_back({K::tail, x, -1, "interior vertex exceeds the tail tolerance"});
    }
    return out;
}

std::string format_number(double value) {
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    if (std::isnan(value)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

void write_graph_dump(std::ostream& os, const GraphForm& g) {
    std::vector<ExplicitEdge> edges;
    for (Index c = 0; c < g.jump.outerSize(); ++c)
        for (SparseMatrix::InnerIterator it(g.jump, c); it; ++it)
            if (it.row() < it.col() && it.value() != 0.0) edges.push_back({it.row(), it.col(), it.value()});
    std::sort(edges.begin(), edges.end(),
              [](const auto& a, const auto& b) { return std::tie(a.x, a.y) < std::tie(b.x, b.y); });

    os << g.size() << ' ' << edges.size() << '\n';
    for (Index x = 0; x < g.size(); ++x) {
        os << x << ' ' << format_number(g.mass(x)) << ' ' << format_number(g.killing(x)) << ' '
           << (g.interior[x] ? 1 : 0);
        for (Index i = 0; i < g.coords.cols(); ++i) os << ' ' << g.coords(x, i);
        os << '\n';
    }
    for (const auto& e : edges) os << e.x << ' ' << e.y << ' ' << format_number(e.weight) << '\n';
}

GraphForm read_graph_dump(std::istream& is) {
    std::string line;
    auto next = [&]() {
        if (!std::getline(is, line)) throw std::invalid_argument("graph dump: unexpected end of input");
        return std::istringstream(line);
    };
    Index n = 0, edges = 0;
    {
        auto ls = next();
        if (!(ls >> n >> edges) || n < 0 || edges < 0) throw std::invalid_argument("graph dump: bad header");
    }
    GraphForm g;
    g.mass.resize(n);
    g.killing.resize(n);
    g.tail_bound = Vector::Zero(n);
    g.interior.assign(n, false);
    std::vector<std::vector<int>> coords(n);
    for (Index x = 0; x < n; ++x) {
        auto ls = next();
        Index id;
        int flag;
        if (!(ls >> id >> g.mass(x) >> g.killing(x) >> flag) || id != x)
            throw std::invalid_argument("graph dump: bad vertex line " + std::to_string(x));
        g.interior[x] = flag != 0;
        int c;
        while (ls >> c) coords[x].push_back(c);
    }
    const std::size_t d = n > 0 ? coords[0].size() : 0;
    g.coords.resize(d > 0 ? n : 0, static_cast<Index>(d));
    for (Index x = 0; x < n && d > 0; ++x) {
        if (coords[x].size() != d) throw std::invalid_argument("graph dump: inconsistent coordinates");
        for (std::size_t i = 0; i < d; ++i) g.coords(x, static_cast<Index>(i)) = coords[x][i];
    }
    std::vector<Triplet> t;
    for (Index e = 0; e < edges; ++e) {
        auto ls = next();
        Index x, y;
        double w;
        if (!(ls >> x >> y >> w) || x < 0 || y >= n || x >= y)
            throw std::invalid_argument("graph dump: bad edge line " + std::to_string(e));
        add_edge(t, x, y, w);
    }
    return finish(std::move(g), t);
}

GraphForm restrict_to(const GraphForm& g, const VertexSet& keep) {
    const Index n = static_cast<Index>(keep.size());
    std::vector<Index> position(g.size(), -1);
    for (Index i = 0; i < n; ++i) position[keep[i]] = i;

    GraphForm r;
    r.mass = g.mass(keep);
    r.killing = g.killing(keep);
    r.tail_bound = g.tail_bound(keep);
    r.tail_tolerance = g.tail_tolerance;
    if (g.has_coords()) r.coords = g.coords(keep, Eigen::all);
    for (Index x : keep) {
        r.interior.push_back(g.interior[x]);
        if (!g.labels.empty()) r.labels.push_back(g.labels[x]);
    }
    std::vector<Triplet> t;
    for (Index c = 0; c < g.jump.outerSize(); ++c)
        for (SparseMatrix::InnerIterator it(g.jump, c); it; ++it)
            if (position[it.row()] >= 0 && position[it.col()] >= 0)
                t.emplace_back(position[it.row()], position[it.col()], it.value());
    r.jump.resize(n, n);
    r.jump.setFromTriplets(t.begin(), t.end());
    return r;
}

}  // namespace dflab
