#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <variant>

#include "dflab/graph_form.hpp"

namespace dflab {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Symmetric nonnegative per-edge Lipschitz budgets on the support of j.
struct EdgeBudgetSet {
    SparseMatrix budgets;
};

/// Budgets from (u(x)-u(y))^2 <= min(1, m(x)/m'(x)), taken over both
/// orientations of every edge.
EdgeBudgetSet budgets_m1(const GraphForm& g);
/// Budgets from (u(x)-u(y))^2 <= min(1, m(x)/(j(x,y) deg(x))), both orientations.
EdgeBudgetSet budgets_m2(const GraphForm& g);
/// Budget w on every edge of g.
EdgeBudgetSet budgets_constant(const GraphForm& g, double w);

enum class Profile {
    identity,  ///< f(t) = t
    power      ///< f(t) = min(t^beta, t)
};

/// Pseudo-metric on a window: a dense table, a profile of the Euclidean
/// lattice distance, a shortest-path metric under edge budgets, or the
/// pointwise maximum of two metrics. Distances may be +inf.
class PseudoMetric {
public:
    struct Table {
        Matrix distances;
    };
    struct Coordinate {
        Eigen::MatrixXi coords;
        double scale = 1.0;
        Profile profile = Profile::identity;
        double beta = 1.0;
    };
    struct Path;
    struct Max {
        std::shared_ptr<const PseudoMetric> first;
        std::shared_ptr<const PseudoMetric> second;
    };

    static PseudoMetric table(Matrix distances);
    static PseudoMetric coordinate(const GraphForm& g, double scale, Profile profile = Profile::identity,
                                   double beta = 1.0);
    static PseudoMetric path(const EdgeBudgetSet& budgets);
    static PseudoMetric max_of(const PseudoMetric& a, const PseudoMetric& b);

    Index size() const;
    double operator()(Index x, Index y) const;
    /// Distances from x to every vertex.
    Vector row(Index x) const;
    Matrix to_table() const;
    /// t * rho
    PseudoMetric scaled(double t) const;
    std::string kind_name() const;

    /// Lattice coordinate metric evaluated at a lattice distance.
    double profile_value(double lattice_distance) const;

    const auto& representation() const { return rep_; }

private:
    std::variant<Table, Coordinate, std::shared_ptr<const Path>, Max> rep_;
};

struct IntrinsicWitness {
    Vector m_b;
    Vector m_c;

    /// m_b = m, m_c = 0.
    static IntrinsicWitness full(const GraphForm& g);
    /// Empty string iff m_b + m_c <= m, both nonnegative and m_c = 0.
    std::string check(const GraphForm& g) const;
};

// ---------------------------------------------------------------------------
// Distance functions, cut-offs, balls

/// rho_A(x) = min_{y in A} rho(x, y). Throws for empty A.
Vector distance_to_set(const PseudoMetric& rho, const VertexSet& set);

/// eta_{E,a} = (1 - rho_E / a)^+
Vector cutoff(const PseudoMetric& rho, const VertexSet& set, double a);

/// B_r(E) = {rho_E <= r}
VertexSet ball(const PseudoMetric& rho, const VertexSet& set, double r);

/// A_r(E) = B_r(E) intersected with B_r(E^c)
VertexSet annulus(const PseudoMetric& rho, const VertexSet& set, double r);

VertexSet complement(Index n, const VertexSet& set);
VertexSet set_union(const VertexSet& a, const VertexSet& b);
bool is_subset(const VertexSet& a, const VertexSet& b);

struct TriangleReport {
    double max_violation = 0.0;   ///< max of rho(x,y) - rho(x,z) - rho(z,y)
    double max_asymmetry = 0.0;
    double max_diagonal = 0.0;
    double min_value = 0.0;
    bool exhaustive = true;

    bool ok(double tol) const {
        return max_violation <= tol && max_asymmetry <= tol && max_diagonal <= tol && min_value >= 0.0;
    }
};

/// Exhaustive over all triples for n <= 300, otherwise 10^5 sampled triples.
TriangleReport check_pseudometric(const PseudoMetric& rho, std::uint64_t seed = 0);

// ---------------------------------------------------------------------------
// Intrinsic-metric checks

struct RowsumReport {
    Vector row_sum;  ///< sum_y rho(x,y)^2 j(x,y)
    Vector slack;    ///< m(x) - row_sum(x)
    double min_interior_slack = kInfinity;
    Index worst_vertex = -1;
    VertexSet boundary_deficits;  ///< boundary vertices with negative slack
    bool pass = false;
};

/// Passes iff slack(x) >= -1e-12 m(x) at every interior vertex.
RowsumReport intrinsic_rowsum_check(const GraphForm& g, const PseudoMetric& rho);

/// Largest ratio row_sum(x) / m(x) over the given vertices.
double max_rowsum_ratio(const GraphForm& g, const PseudoMetric& rho, const VertexSet& vertices);

/// c such that c * rho has row sums at most m on the interior.
double intrinsic_scale(const GraphForm& g, const PseudoMetric& rho);

struct DefinitionalSample {
    VertexSet set;
    double truncation = kInfinity;
};

/// All singletons, `random_sets` random subsets, each with T in
/// {inf, median positive distance, 1% of that median}.
std::vector<DefinitionalSample> default_definitional_samples(const PseudoMetric& rho, std::uint64_t seed,
                                                             int random_sets = 50);
/// Every nonempty subset with the same truncations (n <= 16).
std::vector<DefinitionalSample> exhaustive_definitional_samples(const PseudoMetric& rho);

struct DefinitionalReport {
    double worst_violation = -kInfinity;  ///< max of mu_b(rho_A min T)(x) - m_b(x)
    Index worst_vertex = -1;
    std::size_t worst_sample = 0;
    bool pass = false;
};

/// Evaluated at interior vertices; passes iff worst violation <= 1e-12 scale.
DefinitionalReport definitional_check(const GraphForm& g, const PseudoMetric& rho, const IntrinsicWitness& witness,
                                      const std::vector<DefinitionalSample>& samples);

/// Shortest-path metric under the budgets.
PseudoMetric budget_metric(const GraphForm& g, const EdgeBudgetSet& budgets);

/// Single-source shortest paths under edge budgets.
Vector budget_distances(const EdgeBudgetSet& budgets, const VertexSet& sources);

/// max{ rho(x,y) : j(x,y) > 0 }
double jump_size(const GraphForm& g, const PseudoMetric& rho);

enum class JumpTrend { finite, infinite, indeterminate };
std::string to_string(JumpTrend trend);
/// Classifies jump sizes measured on growing windows.
JumpTrend classify_jump_trend(const std::vector<double>& sizes);

PseudoMetric max_combine(const PseudoMetric& a, const PseudoMetric& b);

using Anchor = std::pair<Index, double>;

/// u(x) = min_i (g_i + rho(x, p_i)). Throws if |g_i - g_j| > rho(p_i, p_j).
Vector mcshane_extension(const PseudoMetric& rho, const std::vector<Anchor>& anchors);

/// Random anchors whose values are admissible for rho.
std::vector<Anchor> random_admissible_anchors(const PseudoMetric& rho, int count, std::mt19937_64& rng);

/// McShane extension of `count` random admissible anchors.
Vector lipschitz_sample(const PseudoMetric& rho, int count, std::uint64_t seed);

struct RoundtripReport {
    double deviation = 0.0;   ///< |sup_f f(x) - rho(x,y)| via the attaining f = rho(., y)
    double max_excess = 0.0;  ///< largest rho(x,z) - rho(y,z) - rho(x,y) (triangle defect)
};

RoundtripReport roundtrip_check(const PseudoMetric& rho);

struct CutoffBoundsReport {
    Vector measure;                  ///< mu_d(eta_{E,a})
    double max_scaled_ratio = 0.0;   ///< max a^2 mu(x) / m(x) over interior
    double outside_annulus = 0.0;    ///< max mu(x) outside A_{s+a}(E)
    bool cutoff_bound = false;       ///< mu <= m / a^2
    bool annulus_bound = false;      ///< a^2 mu <= 1_{A_{s+a}(E)} m
};

CutoffBoundsReport cutoff_energy_bounds(const GraphForm& g, const PseudoMetric& rho, const VertexSet& set, double a,
                                        double jump);

struct SetRowsumReport {
    double lhs = 0.0;
    double rhs = 0.0;
    bool pass = false;
};

/// sum_{x in E} sum_y rho(x,y)^2 j(x,y) <= m_b(E)
SetRowsumReport set_rowsum_check(const GraphForm& g, const PseudoMetric& rho, const IntrinsicWitness& witness,
                            const VertexSet& set);

/// Dense lower-triangular table: header `n`, then row x holds rho(x, 0..x).
void write_metric_dump(std::ostream& os, const PseudoMetric& rho);

/// Least-squares slope of log(y) against x over entries with y > 0.
double fit_log_slope(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace dflab
