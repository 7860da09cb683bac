#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dflab/energy.hpp"
#include "dflab/metrics.hpp"

namespace dflab {

/// nu_minus(u) <= q E(u) + c_q |u|^2 with q in (0, 1).
struct BoundCertificate {
    double q = 0.01;
    double c_q = 0.0;
};

/// h = E + nu_plus - nu_minus.
struct PerturbedForm {
    GraphForm base;
    Vector nu_plus;
    Vector nu_minus;
    std::optional<BoundCertificate> certificate;

    static PerturbedForm unperturbed(GraphForm g);

    /// nu_plus - nu_minus
    Vector nu() const;
    /// The stored certificate, or q = 0.01, c_q = 0 when nu_minus vanishes.
    /// Throws when nu_minus is nonzero and no certificate is present.
    BoundCertificate effective_certificate() const;
};

// ---------------------------------------------------------------------------
// Spectra

inline constexpr Index kDenseLimit = 4000;

/// Sorted eigenvalues of H via the m-symmetrised dense matrix (n <= 4000).
Vector spectrum(const GraphForm& g, const VectorRef& nu);
Vector spectrum(const GraphForm& g);

/// Sorted eigenvalues of H with Dirichlet conditions outside `vertices`.
Vector restricted_spectrum(const GraphForm& g, const VectorRef& nu, const VertexSet& vertices);

struct ExtremeEigenvalues {
    double min = 0.0;
    double max = 0.0;
    int steps = 0;
};

/// Smallest and largest eigenvalue of H by Lanczos with full
/// reorthogonalisation; used above the dense limit.
ExtremeEigenvalues extreme_eigenvalues(const GraphForm& g, const VectorRef& nu, int steps = 300,
                                       std::uint64_t seed = 0);

/// Sparse M^{-1/2} (2(D-J) + diag(k+nu)) M^{-1/2}.
SparseMatrix symmetric_generator(const GraphForm& g, const VectorRef& nu);

/// min_i |lambda - eigenvalues(i)|
double distance_to_spectrum(const Vector& eigenvalues, double lambda);

struct FormBoundReport {
    double min_eigenvalue = 0.0;  ///< of q L + c_q M - N
    double scale = 0.0;
    bool pass = false;
};

/// Checks nu_minus(u) <= q E(u) + c_q |u|^2 as a matrix inequality.
FormBoundReport form_bound_check(const GraphForm& g, const VectorRef& nu_minus, double q, double c_q);

/// Smallest admissible c_q, from the top eigenvalue of M^{-1/2}(N - qL)M^{-1/2}.
double min_cq(const GraphForm& g, const VectorRef& nu_minus, double q);

// ---------------------------------------------------------------------------
// Generalised eigenfunctions

struct EigenCandidate {
    Vector u;
    double lambda = 0.0;
    double residual_sup = 0.0;  ///< max over interior of |(Hu)(x) - lambda u(x)|
    double residual_l2 = 0.0;   ///< m-weighted l2 norm of the same over the interior
};

EigenCandidate gen_eigen_residual(const GraphForm& g, const VectorRef& nu, const VectorRef& u, double lambda);

struct Wave {
    Vector u;
    double lambda = 0.0;
};

/// u(x) = prod_i cos(theta_i x_i), lambda = 4 w sum_i (1 - cos theta_i) / m.
Wave plane_wave(const GraphForm& g, const std::vector<double>& theta);
/// u(x) = prod_i cosh(mu_i x_i), lambda = 4 w sum_i (1 - cosh mu_i) / m.
Wave cosh_wave(const GraphForm& g, const std::vector<double>& mu);

/// Eigenvector of the interior-restricted operator for its smallest eigenvalue,
/// positive on the interior and zero elsewhere.
Wave perron_vector(const GraphForm& g, const VectorRef& nu);

// ---------------------------------------------------------------------------
// Ground state transform and its consequences

enum class GstVariant { inverse, multiplicative };
GstVariant gst_variant_from_string(const std::string& name);
std::string to_string(GstVariant variant);

struct GstReport {
    double lhs = 0.0;  ///< h(.,.) - lambda (.,.)
    double rhs = 0.0;  ///< sum u(x) u(y) j(x,y) Delta Delta
    double residual = 0.0;
    double scale = 0.0;

    double relative() const { return scale > 0.0 ? residual / scale : residual; }
};

GstReport gst_check(const GraphForm& g, const VectorRef& nu, const VectorRef& u, double lambda, const VectorRef& phi,
                    const VectorRef& psi, GstVariant variant);

struct PositiveSolutionReport {
    double lambda_lo = 0.0;  ///< min over interior of (Hu)/u
    double lambda_hi = 0.0;  ///< max over interior of (Hu)/u
    double lambda_min = 0.0; ///< bottom of the interior-restricted spectrum
    double margin = 0.0;     ///< lambda_min - lambda_lo
    bool pass = false;
};

PositiveSolutionReport allegretto_piepenbrink(const GraphForm& g, const VectorRef& nu, const VectorRef& u);

struct CaccioppoliReport {
    double lhs = 0.0;             ///< sum eta^2 mu_d(u)
    double norm_term = 0.0;       ///< |u eta|^2
    double eta_term = 0.0;        ///< sum u^2 mu_d(eta)
    double q = 0.0;
    double c_q = 0.0;
    double split = 0.0;           ///< the free parameter S of the absorption step
    double constant = 0.0;
    double rhs = 0.0;
    double precondition_gap = 0.0;  ///< h(u, u eta^2) - lambda (u, u eta^2)
    bool pass = false;
};

/// Constant 2/(1-q) max((lambda + c_q)^+, q + 1/(4S)) at S = (1-q)/(8 max(q,1-q)^2).
double caccioppoli_constant(double lambda, double q, double c_q);

CaccioppoliReport caccioppoli(const PerturbedForm& form, const VectorRef& u, double lambda, const VectorRef& eta);

struct ShnolReport {
    double lhs = 0.0;             ///< |(h - lambda)(u eta1^2, v)|^2
    double energy_v = 0.0;        ///< E_1(v)
    double cutoff_term = 0.0;     ///< sum u^2 mu_b(eta1)
    double annulus_cutoff_term = 0.0;  ///< sum u^2 mu_b(eta2)
    double annulus_mass = 0.0;    ///< |u 1_{A_{2a+s}(E)}|^2
    double cauchy_bound = 0.0;    ///< 2 E(v)^{1/2} (sum u^2 mu(eta1))^{1/2}
    double short_bound = 0.0;     ///< (2/a) |v| (C_cacc (annulus terms))^{1/2}
    double long_bound = 0.0;      ///< (4/s) |v| (sum u^2 mu(eta1))^{1/2}
    double caccioppoli_constant = 0.0;
    double constant = 0.0;
    double rhs = 0.0;
    bool pass = false;
};

/// Constant (2 + 4/s)^2 + 4 C_cacc / a^2.
double shnol_constant(double a, double s, double caccioppoli_constant);

ShnolReport shnol_bound(const PerturbedForm& form, const PseudoMetric& rho, const VectorRef& u, double lambda,
                        const VertexSet& set, double a, double s, const VectorRef& v);

struct ShnolRatioReport {
    std::vector<int> n;
    std::vector<double> bulk;           ///< |1_{E_n} u|^2
    std::vector<double> finite_ratio;   ///< |1_{A_{2s+2a}(E_n)} u|^2 / |1_{E_n} u|^2
    std::vector<double> general_ratio;  ///< cut-off terms plus annulus mass over |1_{E_n} u|^2
    double fitted_slope = 0.0;          ///< log ratio against log n
    double threshold = 0.05;
    bool in_spectrum = false;
    std::string verdict;
    double distance = kInfinity;        ///< dist(lambda, window spectrum) when supplied
};

ShnolRatioReport shnol_ratio(const PerturbedForm& form, const PseudoMetric& rho, const VectorRef& u, double lambda,
                             const std::vector<VertexSet>& shells, double a, double s, double threshold = 0.05,
                             const Vector* window_spectrum = nullptr);

struct ShellDecomposition {
    double k = 0.0;
    std::vector<VertexSet> sets;    ///< E_n
    std::vector<VertexSet> shells;  ///< F_n
    Vector weight;                  ///< w
};

struct ConditionCReport {
    ShellDecomposition decomposition;
    std::vector<double> shell_mass;               ///< m(F_n)
    std::vector<std::vector<double>> decay;       ///< m(F_n) e^{-gamma n} per gamma
    std::vector<double> gammas{0.1, 1.0};
    std::vector<bool> decays;                     ///< per gamma
    std::vector<bool> annulus_in_shells;          ///< A_k(E_n) inside F_{n+1} and F_n
    std::vector<double> weighted_partial_sums;    ///< partial sums of |w 1_{F_n} u|^2
};

/// Shells E_{n+1} = B_k(E_n) with k = 2s + 2a, grown while they stay inside
/// the interior. Throws when fewer than three shells fit.
ConditionCReport condition_c(const GraphForm& g, const PseudoMetric& rho, const VertexSet& first, double a, double s,
                             const Vector* u = nullptr);

/// True iff the tail of the sequence decays: last value at most 1% of the
/// maximum and the second half is nonincreasing.
bool decays_to_zero(const std::vector<double>& values);

}  // namespace dflab
