#include "dflab/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "dflab/energy.hpp"

#ifndef DFLAB_SCENARIO_DIR
#define DFLAB_SCENARIO_DIR "scenarios"
#endif

namespace dflab {

namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------------
// Small helpers

Json num(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    return x;
}

Json num_list(const std::vector<double>& xs) {
    Json out = Json::array();
    for (double x : xs) out.push_back(num(x));
    return out;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

void allow_keys(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
}

template <typename T>
T get_required(const Json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
    return get_or<T>(j, key, T{});
}

Json vertex_name(const GraphForm& g, Index x) {
    if (!g.labels.empty()) return g.labels[x];
    if (g.has_coords()) {
        Json c = Json::array();
        for (Index i = 0; i < g.dimension(); ++i) c.push_back(g.coords(x, i));
        return c;
    }
    return x;
}

std::string vertex_text(const GraphForm& g, Index x) {
    const Json n = vertex_name(g, x);
    return n.is_string() ? n.get<std::string>() : n.dump();
}

Json vertex_list(const GraphForm& g, const VertexSet& set) {
    Json out = Json::array();
    for (Index x : set) out.push_back(vertex_name(g, x));
    return out;
}

Index parse_vertex(const Json& j, const GraphForm& g) {
    Index x = -1;
    if (j.is_number_integer()) x = j.get<Index>();
    else if (j.is_string()) x = g.find_label(j.get<std::string>());
    else if (j.is_array()) {
        Eigen::VectorXi c(static_cast<Index>(j.size()));
        for (std::size_t i = 0; i < j.size(); ++i) c(static_cast<Index>(i)) = j[i].get<int>();
        x = g.find_coords(c);
    }
    if (x < 0 || x >= g.size()) throw ConfigError("unknown vertex " + j.dump());
    return x;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
    return out + "\"";
}

std::string timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm utc{};
    gmtime_r(&now, &utc);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &utc);
    return buf;
}

// ---------------------------------------------------------------------------
// Waves

struct WaveSpec {
    std::string kind;
    std::vector<double> angles;
    Json echo;
};

WaveSpec parse_wave(const Json& j) {
    allow_keys(j, {"kind", "theta", "theta_over_pi", "mu", "expect_verdict"}, "wave");
    WaveSpec w;
    w.kind = get_required<std::string>(j, "kind", "wave");
    w.echo = j;
    if (w.kind == "plane") {
        if (j.contains("theta_over_pi")) {
            for (double t : j.at("theta_over_pi").get<std::vector<double>>()) w.angles.push_back(t * std::numbers::pi);
        } else {
            w.angles = get_required<std::vector<double>>(j, "theta", "plane wave");
        }
    } else if (w.kind == "cosh") {
        w.angles = get_required<std::vector<double>>(j, "mu", "cosh wave");
    } else if (w.kind != "perron") {
        throw ConfigError("unknown wave kind: " + w.kind);
    }
    return w;
}

Wave make_wave(const WaveSpec& spec, const PerturbedForm& form) {
    if (spec.kind == "plane") return plane_wave(form.base, spec.angles);
    if (spec.kind == "cosh") return cosh_wave(form.base, spec.angles);
    return perron_vector(form.base, form.nu());
}

// ---------------------------------------------------------------------------
// Context

struct Tolerances {
    double identity = 1e-12;
    double inequality = 1e-12;
    double gst = 1e-9;
    double capacity = 1e-10;
    double jump = 1e-12;
    double spectrum = 1e-10;
    double ratio_threshold = 0.05;

    Json to_json() const {
        return {{"identity", identity}, {"inequality", inequality}, {"gst", gst}, {"capacity", capacity},
                {"jump", jump}, {"spectrum", spectrum}, {"ratio_threshold", ratio_threshold}};
    }
};

Tolerances parse_tolerances(const Json* j) {
    Tolerances t;
    if (!j) return t;
    allow_keys(*j, {"identity", "inequality", "gst", "capacity", "jump", "spectrum", "ratio_threshold"}, "tolerances");
    t.identity = get_or(*j, "identity", t.identity);
    t.inequality = get_or(*j, "inequality", t.inequality);
    t.gst = get_or(*j, "gst", t.gst);
    t.capacity = get_or(*j, "capacity", t.capacity);
    t.jump = get_or(*j, "jump", t.jump);
    t.spectrum = get_or(*j, "spectrum", t.spectrum);
    t.ratio_threshold = get_or(*j, "ratio_threshold", t.ratio_threshold);
    return t;
}

struct Context {
    Json config;
    PerturbedForm form;
    std::optional<PseudoMetric> rho;
    std::optional<std::uint64_t> seed;
    Tolerances tol;

    const GraphForm& g() const { return form.base; }

    const PseudoMetric& metric(const std::string& task) const {
        if (!rho) throw ConfigError(task + " needs a metric");
        return *rho;
    }

    std::uint64_t task_seed(const std::string& task, std::size_t index) const {
        if (!seed) throw ConfigError(task + " is randomised and needs a seed");
        return splitmix64(*seed ^ splitmix64(index + 1));
    }
};

using TaskFn = std::function<void(const Context&, const Json&, std::size_t, TaskResult&)>;

double resolve_length(const Json& task, const char* key, double jump, const std::string& where) {
    if (!task.contains(key)) return jump;
    const Json& v = task.at(key);
    if (v.is_string()) {
        if (v.get<std::string>() == "jump") return jump;
        throw ConfigError(where + ": '" + key + "' must be a number or \"jump\"");
    }
    return v.get<double>();
}

Vector random_interior_vector(const GraphForm& g, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    Vector v = Vector::Zero(g.size());
    for (Index x = 0; x < g.size(); ++x)
        if (g.interior[x]) v(x) = normal(rng);
    return v;
}

// ---------------------------------------------------------------------------
// Tasks

void task_verify_metric(const Context& ctx, const Json& task, std::size_t index, TaskResult& r) {
    allow_keys(task, {"type", "name", "expect", "samples", "random_sets", "roundtrip"}, "verify-metric");
    const GraphForm& g = ctx.g();
    const PseudoMetric& rho = ctx.metric("verify-metric");
    const std::string mode = get_or<std::string>(task, "samples", "default");
    const int random_sets = get_or(task, "random_sets", 50);

    const TriangleReport tri = check_pseudometric(rho, ctx.seed.value_or(0));
    const RowsumReport rows = intrinsic_rowsum_check(g, rho);
    std::vector<DefinitionalSample> samples;
    if (mode == "exhaustive") samples = exhaustive_definitional_samples(rho);
    else if (mode == "default") samples = default_definitional_samples(rho, ctx.task_seed("verify-metric", index), random_sets);
    else throw ConfigError("verify-metric: samples must be \"default\" or \"exhaustive\"");
    const DefinitionalReport def = definitional_check(g, rho, IntrinsicWitness::full(g), samples);

    Json out;
    out["metric"] = rho.kind_name();
    out["triangle"] = {{"max_violation", num(tri.max_violation)}, {"max_asymmetry", num(tri.max_asymmetry)},
                       {"max_diagonal", num(tri.max_diagonal)}, {"exhaustive", tri.exhaustive},
                       {"pass", tri.ok(ctx.tol.identity)}};
    out["rowsum"] = {{"pass", rows.pass},
                     {"min_interior_slack", num(rows.min_interior_slack)},
                     {"worst_vertex", rows.worst_vertex >= 0 ? vertex_name(g, rows.worst_vertex) : Json()},
                     {"boundary_deficits", static_cast<int>(rows.boundary_deficits.size())}};
    Json worst;
    if (def.worst_vertex >= 0) {
        const DefinitionalSample& s = samples[def.worst_sample];
        worst = {{"set", vertex_list(g, s.set)}, {"truncation", num(s.truncation)}};
    }
    out["definitional"] = {{"pass", def.pass},
                           {"samples", static_cast<int>(samples.size())},
                           {"worst_violation", num(def.worst_violation)},
                           {"worst_vertex", def.worst_vertex >= 0 ? vertex_name(g, def.worst_vertex) : Json()},
                           {"worst_sample", worst}};
    r.verdict = tri.ok(ctx.tol.identity) && rows.pass && def.pass;
    if (get_or(task, "roundtrip", false)) {
        const RoundtripReport rt = roundtrip_check(rho);
        out["roundtrip"] = {{"deviation", num(rt.deviation)}, {"max_excess", num(rt.max_excess)}};
        r.verdict = r.verdict && rt.deviation == 0.0;
    }
    r.record["outputs"] = out;

    CsvTable t{"slack", {"vertex", "interior", "row_sum", "slack"}, {}};
    for (Index x = 0; x < g.size(); ++x)
        t.rows.push_back({vertex_text(g, x), g.interior[x] ? "1" : "0", format_number(rows.row_sum(x)),
                          format_number(rows.slack(x))});
    r.tables.push_back(std::move(t));
}

void task_jump_size(const Context& ctx, const Json& task, std::size_t, TaskResult& r) {
    allow_keys(task, {"type", "name", "expect", "expected", "windows", "expect_trend"}, "jump-size");
    const double s = jump_size(ctx.g(), ctx.metric("jump-size"));
    Json out{{"jump_size", num(s)}};
    r.verdict = true;
    if (task.contains("expected")) {
        const double e = task.at("expected").get<double>();
        out["expected"] = e;
        out["error"] = num(std::abs(s - e));
        r.verdict = std::abs(s - e) <= ctx.tol.jump * std::max(1.0, std::abs(e));
    }
    if (task.contains("windows")) {
        const std::vector<int> radii = task.at("windows").get<std::vector<int>>();
        std::vector<double> sizes;
        CsvTable t{"jump_trend", {"radius", "jump_size"}, {}};
        for (int radius : radii) {
            Json model = ctx.config.at("model");
            model["radius"] = radius;
            const GraphForm g = build_model(parse_model(model));
            sizes.push_back(jump_size(g, parse_metric(ctx.config.at("metric"), g)));
            t.rows.push_back({std::to_string(radius), format_number(sizes.back())});
        }
        const JumpTrend trend = classify_jump_trend(sizes);
        out["trend"] = {{"radii", radii}, {"sizes", num_list(sizes)}, {"classification", to_string(trend)}};
        if (task.contains("expect_trend"))
            r.verdict = r.verdict && to_string(trend) == task.at("expect_trend").get<std::string>();
        r.tables.push_back(std::move(t));
    }
    r.record["outputs"] = out;
}

void task_capacity(const Context& ctx, const Json& task, std::size_t index, TaskResult& r) {
    allow_keys(task, {"type", "name", "expect", "set", "expected", "nested_pairs"}, "capacity");
    const GraphForm& g = ctx.g();
    if (!task.contains("set")) throw ConfigError("capacity: missing key 'set'");
    const VertexSet set = parse_vertex_set(task.at("set"), g, ctx.rho ? &*ctx.rho : nullptr);
    const CapacityResult cap = capacity(g, set);
    Json out{{"set", vertex_list(g, set)}, {"value", num(cap.value)}};
    r.verdict = cap.minimizer.minCoeff() >= -ctx.tol.inequality && cap.minimizer.maxCoeff() <= 1.0 + ctx.tol.inequality;
    if (task.contains("expected")) {
        const double e = task.at("expected").get<double>();
        out["expected"] = e;
        out["error"] = num(std::abs(cap.value - e));
        r.verdict = r.verdict && std::abs(cap.value - e) <= ctx.tol.capacity * std::max(1.0, std::abs(e));
    }
    const int pairs = get_or(task, "nested_pairs", 0);
    if (pairs > 0) {
        std::mt19937_64 rng(ctx.task_seed("capacity", index));
        std::uniform_int_distribution<Index> pick(0, g.size() - 1);
        std::bernoulli_distribution coin(0.5);
        int monotone = 0;
        double worst = -kInfinity;
        for (int i = 0; i < pairs; ++i) {
            VertexSet big, small;
            for (Index x = 0; x < g.size(); ++x)
                if (coin(rng)) big.push_back(x);
            if (big.empty()) big.push_back(pick(rng));
            for (Index x : big)
                if (coin(rng)) small.push_back(x);
            if (small.empty()) small.push_back(big.front());
            const double a = capacity(g, small).value, b = capacity(g, big).value;
            worst = std::max(worst, a - b);
            if (a <= b + ctx.tol.inequality * std::max(1.0, b)) ++monotone;
        }
        out["monotonicity"] = {{"pairs", pairs}, {"passed", monotone}, {"max_excess", num(worst)}};
        r.verdict = r.verdict && monotone == pairs;
    }
    r.record["outputs"] = out;
    CsvTable t{"minimizer", {"vertex", "in_set", "value"}, {}};
    std::vector<char> in(g.size(), 0);
    for (Index x : set) in[x] = 1;
    for (Index x = 0; x < g.size(); ++x)
        t.rows.push_back({vertex_text(g, x), in[x] ? "1" : "0", format_number(cap.minimizer(x))});
    r.tables.push_back(std::move(t));
}

void task_spectrum(const Context& ctx, const Json& task, std::size_t index, TaskResult& r) {
    allow_keys(task, {"type", "name", "expect", "min_at_least", "max_at_least", "max_at_most"}, "spectrum");
    const GraphForm& g = ctx.g();
    const Vector nu = ctx.form.nu();
    double lo, hi;
    Json out;
    if (g.size() <= kDenseLimit) {
        const Vector eig = spectrum(g, nu);
        lo = eig(0);
        hi = eig(eig.size() - 1);
        out["mode"] = "dense";
        CsvTable t{"eigenvalues", {"index", "eigenvalue"}, {}};
        for (Index i = 0; i < eig.size(); ++i) t.rows.push_back({std::to_string(i), format_number(eig(i))});
        r.tables.push_back(std::move(t));
    } else {
        const ExtremeEigenvalues ex = extreme_eigenvalues(g, nu, 300, ctx.seed.value_or(0) + index);
        lo = ex.min;
        hi = ex.max;
        out["mode"] = "extremes";
        out["lanczos_steps"] = ex.steps;
    }
    out["size"] = g.size();
    out["min"] = num(lo);
    out["max"] = num(hi);
    const double scale = std::max({1.0, std::abs(lo), std::abs(hi)});
    r.verdict = true;
    if (ctx.form.nu_minus.cwiseAbs().maxCoeff() == 0.0) {
        out["nonnegative"] = lo >= -ctx.tol.spectrum * scale;
        r.verdict = lo >= -ctx.tol.spectrum * scale;
    }
    if (task.contains("min_at_least")) r.verdict = r.verdict && lo >= task.at("min_at_least").get<double>();
    if (task.contains("max_at_least")) r.verdict = r.verdict && hi >= task.at("max_at_least").get<double>();
    if (task.contains("max_at_most")) r.verdict = r.verdict && hi <= task.at("max_at_most").get<double>();
    r.record["outputs"] = out;
}

void task_gst(const Context& ctx, const Json& task, std::size_t index, TaskResult& r) {
    allow_keys(task, {"type", "name", "expect", "trials", "wave", "support"}, "gst");
    const GraphForm& g = ctx.g();
    const Vector nu = ctx.form.nu();
    const WaveSpec spec = parse_wave(task.contains("wave") ? task.at("wave") : Json{{"kind", "perron"}});
    const Wave w = make_wave(spec, ctx.form);
    const VertexSet support = task.contains("support")
                                  ? parse_vertex_set(task.at("support"), g, ctx.rho ? &*ctx.rho : nullptr)
                                  : g.interior_vertices();
    const int trials = get_or(task, "trials", 200);
    const EigenCandidate cand = gen_eigen_residual(g, nu, w.u, w.lambda);
    const bool nonvanishing = (w.u.array() != 0.0).all();

    std::mt19937_64 rng(ctx.task_seed("gst", index));
    std::normal_distribution<double> normal;
    double worst_inverse = 0.0, worst_mult = 0.0;
    for (int i = 0; i < trials; ++i) {
        Vector phi = Vector::Zero(g.size()), psi = Vector::Zero(g.size());
        for (Index x : support) {
            phi(x) = normal(rng);
            psi(x) = normal(rng);
        }
        if (nonvanishing)
            worst_inverse = std::max(worst_inverse, gst_check(g, nu, w.u, w.lambda, phi, psi, GstVariant::inverse).relative());
        worst_mult =
            std::max(worst_mult, gst_check(g, nu, w.u, w.lambda, phi, psi, GstVariant::multiplicative).relative());
    }
    Json out{{"wave", spec.echo},
             {"lambda", num(w.lambda)},
             {"eigen_residual_sup", num(cand.residual_sup)},
             {"trials", trials},
             {"max_relative_residual", {{"inverse", nonvanishing ? num(worst_inverse) : Json()},
                                        {"multiplicative", num(worst_mult)}}}};
    r.verdict = worst_inverse <= ctx.tol.gst && worst_mult <= ctx.tol.gst;
    bool positive = true;
    for (Index x = 0; x < g.size(); ++x)
        if (w.u(x) < 0.0 || (g.interior[x] && !(w.u(x) > 0.0))) positive = false;
    if (positive && g.interior_vertices().size() <= static_cast<std::size_t>(kDenseLimit)) {
        const PositiveSolutionReport ap = allegretto_piepenbrink(g, nu, w.u);
        out["positive_solution"] = {{"lambda_lo", num(ap.lambda_lo)}, {"lambda_hi", num(ap.lambda_hi)},
                                    {"lambda_min", num(ap.lambda_min)}, {"margin", num(ap.margin)},
                                    {"pass", ap.pass}};
        r.verdict = r.verdict && ap.pass;
    }
    r.record["outputs"] = out;
}

void task_caccioppoli(const Context& ctx, const Json& task, std::size_t index, TaskResult& r) {
    allow_keys(task, {"type", "name", "expect", "trials", "wave", "a_max"}, "caccioppoli");
    const GraphForm& g = ctx.g();
    const PseudoMetric& rho = ctx.metric("caccioppoli");
    const int trials = get_or(task, "trials", 200);
    const double s = std::max(jump_size(g, rho), 1e-12);
    const double a_max = get_or(task, "a_max", 8.0 * s);
    std::mt19937_64 rng(ctx.task_seed("caccioppoli", index));

    const VertexSet inside = g.interior_vertices();
    std::optional<Wave> fixed;
    Eigen::SelfAdjointEigenSolver<Matrix> solver;
    if (task.contains("wave")) {
        fixed = make_wave(parse_wave(task.at("wave")), ctx.form);
    } else {
        Matrix sub(inside.size(), inside.size());
        const Matrix full = generator_matrix(g, ctx.form.nu());
        for (std::size_t i = 0; i < inside.size(); ++i)
            for (std::size_t k = 0; k < inside.size(); ++k) sub(i, k) = full(inside[i], inside[k]);
        solver.compute(sub);
    }
    std::uniform_int_distribution<Index> pick_vertex(0, static_cast<Index>(inside.size()) - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    CsvTable t{"trials", {"trial", "lambda", "lhs", "rhs", "constant"}, {}};
    int passed = 0;
    double worst_ratio = 0.0;
    CaccioppoliReport worst;
    for (int i = 0; i < trials; ++i) {
        Vector u;
        double lambda;
        if (fixed) {
            u = fixed->u;
            lambda = fixed->lambda;
        } else {
            const Index e = pick_vertex(rng);
            u = Vector::Zero(g.size());
            for (std::size_t k = 0; k < inside.size(); ++k)
                u(inside[k]) = solver.eigenvectors()(static_cast<Index>(k), e) / std::sqrt(g.mass(inside[k]));
            lambda = solver.eigenvalues()(e);
        }
        const VertexSet centre{inside[pick_vertex(rng)]};
        const double a = s * 0.5 + unit(rng) * (a_max - s * 0.5);
        Vector eta = cutoff(rho, centre, a);
        for (Index x = 0; x < g.size(); ++x)
            if (!g.interior[x]) eta(x) = 0.0;
        const CaccioppoliReport c = caccioppoli(ctx.form, u, lambda, eta);
        if (c.pass) ++passed;
        const double ratio = c.rhs > 0.0 ? c.lhs / c.rhs : (c.lhs > 0.0 ? kInfinity : 0.0);
        if (i == 0 || ratio > worst_ratio) {
            worst_ratio = ratio;
            worst = c;
        }
        t.rows.push_back({std::to_string(i), format_number(lambda), format_number(c.lhs), format_number(c.rhs),
                          format_number(c.constant)});
    }
    r.verdict = passed == trials;
    r.record["outputs"] = {{"trials", trials},
                           {"passed", passed},
                           {"worst_ratio", num(worst_ratio)},
                           {"constant_breakdown",
                            {{"q", worst.q}, {"c_q", worst.c_q}, {"split", num(worst.split)},
                             {"constant", num(worst.constant)}, {"lhs", num(worst.lhs)},
                             {"norm_term", num(worst.norm_term)}, {"eta_term", num(worst.eta_term)}}}};
    r.tables.push_back(std::move(t));
}

void task_shnol(const Context& ctx, const Json& task, std::size_t index, TaskResult& r) {
    allow_keys(task, {"type", "name", "expect", "trials", "set", "a", "s", "wave"}, "shnol");
    const GraphForm& g = ctx.g();
    const PseudoMetric& rho = ctx.metric("shnol");
    const double jump = jump_size(g, rho);
    const double a = resolve_length(task, "a", jump, "shnol");
    const double s = resolve_length(task, "s", jump, "shnol");
    if (!task.contains("set")) throw ConfigError("shnol: missing key 'set'");
    const VertexSet set = parse_vertex_set(task.at("set"), g, &rho);
    const int trials = get_or(task, "trials", 100);
    std::optional<WaveSpec> fixed;
    if (task.contains("wave")) fixed = parse_wave(task.at("wave"));

    std::mt19937_64 rng(ctx.task_seed("shnol", index));
    std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
    CsvTable t{"trials", {"trial", "lambda", "lhs", "rhs"}, {}};
    int passed = 0;
    double worst_ratio = 0.0;
    ShnolReport worst;
    for (int i = 0; i < trials; ++i) {
        Wave w;
        if (fixed) {
            w = make_wave(*fixed, ctx.form);
        } else {
            std::vector<double> theta(g.dimension());
            for (double& th : theta) th = angle(rng);
            w = plane_wave(g, theta);
        }
        const Vector v = random_interior_vector(g, rng);
        const ShnolReport rep = shnol_bound(ctx.form, rho, w.u, w.lambda, set, a, s, v);
        if (rep.pass) ++passed;
        const double ratio = rep.rhs > 0.0 ? rep.lhs / rep.rhs : (rep.lhs > 0.0 ? kInfinity : 0.0);
        if (i == 0 || ratio > worst_ratio) {
            worst_ratio = ratio;
            worst = rep;
        }
        t.rows.push_back({std::to_string(i), format_number(w.lambda), format_number(rep.lhs), format_number(rep.rhs)});
    }
    r.verdict = passed == trials;
    r.record["outputs"] = {{"trials", trials},
                           {"passed", passed},
                           {"a", num(a)},
                           {"s", num(s)},
                           {"worst_ratio", num(worst_ratio)},
                           {"constant_breakdown",
                            {{"caccioppoli_constant", num(worst.caccioppoli_constant)},
                             {"constant", num(worst.constant)},
                             {"cauchy_bound", num(worst.cauchy_bound)},
                             {"short_bound", num(worst.short_bound)},
                             {"long_bound", num(worst.long_bound)},
                             {"cutoff_term", num(worst.cutoff_term)},
                             {"annulus_cutoff_term", num(worst.annulus_cutoff_term)},
                             {"annulus_mass", num(worst.annulus_mass)},
                             {"energy_v", num(worst.energy_v)},
                             {"lhs", num(worst.lhs)},
                             {"rhs", num(worst.rhs)}}}};
    r.tables.push_back(std::move(t));
}

std::vector<VertexSet> lattice_shells(const GraphForm& g, int step, int count) {
    if (!g.has_coords()) throw ConfigError("lattice shells need a lattice model");
    std::vector<VertexSet> shells;
    for (int n = 1; n <= count; ++n) {
        VertexSet set;
        for (Index x = 0; x < g.size(); ++x)
            if (g.coords.row(x).cwiseAbs().maxCoeff() <= step * n) set.push_back(x);
        shells.push_back(std::move(set));
    }
    return shells;
}

Json ratio_json(const ShnolRatioReport& rep) {
    return {{"n", rep.n},
            {"finite_ratio", num_list(rep.finite_ratio)},
            {"general_ratio", num_list(rep.general_ratio)},
            {"fitted_slope", num(rep.fitted_slope)},
            {"threshold", rep.threshold},
            {"verdict", rep.verdict},
            {"distance_to_window_spectrum", num(rep.distance)}};
}

void task_shnol_ratio(const Context& ctx, const Json& task, std::size_t, TaskResult& r) {
    allow_keys(task, {"type", "name", "expect", "waves", "step", "count", "a", "s", "threshold"}, "shnol-ratio");
    const GraphForm& g = ctx.g();
    const PseudoMetric& rho = ctx.metric("shnol-ratio");
    const double jump = jump_size(g, rho);
    const double a = resolve_length(task, "a", jump, "shnol-ratio");
    const double s = resolve_length(task, "s", jump, "shnol-ratio");
    const double threshold = get_or(task, "threshold", ctx.tol.ratio_threshold);
    const int step = get_or(task, "step", 5);
    int radius = 0;
    for (Index x = 0; x < g.size(); ++x) radius = std::max(radius, g.coords.row(x).cwiseAbs().maxCoeff());
    const int count = get_or(task, "count", radius / std::max(step, 1));
    const std::vector<VertexSet> shells = lattice_shells(g, step, count);
    if (!task.contains("waves") || !task.at("waves").is_array()) throw ConfigError("shnol-ratio: 'waves' must be a list");

    const Vector eig = spectrum(g, ctx.form.nu());
    CsvTable t{"ratios", {"wave", "n", "finite_ratio", "general_ratio", "bulk"}, {}};
    Json results = Json::array();
    r.verdict = true;
    std::size_t wi = 0;
    for (const Json& wj : task.at("waves")) {
        const WaveSpec spec = parse_wave(wj);
        const Wave w = make_wave(spec, ctx.form);
        const ShnolRatioReport rep = shnol_ratio(ctx.form, rho, w.u, w.lambda, shells, a, s, threshold, &eig);
        const bool consistent = rep.in_spectrum ? rep.distance <= threshold : rep.distance >= threshold;
        bool ok = consistent;
        if (wj.contains("expect_verdict")) ok = ok && rep.verdict == wj.at("expect_verdict").get<std::string>();
        r.verdict = r.verdict && ok;
        Json entry = ratio_json(rep);
        entry["wave"] = spec.echo;
        entry["lambda"] = num(w.lambda);
        entry["consistent"] = consistent;
        entry["pass"] = ok;
        results.push_back(entry);
        for (std::size_t i = 0; i < rep.n.size(); ++i)
            t.rows.push_back({std::to_string(wi), std::to_string(rep.n[i]), format_number(rep.finite_ratio[i]),
                              format_number(rep.general_ratio[i]), format_number(rep.bulk[i])});
        ++wi;
    }
    r.record["outputs"] = {{"a", num(a)}, {"s", num(s)}, {"step", step}, {"waves", results}};
    r.tables.push_back(std::move(t));
}

void task_condition_c(const Context& ctx, const Json& task, std::size_t, TaskResult& r) {
    allow_keys(task, {"type", "name", "expect", "first", "a", "s", "wave"}, "condition-c");
    const GraphForm& g = ctx.g();
    const PseudoMetric& rho = ctx.metric("condition-c");
    const double jump = jump_size(g, rho);
    const double a = resolve_length(task, "a", jump, "condition-c");
    const double s = resolve_length(task, "s", jump, "condition-c");
    VertexSet first;
    if (task.contains("first")) {
        first = parse_vertex_set(task.at("first"), g, &rho);
    } else {
        if (!g.has_coords()) throw ConfigError("condition-c: 'first' is required off the lattice");
        first.push_back(g.find_coords(Eigen::VectorXi::Zero(g.dimension())));
    }
    std::optional<Wave> w;
    Json wave_echo;
    if (task.contains("wave")) {
        const WaveSpec spec = parse_wave(task.at("wave"));
        w = make_wave(spec, ctx.form);
        wave_echo = spec.echo;
    }
    const ConditionCReport rep = condition_c(g, rho, first, a, s, w ? &w->u : nullptr);
    const bool annulus_ok = std::all_of(rep.annulus_in_shells.begin(), rep.annulus_in_shells.end(), [](bool b) { return b; });
    const bool decays = std::all_of(rep.decays.begin(), rep.decays.end(), [](bool b) { return b; });
    Json decay = Json::object();
    for (std::size_t i = 0; i < rep.gammas.size(); ++i) {
        char key[32];
        std::snprintf(key, sizeof key, "gamma_%g", rep.gammas[i]);
        decay[key] = {{"decays", static_cast<bool>(rep.decays[i])},
                                               {"last", num(rep.decay[i].back())}};
    }
    Json out{{"k", num(rep.decomposition.k)},
             {"shells", static_cast<int>(rep.decomposition.shells.size())},
             {"shell_mass", num_list(rep.shell_mass)},
             {"decay", decay},
             {"annulus_in_shells", annulus_ok}};
    r.verdict = decays && annulus_ok;
    if (w) {
        out["wave"] = wave_echo;
        out["weighted_norm_sq"] = num(rep.weighted_partial_sums.back());
        if (g.size() <= kDenseLimit) {
            const Vector eig = spectrum(g, ctx.form.nu());
            const ShnolRatioReport ratio = shnol_ratio(ctx.form, rho, w->u, w->lambda, rep.decomposition.sets, a, s,
                                                       ctx.tol.ratio_threshold, &eig);
            out["shnol_ratio"] = ratio_json(ratio);
        }
    }
    r.record["outputs"] = out;
    CsvTable t{"shells", {"n", "size", "mass", "decay_gamma_0.1", "decay_gamma_1", "weighted_partial_sum"}, {}};
    for (std::size_t i = 0; i < rep.shell_mass.size(); ++i)
        t.rows.push_back({std::to_string(i + 1), std::to_string(rep.decomposition.shells[i].size()),
                          format_number(rep.shell_mass[i]), format_number(rep.decay[0][i]),
                          format_number(rep.decay[1][i]),
                          w ? format_number(rep.weighted_partial_sums[i]) : std::string()});
    r.tables.push_back(std::move(t));
}

void task_counterexample(const Context& ctx, const Json& task, std::size_t index, TaskResult& r) {
    allow_keys(task, {"type", "name", "expect", "which", "grids", "u", "v"}, "counterexample");
    const std::string which = get_required<std::string>(task, "which", "counterexample");
    const GraphForm& g = ctx.g();
    if (which == "intrinsic") {
        // the configured metric, checked against the definition with witness m_b = m
        const PseudoMetric& rho = ctx.metric("counterexample");
        const auto samples = g.size() <= 16 ? exhaustive_definitional_samples(rho)
                                            : default_definitional_samples(rho, ctx.task_seed("counterexample", index));
        const DefinitionalReport def = definitional_check(g, rho, IntrinsicWitness::full(g), samples);
        const RowsumReport rows = intrinsic_rowsum_check(g, rho);
        Json worst;
        if (def.worst_vertex >= 0)
            worst = {{"set", vertex_list(g, samples[def.worst_sample].set)},
                     {"truncation", num(samples[def.worst_sample].truncation)}};
        r.verdict = def.pass && rows.pass;
        r.record["outputs"] = {{"definitional_pass", def.pass},
                               {"violation", num(def.worst_violation)},
                               {"vertex", def.worst_vertex >= 0 ? vertex_name(g, def.worst_vertex) : Json()},
                               {"sample", worst},
                               {"rowsum_pass", rows.pass},
                               {"min_interior_slack", num(rows.min_interior_slack)},
                               {"slack_vertex", rows.worst_vertex >= 0 ? vertex_name(g, rows.worst_vertex) : Json()}};
    } else if (which == "mirror") {
        const std::vector<int> grids = get_or<std::vector<int>>(task, "grids", {64, 128, 256, 512, 1024});
        if (grids.size() < 3) throw ConfigError("counterexample mirror: need at least three grids");
        std::vector<double> eu, ev, euv;
        CsvTable t{"mirror", {"N", "energy_u", "energy_v", "energy_uv"}, {}};
        for (int n : grids) {
            ModelSpec spec;
            spec.kind = ModelKind::mirror;
            spec.radius = n;
            const GraphForm m = build_model(spec);
            Vector u(m.size()), v(m.size());
            // positions are recovered from the labels, which hold the grid points
            for (Index x = 0; x < m.size(); ++x) {
                const double pos = std::stod(m.labels[x]);
                u(x) = pos;
                v(x) = std::pow(std::abs(pos), -0.25);
            }
            eu.push_back(energy(m, u));
            ev.push_back(energy(m, v));
            euv.push_back(energy(m, u.cwiseProduct(v)));
            t.rows.push_back({std::to_string(n), format_number(eu.back()), format_number(ev.back()),
                              format_number(euv.back())});
        }
        std::vector<double> du, dv, duv;
        for (std::size_t i = 1; i < grids.size(); ++i) {
            du.push_back(std::abs(eu[i] - eu[i - 1]));
            dv.push_back(std::abs(ev[i] - ev[i - 1]));
            duv.push_back(euv[i] - euv[i - 1]);
        }
        const double target = 4.0 * std::numbers::ln2;
        bool converges = true;
        for (std::size_t i = 1; i < du.size(); ++i)
            converges = converges && du[i] <= du[i - 1] + 1e-15 && dv[i] <= dv[i - 1] + 1e-15;
        bool diverges = true;
        for (double d : duv) diverges = diverges && std::abs(d - target) <= 0.1 * target;
        r.verdict = converges && diverges;
        r.record["outputs"] = {{"grids", grids},
                               {"energy_u", num_list(eu)},
                               {"energy_v", num_list(ev)},
                               {"energy_uv", num_list(euv)},
                               {"increments_uv", num_list(duv)},
                               {"target_increment", target},
                               {"u_v_converge", converges},
                               {"uv_log_divergence", diverges}};
        r.tables.push_back(std::move(t));
    } else if (which == "product-bound") {
        const Vector u = Eigen::Map<const Vector>(task.at("u").get<std::vector<double>>().data(), g.size());
        const Vector v = Eigen::Map<const Vector>(task.at("v").get<std::vector<double>>().data(), g.size());
        if (task.at("u").size() != static_cast<std::size_t>(g.size()) ||
            task.at("v").size() != static_cast<std::size_t>(g.size()))
            throw ConfigError("counterexample product-bound: u and v must match the window size");
        const ProductBound b = product_energy_bound(g, u, v);
        r.verdict = b.product_energy <= b.sharp_rhs * (1.0 + ctx.tol.inequality);
        r.record["outputs"] = {{"product_energy", num(b.product_energy)},
                               {"sharp_rhs", num(b.sharp_rhs)},
                               {"doubled_rhs", num(b.doubled_rhs)},
                               {"doubled_holds", b.product_energy <= b.doubled_rhs * (1.0 + ctx.tol.inequality)}};
    } else {
        throw ConfigError("counterexample: unknown case '" + which + "'");
    }
}

const std::map<std::string, TaskFn>& task_table() {
    static const std::map<std::string, TaskFn> table{
        {"verify-metric", task_verify_metric}, {"jump-size", task_jump_size},
        {"capacity", task_capacity},           {"spectrum", task_spectrum},
        {"gst", task_gst},                     {"caccioppoli", task_caccioppoli},
        {"shnol", task_shnol},                 {"shnol-ratio", task_shnol_ratio},
        {"condition-c", task_condition_c},     {"counterexample", task_counterexample}};
    return table;
}

Vector parse_weights(const Json& j, Index n, const char* what) {
    if (j.is_number()) return Vector::Constant(n, j.get<double>());
    const std::vector<double> values = j.get<std::vector<double>>();
    if (static_cast<Index>(values.size()) != n)
        throw ConfigError(std::string(what) + ": expected " + std::to_string(n) + " values");
    return Eigen::Map<const Vector>(values.data(), n);
}

}  // namespace

// ---------------------------------------------------------------------------
// Parsing

ModelSpec parse_model(const Json& j) {
    allow_keys(j, {"kind", "dimension", "radius", "N", "edge_weight", "alpha", "beta", "amplitude", "mass",
                   "interior_margin", "tail_tolerance", "masses", "killing", "edges", "interior"},
               "model");
    ModelSpec s;
    try {
        s.kind = model_kind_from_string(get_required<std::string>(j, "kind", "model"));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    s.dimension = get_or(j, "dimension", s.dimension);
    s.radius = get_or(j, "radius", s.radius);
    s.radius = get_or(j, "N", s.radius);
    s.edge_weight = get_or(j, "edge_weight", s.edge_weight);
    s.alpha = get_or(j, "alpha", s.alpha);
    s.beta = get_or(j, "beta", s.beta);
    s.amplitude = get_or(j, "amplitude", s.amplitude);
    s.mass = get_or(j, "mass", s.mass);
    s.interior_margin = get_or(j, "interior_margin", s.interior_margin);
    s.tail_tolerance = get_or(j, "tail_tolerance", s.tail_tolerance);
    s.masses = get_or(j, "masses", s.masses);
    s.killing = get_or(j, "killing", s.killing);
    s.interior = get_or(j, "interior", s.interior);
    if (j.contains("edges"))
        for (const Json& e : j.at("edges")) {
            if (!e.is_array() || e.size() != 3) throw ConfigError("model: edges are [x, y, weight] triples");
            s.edges.push_back({e[0].get<Index>(), e[1].get<Index>(), e[2].get<double>()});
        }
    return s;
}

PseudoMetric parse_metric(const Json& j, const GraphForm& g) {
    const std::string kind = get_required<std::string>(j, "kind", "metric");
    if (kind == "coordinate") {
        allow_keys(j, {"kind", "scale", "profile", "beta"}, "metric");
        const std::string profile_name = get_or<std::string>(j, "profile", "identity");
        Profile profile;
        if (profile_name == "identity") profile = Profile::identity;
        else if (profile_name == "power") profile = Profile::power;
        else throw ConfigError("metric: unknown profile " + profile_name);
        const double beta = get_or(j, "beta", 1.0);
        const PseudoMetric unit = PseudoMetric::coordinate(g, 1.0, profile, beta);
        if (j.contains("scale") && j.at("scale").is_string()) {
            if (j.at("scale").get<std::string>() != "intrinsic") throw ConfigError("metric: scale must be a number or \"intrinsic\"");
            return unit.scaled(intrinsic_scale(g, unit));
        }
        return unit.scaled(get_or(j, "scale", 1.0));
    }
    if (kind == "budget") {
        allow_keys(j, {"kind", "set", "weight"}, "metric");
        const std::string set = get_required<std::string>(j, "set", "budget metric");
        if (set == "M1") return budget_metric(g, budgets_m1(g));
        if (set == "M2") return budget_metric(g, budgets_m2(g));
        if (set == "constant") return budget_metric(g, budgets_constant(g, get_or(j, "weight", 1.0)));
        throw ConfigError("metric: unknown budget set " + set);
    }
    if (kind == "table") {
        allow_keys(j, {"kind", "distances"}, "metric");
        const auto rows = get_required<std::vector<std::vector<double>>>(j, "distances", "table metric");
        if (static_cast<Index>(rows.size()) != g.size()) throw ConfigError("metric: table size differs from the window");
        Matrix d(g.size(), g.size());
        for (Index x = 0; x < g.size(); ++x) {
            if (static_cast<Index>(rows[x].size()) != g.size()) throw ConfigError("metric: table must be square");
            for (Index y = 0; y < g.size(); ++y) d(x, y) = rows[x][y];
        }
        return PseudoMetric::table(d);
    }
    if (kind == "max") {
        allow_keys(j, {"kind", "of"}, "metric");
        const Json& of = j.at("of");
        if (!of.is_array() || of.size() != 2) throw ConfigError("metric: 'of' lists exactly two metrics");
        return max_combine(parse_metric(of[0], g), parse_metric(of[1], g));
    }
    throw ConfigError("metric: unknown kind " + kind);
}

VertexSet parse_vertex_set(const Json& j, const GraphForm& g, const PseudoMetric* rho) {
    VertexSet out;
    if (j.is_string()) {
        const std::string name = j.get<std::string>();
        if (name == "interior") return g.interior_vertices();
        if (name == "all") {
            for (Index x = 0; x < g.size(); ++x) out.push_back(x);
            return out;
        }
        throw ConfigError("unknown vertex set " + name);
    }
    if (j.is_array()) {
        for (const Json& v : j) out.push_back(parse_vertex(v, g));
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }
    if (j.is_object() && j.contains("lattice_ball")) {
        allow_keys(j, {"lattice_ball", "center"}, "vertex set");
        if (!g.has_coords()) throw ConfigError("lattice_ball needs a lattice model");
        const int r = j.at("lattice_ball").get<int>();
        Eigen::VectorXi c = Eigen::VectorXi::Zero(g.dimension());
        if (j.contains("center")) {
            const auto v = j.at("center").get<std::vector<int>>();
            if (static_cast<Index>(v.size()) != g.dimension()) throw ConfigError("lattice_ball: center dimension");
            for (Index i = 0; i < g.dimension(); ++i) c(i) = v[i];
        }
        for (Index x = 0; x < g.size(); ++x)
            if ((g.coords.row(x).transpose() - c).cwiseAbs().maxCoeff() <= r) out.push_back(x);
        return out;
    }
    if (j.is_object() && j.contains("metric_ball")) {
        allow_keys(j, {"metric_ball", "center"}, "vertex set");
        if (!rho) throw ConfigError("metric_ball needs a metric");
        return ball(*rho, {parse_vertex(j.at("center"), g)}, j.at("metric_ball").get<double>());
    }
    if (j.is_object() && j.contains("coordinate_below")) {
        allow_keys(j, {"coordinate_below", "axis"}, "vertex set");
        if (!g.has_coords()) throw ConfigError("coordinate_below needs a lattice model");
        const int axis = get_or(j, "axis", 0);
        const int bound = j.at("coordinate_below").get<int>();
        for (Index x = 0; x < g.size(); ++x)
            if (g.coords(x, axis) < bound) out.push_back(x);
        return out;
    }
    throw ConfigError("unrecognised vertex set " + j.dump());
}

PerturbedForm parse_perturbation(const Json* j, GraphForm g) {
    PerturbedForm form = PerturbedForm::unperturbed(std::move(g));
    if (!j) return form;
    allow_keys(*j, {"nu_plus", "nu_minus", "q", "c_q"}, "perturbation");
    const Index n = form.base.size();
    if (j->contains("nu_plus")) form.nu_plus = parse_weights(j->at("nu_plus"), n, "nu_plus");
    if (j->contains("nu_minus")) form.nu_minus = parse_weights(j->at("nu_minus"), n, "nu_minus");
    if (form.nu_plus.minCoeff() < 0.0 || form.nu_minus.minCoeff() < 0.0)
        throw ConfigError("perturbation: nu_plus and nu_minus must be nonnegative");
    if (j->contains("q")) {
        BoundCertificate cert;
        cert.q = j->at("q").get<double>();
        if (!(cert.q > 0.0 && cert.q < 1.0)) throw ConfigError("perturbation: q must lie in (0, 1)");
        const Json& c = j->contains("c_q") ? j->at("c_q") : Json("auto");
        cert.c_q = c.is_string() ? min_cq(form.base, form.nu_minus, cert.q) : c.get<double>();
        if (!form_bound_check(form.base, form.nu_minus, cert.q, cert.c_q).pass)
            throw ConfigError("perturbation: the form-bound certificate does not hold");
        form.certificate = cert;
    } else if (form.nu_minus.maxCoeff() > 0.0) {
        throw ConfigError("perturbation: nu_minus needs a certificate (q and c_q)");
    }
    return form;
}

// ---------------------------------------------------------------------------
// Files

Json load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
}

fs::path scenario_directory() { return fs::path(DFLAB_SCENARIO_DIR); }

std::vector<fs::path> bundled_scenarios() {
    std::vector<fs::path> out;
    const fs::path dir = scenario_directory();
    if (!fs::is_directory(dir)) return out;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.path().extension() == ".json") out.push_back(entry.path());
    std::sort(out.begin(), out.end());
    return out;
}

fs::path resolve_config(const std::string& argument) {
    if (fs::is_regular_file(argument)) return argument;
    const fs::path bundled = scenario_directory() / (argument + ".json");
    if (fs::is_regular_file(bundled)) return bundled;
    throw ConfigError("no config file or bundled scenario named " + argument);
}

std::string inputs_hash(const Json& j) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : j.dump()) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string deterministic_dump(const Json& report) {
    Json copy = report;
    copy.erase("timing");
    return copy.dump(2);
}

void write_outputs(const ScenarioResult& result, const fs::path& dir) {
    fs::create_directories(dir);
    std::ofstream(dir / "report.json") << result.report.dump(2) << '\n';
    for (std::size_t i = 0; i < result.tasks.size(); ++i)
        for (const CsvTable& t : result.tasks[i].tables) {
            const std::string file = std::to_string(i + 1) + "_" + result.tasks[i].type + "_" + t.name + ".csv";
            std::ofstream os(dir / file);
            for (std::size_t c = 0; c < t.header.size(); ++c) os << (c ? "," : "") << csv_field(t.header[c]);
            os << '\n';
            for (const auto& row : t.rows) {
                for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << csv_field(row[c]);
                os << '\n';
            }
        }
}

// ---------------------------------------------------------------------------
// Running

ScenarioResult run_scenario(const Json& config, const ScenarioOptions& options) {
    using Clock = std::chrono::steady_clock;
    const auto start = Clock::now();
    allow_keys(config, {"name", "description", "model", "metric", "perturbation", "tasks", "seed", "tolerances"},
               "config");
    if (!config.contains("model")) throw ConfigError("config: missing key 'model'");
    if (!config.contains("tasks") || !config.at("tasks").is_array()) throw ConfigError("config: 'tasks' must be a list");

    Context ctx;
    ctx.config = config;
    GraphForm g;
    try {
        g = build_model(parse_model(config.at("model")));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("model: ") + e.what());
    }
    ctx.form = parse_perturbation(config.contains("perturbation") ? &config.at("perturbation") : nullptr, std::move(g));
    if (config.contains("metric")) ctx.rho = parse_metric(config.at("metric"), ctx.g());
    ctx.seed = options.seed;
    if (!ctx.seed && config.contains("seed")) ctx.seed = config.at("seed").get<std::uint64_t>();
    ctx.tol = parse_tolerances(config.contains("tolerances") ? &config.at("tolerances") : nullptr);

    ScenarioResult result;
    result.name = get_or<std::string>(config, "name", "scenario");
    Json tasks = Json::array();
    Json task_seconds = Json::array();
    const Json model_and_metric{{"model", config.at("model")},
                                {"metric", config.value("metric", Json())},
                                {"perturbation", config.value("perturbation", Json())},
                                {"seed", ctx.seed ? Json(*ctx.seed) : Json()}};
    for (std::size_t i = 0; i < config.at("tasks").size(); ++i) {
        const Json& task = config.at("tasks")[i];
        const auto task_start = Clock::now();
        TaskResult r;
        r.type = get_required<std::string>(task, "type", "task");
        r.name = get_or<std::string>(task, "name", r.type);
        const std::string expect = get_or<std::string>(task, "expect", "pass");
        if (expect != "pass" && expect != "fail") throw ConfigError("task: expect must be \"pass\" or \"fail\"");
        r.expect_pass = expect == "pass";
        const auto it = task_table().find(r.type);
        if (it == task_table().end()) throw ConfigError("unknown task type " + r.type);
        try {
            it->second(ctx, task, i, r);
        } catch (const Json::exception& e) {
            throw ConfigError(r.name + ": " + e.what());
        }
        r.record["name"] = r.name;
        r.record["type"] = r.type;
        r.record["inputs_hash"] = inputs_hash({{"task", task}, {"context", model_and_metric}});
        r.record["expect"] = expect;
        r.record["verdict"] = r.verdict ? "pass" : "fail";
        r.record["outcome"] = r.ok() ? "as expected" : "unexpected";
        r.record["tolerances"] = ctx.tol.to_json();
        tasks.push_back(r.record);
        task_seconds.push_back(std::chrono::duration<double>(Clock::now() - task_start).count());
        if (!r.ok()) result.exit_code = 1;
        result.tasks.push_back(std::move(r));
    }
    result.report = {{"tool", {{"name", "dflab"}, {"version", kToolVersion}}},
                     {"scenario", config},
                     {"seed", ctx.seed ? Json(*ctx.seed) : Json()},
                     {"inputs_hash", inputs_hash(model_and_metric)},
                     {"window", {{"vertices", ctx.g().size()}, {"interior", ctx.g().interior_vertices().size()}}},
                     {"tasks", tasks},
                     {"exit_code", result.exit_code},
                     {"timing",
                      {{"timestamp", timestamp()},
                       {"total_seconds", std::chrono::duration<double>(Clock::now() - start).count()},
                       {"task_seconds", task_seconds}}}};
    if (options.out) write_outputs(result, *options.out);
    return result;
}

}  // namespace dflab
