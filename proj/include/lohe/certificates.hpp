#ifndef LOHE_CERTIFICATES_HPP
#define LOHE_CERTIFICATES_HPP

// Sufficient aggregation frameworks A, B (homogeneous) and C (heterogeneous),
// closed-form second-order Gronwall envelopes, and trajectory-level checks of
// the differential inequality for G, the energy law and the practical bound.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lohe/diagnostics.hpp"
#include "lohe/error.hpp"
#include "lohe/integrator.hpp"
#include "lohe/model.hpp"

namespace lohe {

enum class Framework { A, B, C };

inline const char* to_string(Framework f) noexcept {
    switch (f) {
    case Framework::A: return "A";
    case Framework::B: return "B";
    case Framework::C: return "C";
    }
    return "?";
}

/// One strict inequality `lhs < rhs` or `lhs > rhs`.
struct Condition {
    std::string name;
    double lhs = 0.0;
    std::string comparator;
    double rhs = 0.0;
    bool pass = false;

    /// Positive when the condition holds, in the units of lhs/rhs.
    double margin() const { return comparator == "<" ? rhs - lhs : lhs - rhs; }
};

inline Condition less_than(std::string name, double lhs, double rhs) {
    return {std::move(name), lhs, "<", rhs, lhs < rhs};
}

inline Condition greater_than(std::string name, double lhs, double rhs) {
    return {std::move(name), lhs, ">", rhs, lhs > rhs};
}

struct FrameworkReport {
    Framework framework = Framework::A;
    std::vector<Condition> conditions;
    bool overall = false;

    void add(Condition c) {
        conditions.push_back(std::move(c));
        overall = std::all_of(conditions.begin(), conditions.end(), [](const Condition& x) { return x.pass; });
    }

    const Condition* find(const std::string& name) const {
        for (const auto& c : conditions)
            if (c.name == name) return &c;
        return nullptr;
    }
};

/// Non-finite doubles (e.g. an undefined nu1) are written as null.
inline nlohmann::json json_number(double x) {
    return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
}

inline nlohmann::json to_json(const FrameworkReport& r) {
    nlohmann::json conds = nlohmann::json::array();
    for (const auto& c : r.conditions)
        conds.push_back({{"name", c.name},
                         {"lhs", json_number(c.lhs)},
                         {"comparator", c.comparator},
                         {"rhs", json_number(c.rhs)},
                         {"margin", json_number(c.margin())},
                         {"pass", c.pass}});
    return {{"framework", to_string(r.framework)}, {"conditions", conds}, {"overall", r.overall}};
}

inline double discriminant(const ModelParams& p) { return p.gamma * p.gamma - 16.0 * p.m * p.kappa0 * p.delta; }

/// 8 kappa1 + 16 m M1^2
inline double homogeneous_forcing(const ModelParams& p, const EnsembleState& init) {
    const double m1 = M1(p, init);
    return 8.0 * p.kappa1 + 16.0 * p.m * m1 * m1;
}

/// Bound on G(t) that framework A guarantees: (8 kappa1 + 16 m M1^2) / (4 kappa0 delta).
inline double framework_A_threshold(const ModelParams& p, const EnsembleState& init) {
    return homogeneous_forcing(p, init) / (4.0 * p.kappa0 * p.delta);
}

/// Bound on G(t) that framework B guarantees: (4m / gamma^2)(8 kappa1 + 16 m M1^2).
inline double framework_B_threshold(const ModelParams& p, const EnsembleState& init) {
    return 4.0 * p.m / (p.gamma * p.gamma) * homogeneous_forcing(p, init);
}

/// Bound on G(t) that framework C guarantees: U / (4 kappa0 delta).
inline double framework_C_threshold(const ModelParams& p) {
    return practical_forcing_U(p) / (4.0 * p.kappa0 * p.delta);
}

namespace detail {

inline void require_homogeneous(const ModelParams& p, const char* who) {
    if (!p.homogeneous()) throw DomainError(std::string(who) + ": framework requires a homogeneous ensemble");
}

inline double sphere_cap(const ModelParams& p) {
    return (1.0 - p.delta) * (1.0 - p.delta) / static_cast<double>(p.N);
}

} // namespace detail

inline FrameworkReport check_framework_A(const ModelParams& p, const EnsembleState& init) {
    p.validate();
    init.check_against(p);
    detail::require_homogeneous(p, "check_framework_A");
    FrameworkReport r;
    r.framework = Framework::A;
    const double g0 = aggregation_G(init), gd0 = aggregation_Gdot(init);
    const double th = framework_A_threshold(p, init);
    const double n1 = nu1(p).value_or(std::numeric_limits<double>::quiet_NaN());
    r.add(greater_than("A1: gamma^2 - 16 m kappa0 delta > 0", discriminant(p), 0.0));
    r.add(less_than("A2: G(0) < threshold", g0, th));
    r.add(less_than("A2: threshold < (1-delta)^2/N", th, detail::sphere_cap(p)));
    r.add(less_than("A2: Gdot(0) + nu1 G(0) < nu1 threshold", gd0 + n1 * g0, n1 * th));
    return r;
}

inline FrameworkReport check_framework_B(const ModelParams& p, const EnsembleState& init) {
    p.validate();
    init.check_against(p);
    detail::require_homogeneous(p, "check_framework_B");
    if (!(p.m > 0.0)) throw DomainError("check_framework_B: requires m > 0");
    FrameworkReport r;
    r.framework = Framework::B;
    const double g0 = aggregation_G(init), gd0 = aggregation_Gdot(init);
    const double forcing = homogeneous_forcing(p, init);
    const double th = framework_B_threshold(p, init);
    r.add(less_than("B1: gamma^2 - 16 m kappa0 delta < 0", discriminant(p), 0.0));
    r.add(less_than("B2: G(0) < threshold", g0, th));
    r.add(less_than("B2: threshold < (1-delta)^2/N", th, detail::sphere_cap(p)));
    r.add(less_than("B2: Gdot(0) + (gamma/2m) G(0) < (2/gamma) forcing", gd0 + p.gamma / (2.0 * p.m) * g0,
                    2.0 / p.gamma * forcing));
    return r;
}

inline FrameworkReport check_framework_C(const ModelParams& p, const EnsembleState& init) {
    p.validate();
    init.check_against(p);
    FrameworkReport r;
    r.framework = Framework::C;
    const double g0 = aggregation_G(init), gd0 = aggregation_Gdot(init);
    const double th = framework_C_threshold(p);
    const double n1 = nu1(p).value_or(std::numeric_limits<double>::quiet_NaN());
    r.add(greater_than("C1: gamma^2 - 16 m kappa0 delta > 0", discriminant(p), 0.0));
    r.add(less_than("C1: R3(V_in) < 2(kappa0+kappa1)/gamma", R3(p, init), 2.0 * (p.kappa0 + p.kappa1) / p.gamma));
    r.add(less_than("C2: G(0) < U/(4 kappa0 delta)", g0, th));
    r.add(less_than("C2: U/(4 kappa0 delta) < (1-delta)^2/N", th, detail::sphere_cap(p)));
    r.add(less_than("C2: Gdot(0) + nu1 G(0) < nu1 U/(4 kappa0 delta)", gd0 + n1 * g0, n1 * th));
    return r;
}

// --- second-order Gronwall envelopes --------------------------------------

enum class Damping { overdamped, underdamped };

/// Coefficients of a y'' + b y' + c y + d <= 0 with initial data (y0, y0').
struct GronwallBound {
    double a = 1.0, b = 1.0, c = 1.0, d = 0.0;
    double y0 = 0.0, ydot0 = 0.0;

    double discriminant() const { return b * b - 4.0 * a * c; }

    Damping damping() const {
        validate();
        return discriminant() > 0.0 ? Damping::overdamped : Damping::underdamped;
    }

    void validate() const {
        if (!(a > 0.0 && b > 0.0 && c > 0.0)) throw DomainError("GronwallBound: a, b, c must be > 0");
        if (!std::isfinite(d) || !std::isfinite(y0) || !std::isfinite(ydot0))
            throw DomainError("GronwallBound: non-finite coefficient");
        if (std::abs(discriminant()) <= 1e-12) throw DomainError("GronwallBound: critically damped case is not covered");
    }
};

/// Overdamped:  -d/c + (y0 + d/c) e^{-nu1 t}
///              + a/sqrt(D) (y0' + nu1 y0 + 2d/(b - sqrt(D))) (e^{-nu2 t} - e^{-nu1 t}),
/// Underdamped: -4ad/b^2 + e^{-bt/2a} [y0 + 4ad/b^2 + ((b/2a) y0 + y0' + 2d/b) t],
/// with D = b^2 - 4ac and nu_{1,2} = (b +- sqrt(D)) / 2a.
inline double gronwall_envelope(const GronwallBound& g, double t) {
    g.validate();
    const double disc = g.discriminant();
    if (disc > 0.0) {
        const double sq = std::sqrt(disc);
        const double n1 = (g.b + sq) / (2.0 * g.a), n2 = (g.b - sq) / (2.0 * g.a);
        const double e1 = std::exp(-n1 * t), e2 = std::exp(-n2 * t);
        return -g.d / g.c + (g.y0 + g.d / g.c) * e1 +
               g.a / sq * (g.ydot0 + n1 * g.y0 + 2.0 * g.d / (g.b - sq)) * (e2 - e1);
    }
    const double shift = 4.0 * g.a * g.d / (g.b * g.b);
    return -shift + std::exp(-g.b * t / (2.0 * g.a)) *
                        (g.y0 + shift + (g.b / (2.0 * g.a) * g.y0 + g.ydot0 + 2.0 * g.d / g.b) * t);
}

/// Envelope problem for G along a homogeneous run: (m, gamma, 4 kappa0 delta,
/// -(8 kappa1 + 16 m M1^2)) with y0 = G(0), y0' = Gdot(0).
inline GronwallBound homogeneous_envelope(const ModelParams& p, const EnsembleState& init) {
    return {p.m, p.gamma, 4.0 * p.kappa0 * p.delta, -homogeneous_forcing(p, init), aggregation_G(init),
            aggregation_Gdot(init)};
}

/// Envelope problem along a heterogeneous run: forcing U instead.
inline GronwallBound heterogeneous_envelope(const ModelParams& p, const EnsembleState& init) {
    return {p.m, p.gamma, 4.0 * p.kappa0 * p.delta, -practical_forcing_U(p), aggregation_G(init),
            aggregation_Gdot(init)};
}

// --- practical aggregation ------------------------------------------------

/// (Omega^inf + 2 kappa1)/(kappa0 delta) + 4m [Omega^inf + 2(kappa0+kappa1)]^2 / (gamma^2 kappa0 delta)
inline double practical_bound(const ModelParams& p) {
    if (!(p.kappa0 > 0.0)) throw DomainError("practical_bound: kappa0 must be > 0");
    const double oi = omega_inf(p);
    const double q = oi + 2.0 * (p.kappa0 + p.kappa1);
    return (oi + 2.0 * p.kappa1) / (p.kappa0 * p.delta) + 4.0 * p.m * q * q / (p.gamma * p.gamma * p.kappa0 * p.delta);
}

/// Large-kappa0 form under m = m0 / kappa0^{1+eta}:
/// (Omega^inf + 2 kappa1)/(kappa0 delta) + 64 m0 / (gamma^2 delta kappa0^eta).
inline double practical_bound_ansatz(const ModelParams& p, double m0, double eta) {
    if (!(p.kappa0 > 0.0)) throw DomainError("practical_bound_ansatz: kappa0 must be > 0");
    if (!(m0 > 0.0 && eta > 0.0)) throw DomainError("practical_bound_ansatz: m0 and eta must be > 0");
    const double oi = omega_inf(p);
    return (oi + 2.0 * p.kappa1) / (p.kappa0 * p.delta) +
           64.0 * m0 / (p.gamma * p.gamma * p.delta * std::pow(p.kappa0, eta));
}

/// m = m0 / kappa0^{1+eta}
inline double ansatz_mass(double kappa0, double m0, double eta) { return m0 / std::pow(kappa0, 1.0 + eta); }

// --- trajectory checks ----------------------------------------------------

inline double default_inequality_slack(const ModelParams& p) { return 1e-3 * std::max(1.0, p.kappa0); }

struct InequalityReport {
    bool homogeneous = false;
    double slack = 0.0;
    std::size_t checked = 0;
    /// Homogeneous inequality (only when homogeneous).
    std::size_t violations = 0;
    double max_excess = -std::numeric_limits<double>::infinity();
    double worst_t = 0.0;
    /// Heterogeneous inequality (always evaluated).
    std::size_t het_violations = 0;
    double het_max_excess = -std::numeric_limits<double>::infinity();
    double het_worst_t = 0.0;

    /// Violations of the inequality that applies to this ensemble.
    std::size_t applicable_violations() const { return homogeneous ? violations : het_violations; }
};

inline nlohmann::json to_json(const InequalityReport& r) {
    return {{"homogeneous", r.homogeneous},        {"slack", r.slack},
            {"checked", r.checked},                {"violations", r.violations},
            {"max_excess", json_number(r.max_excess)}, {"worst_t", r.worst_t},
            {"het_violations", r.het_violations},  {"het_max_excess", json_number(r.het_max_excess)},
            {"het_worst_t", r.het_worst_t}};
}

/// Streams diagnostics samples and checks, at each interior sample,
///   m G'' + gamma G' + 4 kappa0 G <= 4 kappa0 sqrt(N) G^{3/2} + 2 kappa1 R2 + 16 m R1
/// (homogeneous; R1 in the co-rotating frame) and
///   ... <= 4 kappa0 sqrt(N) G^{3/2} + (4 m Omega^inf/gamma)(R3 + sqrt(R1)) + 12 m R1
///          + 4 m R3^2 + 4 Omega^inf + 8 kappa1
/// (heterogeneous). G'' is the central difference of the analytic G'.
class InequalityMonitor {
public:
    explicit InequalityMonitor(const ModelParams& p, std::optional<double> slack = std::nullopt)
        : p_(p), homogeneous_(p.homogeneous()), omega_inf_(omega_inf(p)) {
        report_.homogeneous = homogeneous_;
        report_.slack = slack.value_or(default_inequality_slack(p));
    }

    void observe(const DiagnosticsRecord& r) {
        window_[0] = window_[1];
        window_[1] = window_[2];
        window_[2] = r;
        if (++seen_ >= 3) check(*window_[0], *window_[1], *window_[2]);
    }

    InequalityReport report() const {
        if (seen_ < 3) throw DomainError("InequalityMonitor: need at least three samples");
        return report_;
    }

private:
    void check(const DiagnosticsRecord& a, const DiagnosticsRecord& b, const DiagnosticsRecord& c) {
        const double h1 = b.t - a.t, h2 = c.t - b.t;
        if (!(h1 > 0.0 && h2 > 0.0)) throw DomainError("InequalityMonitor: samples must be strictly increasing in t");
        // Second-order derivative estimate at b on a possibly uneven stencil.
        const double gdd = (h1 * h1 * c.Gdot - h2 * h2 * a.Gdot + (h2 * h2 - h1 * h1) * b.Gdot) / (h1 * h2 * (h1 + h2));
        const double lhs = p_.m * gdd + p_.gamma * b.Gdot + 4.0 * p_.kappa0 * b.G;
        const double cubic = 4.0 * p_.kappa0 * std::sqrt(static_cast<double>(p_.N)) * std::pow(std::max(b.G, 0.0), 1.5);
        ++report_.checked;
        if (homogeneous_) {
            const double r1 = b.R3 * b.R3;
            const double excess = lhs - (cubic + 2.0 * p_.kappa1 * b.R2 + 16.0 * p_.m * r1);
            if (excess > report_.max_excess) {
                report_.max_excess = excess;
                report_.worst_t = b.t;
            }
            if (excess > report_.slack) ++report_.violations;
        }
        const double het = cubic + 4.0 * p_.m * omega_inf_ / p_.gamma * (b.R3 + std::sqrt(b.R1)) + 12.0 * p_.m * b.R1 +
                           4.0 * p_.m * b.R3 * b.R3 + 4.0 * omega_inf_ + 8.0 * p_.kappa1;
        const double excess = lhs - het;
        if (excess > report_.het_max_excess) {
            report_.het_max_excess = excess;
            report_.het_worst_t = b.t;
        }
        if (excess > report_.slack) ++report_.het_violations;
    }

    ModelParams p_;
    bool homogeneous_;
    double omega_inf_;
    std::optional<DiagnosticsRecord> window_[3];
    std::size_t seen_ = 0;
    InequalityReport report_;
};

/// Runs the inequality check over a densely sampled trajectory.
inline InequalityReport verify_inequality_F26(const Trajectory& traj, const ModelParams& p,
                                              std::optional<double> slack = std::nullopt) {
    if (traj.diagnostics.size() < 3) throw DomainError("verify_inequality_F26: need at least three samples");
    InequalityMonitor mon(p, slack);
    for (const auto& r : traj.diagnostics) mon.observe(r);
    return mon.report();
}

struct EnergyReport {
    std::size_t samples = 0;
    double initial = 0.0;
    double final = 0.0;
    double max_increase = 0.0;          // largest E(t_k) - E(t_{k-1})
    double max_identity_residual = 0.0; // largest |dE/dt + (2 gamma/m)(E - kappa0 (1 - rho^2))|
};

inline nlohmann::json to_json(const EnergyReport& r) {
    return {{"samples", r.samples},
            {"initial", r.initial},
            {"final", r.final},
            {"max_increase", r.max_increase},
            {"max_identity_residual", r.max_identity_residual}};
}

/// Tracks energy monotonicity and the pointwise energy identity on physical states.
class EnergyMonitor {
public:
    explicit EnergyMonitor(const ModelParams& p) : p_(p) {
        if (!p.homogeneous()) throw DomainError("EnergyMonitor: requires a homogeneous ensemble");
        if (!(p.m > 0.0)) throw DomainError("EnergyMonitor: requires m > 0");
    }

    void observe(const EnsembleState& phys) {
        const double e = energy(p_, phys);
        if (report_.samples == 0)
            report_.initial = e;
        else
            report_.max_increase = std::max(report_.max_increase, e - report_.final);
        report_.final = e;
        report_.max_identity_residual =
            std::max(report_.max_identity_residual, std::abs(energy_identity_residual(p_, phys)));
        ++report_.samples;
    }

    const EnergyReport& report() const { return report_; }

private:
    ModelParams p_;
    EnergyReport report_;
};

/// max_k (G(t_k) - bound) over the trajectory; negative means G stayed below.
inline double max_excess_over(const Trajectory& traj, double bound) {
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& r : traj.diagnostics) worst = std::max(worst, r.G - bound);
    return worst;
}

/// max_k (G(t_k) - envelope(t_k - t_0)).
inline double max_envelope_excess(const Trajectory& traj, const GronwallBound& g) {
    double worst = -std::numeric_limits<double>::infinity();
    if (traj.diagnostics.empty()) return worst;
    const double t0 = traj.diagnostics.front().t;
    for (const auto& r : traj.diagnostics) worst = std::max(worst, r.G - gronwall_envelope(g, r.t - t0));
    return worst;
}

/// max G over the samples with t >= t_0 + (1 - fraction)(t_end - t_0).
inline double tail_max_G(const Trajectory& traj, double fraction = 0.2) {
    if (traj.diagnostics.empty()) throw DomainError("tail_max_G: empty trajectory");
    const double t0 = traj.diagnostics.front().t, t1 = traj.diagnostics.back().t;
    const double cut = t0 + (1.0 - fraction) * (t1 - t0);
    double best = 0.0;
    for (const auto& r : traj.diagnostics)
        if (r.t >= cut) best = std::max(best, r.G);
    return best;
}

struct DecayReport {
    bool monotone = false;
    double max_increase = 0.0;
    double rate = 0.0; // fitted d/dt log J_M (negative when decaying)
};

/// Monotonicity of J_M and its fitted exponential rate, both over the samples
/// where J_M exceeds `floor` (below it round-off in g_ij dominates J_M).
inline DecayReport jm_decay(const Trajectory& traj, double floor = 1e-6) {
    DecayReport r;
    std::vector<double> ts, js;
    for (const auto& d : traj.diagnostics) {
        if (!(d.JM > floor)) continue;
        if (!js.empty()) r.max_increase = std::max(r.max_increase, d.JM - js.back());
        ts.push_back(d.t);
        js.push_back(d.JM);
    }
    r.monotone = r.max_increase <= 0.0;
    r.rate = fit_log_linear_rate(ts, js);
    return r;
}

} // namespace lohe

#endif // LOHE_CERTIFICATES_HPP
