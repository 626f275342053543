#ifndef LOHE_INTEGRATOR_HPP
#define LOHE_INTEGRATOR_HPP

// Fixed-step classical RK4 for the model family, with optional projection back
// onto the sphere bundle, norm-drift monitoring and a per-step observer hook.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <type_traits>
#include <utility>
#include <vector>

#include "lohe/diagnostics.hpp"
#include "lohe/error.hpp"
#include "lohe/linalg.hpp"
#include "lohe/model.hpp"

namespace lohe {

struct IntegratorConfig {
    double dt = 1e-3;
    double t_end = 1.0;
    bool renormalize = false;
    double drift_tolerance = 1e-6;
    std::size_t observe_every = 1;

    void validate() const {
        if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("IntegratorConfig: dt must be finite and > 0");
        if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw DomainError("IntegratorConfig: t_end must be finite and >= 0");
        if (!(drift_tolerance > 0.0)) throw DomainError("IntegratorConfig: drift_tolerance must be > 0");
        if (observe_every < 1) throw DomainError("IntegratorConfig: observe_every must be >= 1");
    }
};

/// min(1e-3, 0.1 gamma / (kappa0 + kappa1 + Omega^inf + 1)); inertial models are
/// further capped at 0.25 m / gamma so the friction time scale is resolved.
inline double default_dt(const ModelParams& p, ModelKind model) {
    double dt = std::min(1e-3, 0.1 * p.gamma / (p.kappa0 + p.kappa1 + omega_inf(p) + 1.0));
    if ((model == ModelKind::second_order || model == ModelKind::gauge) && p.m > 0.0)
        dt = std::min(dt, 0.25 * p.m / p.gamma);
    return dt;
}

/// Scratch buffers for one RK4 step over a flat state of T.
template <class T>
struct Rk4Workspace {
    std::vector<T> k1, k2, k3, k4, tmp;

    void resize(std::size_t n) {
        for (auto* v : {&k1, &k2, &k3, &k4, &tmp}) v->assign(n, T{});
    }
};

/// One classical RK4 step of dy/dt = f(t, y) in place. `f(t, y, dy)` takes
/// spans over the flat state.
template <class T, class F>
void step_rk4(F&& f, double t, std::vector<T>& y, double dt, Rk4Workspace<T>& ws) {
    const std::size_t n = y.size();
    if (ws.k1.size() != n) ws.resize(n);
    f(t, std::span<const T>(y), std::span<T>(ws.k1));
    for (std::size_t i = 0; i < n; ++i) ws.tmp[i] = y[i] + (0.5 * dt) * ws.k1[i];
    f(t + 0.5 * dt, std::span<const T>(ws.tmp), std::span<T>(ws.k2));
    for (std::size_t i = 0; i < n; ++i) ws.tmp[i] = y[i] + (0.5 * dt) * ws.k2[i];
    f(t + 0.5 * dt, std::span<const T>(ws.tmp), std::span<T>(ws.k3));
    for (std::size_t i = 0; i < n; ++i) ws.tmp[i] = y[i] + dt * ws.k3[i];
    f(t + dt, std::span<const T>(ws.tmp), std::span<T>(ws.k4));
    for (std::size_t i = 0; i < n; ++i) y[i] += (dt / 6.0) * (ws.k1[i] + 2.0 * ws.k2[i] + 2.0 * ws.k3[i] + ws.k4[i]);
}

/// Vector field of a model over the packed state [z; w] (or [z] for the
/// first-order model). Gauge states are (u, u').
class System {
public:
    System(ModelParams p, ModelKind model) : p_(std::move(p)), model_(model) {
        p_.validate();
        if (model_ == ModelKind::kuramoto) throw DomainError("System: use simulate_kuramoto for phase states");
        if (inertial() && !(p_.m > 0.0)) throw DomainError("System: inertial model requires m > 0");
    }

    const ModelParams& params() const noexcept { return p_; }
    ModelKind model() const noexcept { return model_; }
    bool inertial() const noexcept { return model_ == ModelKind::second_order || model_ == ModelKind::gauge; }
    std::size_t block() const noexcept { return p_.N * p_.dim(); }
    std::size_t packed_size() const noexcept { return inertial() ? 2 * block() : block(); }

    void operator()(double t, std::span<const Complex> y, std::span<Complex> dy) const {
        if (!inertial()) {
            rhs_first_order(p_, y, dy);
            return;
        }
        scratch_.t = t;
        scratch_.N = p_.N;
        scratch_.dim = p_.dim();
        scratch_.z.assign(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(block()));
        scratch_.w.assign(y.begin() + static_cast<std::ptrdiff_t>(block()), y.end());
        const CSpan dz = dy.subspan(0, block()), dw = dy.subspan(block());
        if (model_ == ModelKind::gauge)
            rhs_gauge(p_, scratch_, dz, dw);
        else
            rhs_second_order(p_, scratch_, dz, dw);
    }

    std::vector<Complex> pack(const EnsembleState& s) const {
        s.check_against(p_);
        std::vector<Complex> y(s.z);
        if (inertial()) y.insert(y.end(), s.w.begin(), s.w.end());
        return y;
    }

    /// Native state from the packed vector. First-order velocities are filled
    /// with the vector field so that w = dz/dt.
    EnsembleState unpack(std::span<const Complex> y, double t) const {
        EnsembleState s(p_.N, p_.dim(), t);
        std::copy(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(block()), s.z.begin());
        if (inertial())
            std::copy(y.begin() + static_cast<std::ptrdiff_t>(block()), y.end(), s.w.begin());
        else
            rhs_first_order(p_, s.z, s.w);
        return s;
    }

    /// Physical (z, dz/dt) from a native state.
    EnsembleState physical(const EnsembleState& native) const {
        return model_ == ModelKind::gauge ? gauge_to_physical(p_, native) : native;
    }

    /// Rescale z_j to unit norm and strip the radial velocity component.
    void renormalize(std::vector<Complex>& y) const {
        const std::size_t dim = p_.dim();
        for (std::size_t j = 0; j < p_.N; ++j) {
            const CSpan z(y.data() + j * dim, dim);
            const double r = norm(z);
            for (auto& x : z) x /= r;
        }
        if (!inertial()) return;
        const ConstCSpan z(y.data(), block());
        const ConstCSpan w(y.data() + block(), block());
        // Gauge velocities u' are tangent without a frequency shift.
        const ModelParams& q = model_ == ModelKind::gauge ? zero_freq() : p_;
        auto wp = project_admissible(q, z, w);
        std::copy(wp.begin(), wp.end(), y.begin() + static_cast<std::ptrdiff_t>(block()));
    }

    double norm_drift(std::span<const Complex> y) const {
        const std::size_t dim = p_.dim();
        double worst = 0.0;
        for (std::size_t j = 0; j < p_.N; ++j)
            worst = std::max(worst, std::abs(norm(y.subspan(j * dim, dim)) - 1.0));
        return worst;
    }

private:
    const ModelParams& zero_freq() const {
        if (zero_.omegas.empty()) {
            zero_ = p_;
            zero_.omegas.assign(p_.N, SkewHermitian(p_.dim()));
        }
        return zero_;
    }

    ModelParams p_;
    ModelKind model_;
    mutable EnsembleState scratch_;
    mutable ModelParams zero_;
};

/// One RK4 step on an ensemble state (native coordinates of `sys`).
inline EnsembleState step_rk4(const System& sys, const EnsembleState& s, double dt, bool renormalize = false) {
    Rk4Workspace<Complex> ws;
    auto y = sys.pack(s);
    step_rk4(sys, s.t, y, dt, ws);
    if (renormalize) sys.renormalize(y);
    return sys.unpack(y, s.t + dt);
}

struct Trajectory {
    ModelKind model = ModelKind::second_order;
    std::vector<double> times;
    /// Native coordinates: (u, u') for the gauge model, physical (z, dz/dt)
    /// otherwise; for the Kuramoto model, the embedded positions.
    std::vector<EnsembleState> states;
    std::vector<DiagnosticsRecord> diagnostics;
    /// Unwrapped phases (Kuramoto model only).
    std::vector<std::vector<double>> phases;

    std::size_t size() const noexcept { return times.size(); }
};

/// Observer that does nothing; lets `simulate` skip building physical states.
struct NoObserver {
    void operator()(const EnsembleState&, std::size_t) const noexcept {}
};

namespace detail {

/// Step count and a possibly shorter final step so that the last sample lands on t_end.
struct StepPlan {
    std::size_t full = 0;
    double last = 0.0;
};

inline StepPlan plan_steps(double t_end, double dt) {
    StepPlan plan;
    const double ratio = t_end / dt;
    plan.full = static_cast<std::size_t>(std::floor(ratio + 1e-9));
    const double rest = t_end - static_cast<double>(plan.full) * dt;
    if (rest > 1e-12 * dt) plan.last = rest;
    return plan;
}

inline bool all_finite(std::span<const Complex> y) {
    for (const auto& x : y)
        if (!std::isfinite(x.real()) || !std::isfinite(x.imag())) return false;
    return true;
}

} // namespace detail

/// Integrates from `init` (native coordinates) over [init.t, init.t + t_end].
/// Records every `observe_every`-th step plus the final one. `on_step(physical,
/// step)` is called on the physical state after every step, including step 0.
template <class Observer = NoObserver>
Trajectory simulate(const ModelParams& p, const EnsembleState& init, const IntegratorConfig& cfg, ModelKind model,
                    Observer&& on_step = {}) {
    cfg.validate();
    const System sys(p, model);
    init.check_against(p);
    for (std::size_t j = 0; j < init.N; ++j)
        if (!(norm(init.zj(j)) > 0.0)) throw DomainError("simulate: initial position has zero norm");

    constexpr bool observing = !std::is_same_v<std::decay_t<Observer>, NoObserver>;
    Trajectory traj;
    traj.model = model;
    auto y = sys.pack(init);
    if (!detail::all_finite(y)) throw IntegrationError("non-finite initial state", 0);
    const double t0 = init.t;

    auto record = [&](const EnsembleState& native, const EnsembleState& phys) {
        traj.times.push_back(native.t);
        traj.states.push_back(native);
        traj.diagnostics.push_back(compute_diagnostics(p, phys, model));
    };

    {
        const EnsembleState native = sys.unpack(y, t0);
        const EnsembleState phys = sys.physical(native);
        record(native, phys);
        if constexpr (observing) on_step(phys, 0);
    }

    const auto plan = detail::plan_steps(cfg.t_end, cfg.dt);
    const std::size_t total = plan.full + (plan.last > 0.0 ? 1 : 0);
    Rk4Workspace<Complex> ws;
    for (std::size_t k = 1; k <= total; ++k) {
        const bool partial = k > plan.full;
        const double t_prev = t0 + static_cast<double>(k - 1) * cfg.dt;
        const double h = partial ? plan.last : cfg.dt;
        step_rk4(sys, t_prev, y, h, ws);
        const double t = partial ? t0 + cfg.t_end : t0 + static_cast<double>(k) * cfg.dt;
        if (!detail::all_finite(y)) throw IntegrationError("non-finite state at t = " + format_double(t), k);
        if (cfg.renormalize) {
            sys.renormalize(y);
        } else if (const double drift = sys.norm_drift(y); drift > cfg.drift_tolerance) {
            throw IntegrationError("norm drift " + format_double(drift) + " exceeds tolerance at t = " + format_double(t), k);
        }
        const bool keep = k % cfg.observe_every == 0 || k == total;
        if (!keep && !observing) continue;
        const EnsembleState native = sys.unpack(y, t);
        const EnsembleState phys = sys.physical(native);
        if (keep) record(native, phys);
        if constexpr (observing) on_step(phys, k);
    }
    return traj;
}

/// Integrates the phase model and records the embedded positions
/// z_j = (cos theta_j, sin theta_j) with w_j = dz_j/dt.
inline Trajectory simulate_kuramoto(const KuramotoState& init, const IntegratorConfig& cfg) {
    cfg.validate();
    const std::size_t n = init.theta.size();
    if (n == 0 || init.nus.size() != n) throw DimensionError("simulate_kuramoto: theta and nus must be non-empty and equal length");
    const ModelParams p = kuramoto_params(init.nus, init.kappa);
    KuramotoState s = init;
    auto f = [&](double, std::span<const double> th, std::span<double> dth) {
        s.theta.assign(th.begin(), th.end());
        const auto r = rhs_kuramoto(s);
        std::copy(r.begin(), r.end(), dth.begin());
    };
    Trajectory traj;
    traj.model = ModelKind::kuramoto;
    auto record = [&](const std::vector<double>& theta, double t) {
        KuramotoState k{theta, init.nus, init.kappa};
        const auto rates = rhs_kuramoto(k);
        EnsembleState e(n, 2, t);
        e.z = kuramoto_positions(theta);
        for (std::size_t j = 0; j < n; ++j) {
            e.w[2 * j] = -std::sin(theta[j]) * rates[j];
            e.w[2 * j + 1] = std::cos(theta[j]) * rates[j];
        }
        traj.times.push_back(t);
        traj.diagnostics.push_back(compute_diagnostics(p, e, ModelKind::kuramoto));
        traj.states.push_back(std::move(e));
        traj.phases.push_back(theta);
    };
    std::vector<double> y = init.theta;
    record(y, 0.0);
    const auto plan = detail::plan_steps(cfg.t_end, cfg.dt);
    const std::size_t total = plan.full + (plan.last > 0.0 ? 1 : 0);
    Rk4Workspace<double> ws;
    for (std::size_t k = 1; k <= total; ++k) {
        const bool partial = k > plan.full;
        const double h = partial ? plan.last : cfg.dt;
        step_rk4(f, static_cast<double>(k - 1) * cfg.dt, y, h, ws);
        const double t = partial ? cfg.t_end : static_cast<double>(k) * cfg.dt;
        for (double x : y)
            if (!std::isfinite(x)) throw IntegrationError("non-finite phase at t = " + format_double(t), k);
        if (k % cfg.observe_every == 0 || k == total) record(y, t);
    }
    return traj;
}

} // namespace lohe

#endif // LOHE_INTEGRATOR_HPP
