#ifndef LOHE_STABILITY_HPP
#define LOHE_STABILITY_HPP

// Distinguished equilibria (aggregated, bipolar, incoherent), the equilibrium
// residual, finite-difference Jacobians of the realified second-order system
// and linear growth-rate measurements.
//
// Real coordinates are ordered (x, y, a, b) with z = x + iy and w = a + ib,
// each block particle-major, so the Jacobian has size 4(d+1)N.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "lohe/diagnostics.hpp"
#include "lohe/error.hpp"
#include "lohe/integrator.hpp"
#include "lohe/linalg.hpp"
#include "lohe/model.hpp"

namespace lohe {

enum class EquilibriumKind { aggregated, bipolar, incoherent };

inline const char* to_string(EquilibriumKind k) noexcept {
    switch (k) {
    case EquilibriumKind::aggregated: return "aggregated";
    case EquilibriumKind::bipolar: return "bipolar";
    case EquilibriumKind::incoherent: return "incoherent";
    }
    return "?";
}

struct EquilibriumSpec {
    EquilibriumKind kind = EquilibriumKind::aggregated;
    std::size_t N = 1;
    std::size_t d = 1;
    std::size_t n = 0;  // particles at -anchor (bipolar only)
    std::optional<CVector> anchor; // defaults to e_1

    CVector axis() const { return anchor ? *anchor : CVector::basis(d + 1, 0); }

    void validate() const {
        if (N < 1) throw DomainError("EquilibriumSpec: N must be >= 1");
        if (d < 1) throw DomainError("EquilibriumSpec: d must be >= 1");
        const CVector a = axis();
        if (a.size() != d + 1) throw DimensionError("EquilibriumSpec: anchor has wrong dimension");
        if (std::abs(norm(a) - 1.0) > 1e-12) throw DomainError("EquilibriumSpec: anchor must have unit norm");
        if (kind == EquilibriumKind::bipolar && (n < 1 || 2 * n >= N))
            throw DomainError("EquilibriumSpec: bipolar requires 1 <= n < N/2");
        if (kind == EquilibriumKind::incoherent && N < 2) throw DomainError("EquilibriumSpec: incoherent requires N >= 2");
    }
};

/// Rest states with w = 0:
///   aggregated: z_j = a;
///   bipolar:    z_j = -a for j < n, z_j = a otherwise;
///   incoherent: z_j = (cos 2 pi j/N, sin 2 pi j/N, 0, ..., 0), so z_c = 0.
inline EnsembleState make_equilibrium(const EquilibriumSpec& spec) {
    spec.validate();
    const std::size_t dim = spec.d + 1;
    EnsembleState s(spec.N, dim);
    const CVector a = spec.axis();
    for (std::size_t j = 0; j < spec.N; ++j) {
        CSpan z = s.zj(j);
        switch (spec.kind) {
        case EquilibriumKind::aggregated:
            std::copy(a.begin(), a.end(), z.begin());
            break;
        case EquilibriumKind::bipolar:
            for (std::size_t k = 0; k < dim; ++k) z[k] = j < spec.n ? -a[k] : a[k];
            break;
        case EquilibriumKind::incoherent: {
            const double th = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(spec.N);
            z[0] = std::cos(th);
            z[1] = std::sin(th);
            break;
        }
        }
    }
    return s;
}

/// max_j ||z_c - <z_c, z_j> z_j|| + max_j ||w_j||; requires Omega = 0.
inline double equilibrium_residual(const ModelParams& p, const EnsembleState& s) {
    s.check_against(p);
    if (!p.zero_frequencies()) throw DomainError("equilibrium_residual: requires Omega_j = 0");
    const CVector zc = centroid(s);
    double pos = 0.0, vel = 0.0;
    for (std::size_t j = 0; j < s.N; ++j) {
        const Complex c = inner(zc, s.zj(j));
        CVector r(zc);
        for (std::size_t a = 0; a < s.dim; ++a) r[a] -= c * s.zj(j)[a];
        pos = std::max(pos, norm(r));
        vel = std::max(vel, norm(s.wj(j)));
    }
    return pos + vel;
}

/// Flattens (z, w) into (x, y, a, b).
inline Eigen::VectorXd realify(const EnsembleState& s) {
    const std::size_t n = s.z.size();
    Eigen::VectorXd x(static_cast<Eigen::Index>(4 * n));
    for (std::size_t i = 0; i < n; ++i) {
        x[static_cast<Eigen::Index>(i)] = s.z[i].real();
        x[static_cast<Eigen::Index>(n + i)] = s.z[i].imag();
        x[static_cast<Eigen::Index>(2 * n + i)] = s.w[i].real();
        x[static_cast<Eigen::Index>(3 * n + i)] = s.w[i].imag();
    }
    return x;
}

inline EnsembleState complexify(const Eigen::VectorXd& x, std::size_t N, std::size_t dim, double t = 0.0) {
    const std::size_t n = N * dim;
    if (static_cast<std::size_t>(x.size()) != 4 * n) throw DimensionError("complexify: wrong length");
    EnsembleState s(N, dim, t);
    for (std::size_t i = 0; i < n; ++i) {
        s.z[i] = {x[static_cast<Eigen::Index>(i)], x[static_cast<Eigen::Index>(n + i)]};
        s.w[i] = {x[static_cast<Eigen::Index>(2 * n + i)], x[static_cast<Eigen::Index>(3 * n + i)]};
    }
    return s;
}

/// Realified second-order vector field.
inline Eigen::VectorXd realified_field(const ModelParams& p, const EnsembleState& s) {
    EnsembleState out(s.N, s.dim, s.t);
    rhs_second_order(p, s, out.z, out.w);
    return realify(out);
}

/// Central finite-difference Jacobian of the realified second-order system at
/// an equilibrium (residual <= 1e-10).
inline Eigen::MatrixXd jacobian_fd(const ModelParams& p, const EnsembleState& s, double eps = 1e-5) {
    if (!(eps > 0.0)) throw DomainError("jacobian_fd: eps must be > 0");
    const double res = equilibrium_residual(p, s);
    if (!(res <= 1e-10)) throw DomainError("jacobian_fd: state is not an equilibrium (residual " + format_double(res) + ")");
    const Eigen::VectorXd x0 = realify(s);
    const Eigen::Index n = x0.size();
    Eigen::MatrixXd jac(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        Eigen::VectorXd xp = x0, xm = x0;
        xp[k] += eps;
        xm[k] -= eps;
        const auto fp = realified_field(p, complexify(xp, s.N, s.dim, s.t));
        const auto fm = realified_field(p, complexify(xm, s.N, s.dim, s.t));
        jac.col(k) = (fp - fm) / (2.0 * eps);
    }
    return jac;
}

/// Block (r, c) of the 4 x 4 block partition, 1-based as in M_rc.
inline Eigen::MatrixXd jacobian_block(const Eigen::MatrixXd& jac, int r, int c) {
    if (jac.rows() != jac.cols() || jac.rows() % 4 != 0) throw DimensionError("jacobian_block: not a 4x4 block matrix");
    if (r < 1 || r > 4 || c < 1 || c > 4) throw DomainError("jacobian_block: block index out of range");
    const Eigen::Index b = jac.rows() / 4;
    return jac.block((r - 1) * b, (c - 1) * b, b, b);
}

/// Lower-left 2(d+1)N block [[M31, M32], [M41, M42]].
inline Eigen::MatrixXd extract_Ms(const Eigen::MatrixXd& jac) {
    const Eigen::Index h = jac.rows() / 2;
    return jac.block(h, 0, h, h);
}

/// 2(d+1) kappa0 / m + 2 kappa1 / m
inline double trace_Ms_analytic(const ModelParams& p) {
    if (!(p.m > 0.0)) throw DomainError("trace_Ms_analytic: requires m > 0");
    return 2.0 * static_cast<double>(p.d + 1) * p.kappa0 / p.m + 2.0 * p.kappa1 / p.m;
}

inline double trace_Ms_numeric(const Eigen::MatrixXd& jac) {
    return jacobian_block(jac, 3, 1).trace() + jacobian_block(jac, 4, 2).trace();
}

/// Deviations of the Jacobian from its fixed block pattern:
///   zero:     M11, M12, M14, M21, M22, M23
///   identity: M13 - I, M24 - I
///   friction: M33 + (gamma/m) I, M44 + (gamma/m) I, M34, M43
struct BlockResiduals {
    double zero = 0.0;
    double identity = 0.0;
    double friction = 0.0;
};

inline BlockResiduals block_structure_residuals(const Eigen::MatrixXd& jac, const ModelParams& p) {
    const Eigen::Index b = jac.rows() / 4;
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(b, b);
    auto maxabs = [](const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); };
    BlockResiduals r;
    for (auto [i, j] : {std::pair{1, 1}, {1, 2}, {1, 4}, {2, 1}, {2, 2}, {2, 3}})
        r.zero = std::max(r.zero, maxabs(jacobian_block(jac, i, j)));
    r.identity = std::max(maxabs(jacobian_block(jac, 1, 3) - eye), maxabs(jacobian_block(jac, 2, 4) - eye));
    const double f = p.gamma / p.m;
    r.friction = std::max({maxabs(jacobian_block(jac, 3, 3) + f * eye), maxabs(jacobian_block(jac, 4, 4) + f * eye),
                           maxabs(jacobian_block(jac, 3, 4)), maxabs(jacobian_block(jac, 4, 3))});
    return r;
}

/// Positive root of lambda (gamma/m + lambda) = lambda0:
///   (-gamma + sqrt(gamma^2 + 4 m^2 lambda0)) / (2m).
inline double lifted_rate(const ModelParams& p, double lambda0) {
    if (!(p.m > 0.0)) throw DomainError("lifted_rate: requires m > 0");
    return (-p.gamma + std::sqrt(p.gamma * p.gamma + 4.0 * p.m * p.m * lambda0)) / (2.0 * p.m);
}

/// lambda_p = 2 kappa0 (N - 2n) / (m N)
inline double bipolar_lambda_p(const ModelParams& p, std::size_t N, std::size_t n) {
    if (!(p.m > 0.0)) throw DomainError("bipolar_lambda_p: requires m > 0");
    if (n < 1 || 2 * n >= N) throw DomainError("bipolar_lambda_p: requires 1 <= n < N/2");
    return 2.0 * p.kappa0 * static_cast<double>(N - 2 * n) / (p.m * static_cast<double>(N));
}

/// Predicted growth rate lambda_+ of the bipolar state's unstable mode.
inline double bipolar_growth_rate(const ModelParams& p, std::size_t N, std::size_t n) {
    return lifted_rate(p, bipolar_lambda_p(p, N, n));
}

struct Mode {
    std::complex<double> eigenvalue;
    Eigen::VectorXd direction; // unit real vector (real part of the eigenvector)
};

/// Eigenpair with the largest real part.
inline Mode dominant_mode(const Eigen::MatrixXd& jac) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(jac);
    if (es.info() != Eigen::Success) throw DomainError("dominant_mode: eigen-decomposition failed");
    const auto& vals = es.eigenvalues();
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < vals.size(); ++k)
        if (vals[k].real() > vals[best].real()) best = k;
    Mode m;
    m.eigenvalue = vals[best];
    Eigen::VectorXd v = es.eigenvectors().col(best).real();
    if (v.norm() == 0.0) v = es.eigenvectors().col(best).imag();
    m.direction = v / v.norm();
    return m;
}

/// Largest real part among the eigenvalues of the M_s block; the numeric
/// counterpart of lambda_p.
inline double dominant_Ms_eigenvalue(const Eigen::MatrixXd& jac) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(extract_Ms(jac), false);
    if (es.info() != Eigen::Success) throw DomainError("dominant_Ms_eigenvalue: eigen-decomposition failed");
    double best = -std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) best = std::max(best, es.eigenvalues()[k].real());
    return best;
}

struct GrowthMeasurement {
    double rate = std::numeric_limits<double>::quiet_NaN(); // NaN when the window has < 2 samples
    std::size_t window_samples = 0;
    double initial_norm = 0.0;
    double max_norm = 0.0;
    double final_norm = 0.0;
};

/// Integrates from eq + eps * direction and fits log ||X(t) - X_eq|| over the
/// samples whose perturbation norm lies in [10 eps, 1e-2].
inline GrowthMeasurement measure_growth_rate(const ModelParams& p, const EnsembleState& eq,
                                             const Eigen::VectorXd& direction, double eps, double t_end,
                                             std::optional<double> dt = std::nullopt) {
    if (!(eps > 0.0)) throw DomainError("measure_growth_rate: eps must be > 0");
    const Eigen::VectorXd x0 = realify(eq);
    if (direction.size() != x0.size()) throw DimensionError("measure_growth_rate: direction has wrong length");
    const Eigen::VectorXd seed = x0 + eps * direction / direction.norm();
    IntegratorConfig cfg;
    cfg.t_end = t_end;
    cfg.dt = dt.value_or(default_dt(p, ModelKind::second_order));
    cfg.renormalize = true;
    GrowthMeasurement g;
    std::vector<double> ts, ns;
    bool first = true;
    simulate(p, complexify(seed, eq.N, eq.dim), cfg, ModelKind::second_order,
             [&](const EnsembleState& s, std::size_t) {
                 const double nrm = (realify(s) - x0).norm();
                 if (first) g.initial_norm = nrm;
                 first = false;
                 g.max_norm = std::max(g.max_norm, nrm);
                 g.final_norm = nrm;
                 if (nrm >= 10.0 * eps && nrm <= 1e-2) {
                     ts.push_back(s.t);
                     ns.push_back(nrm);
                 }
             });
    g.window_samples = ts.size();
    if (ts.size() >= 2) g.rate = fit_log_linear_rate(ts, ns);
    return g;
}

struct StabilityReport {
    EquilibriumKind kind = EquilibriumKind::aggregated;
    std::size_t N = 0, d = 0, n = 0;
    double residual = 0.0;
    BlockResiduals blocks;
    double trace_numeric = 0.0;
    double trace_analytic = 0.0;
    std::optional<double> predicted_rate;   // from the closed-form lambda_p
    double dominant_Ms = 0.0;               // numeric counterpart of lambda_p
    double lifted_numeric_rate = 0.0;       // lambda_+ lifted from dominant_Ms
    std::complex<double> dominant_eigenvalue;
    std::optional<GrowthMeasurement> growth;
};

inline nlohmann::json to_json(const StabilityReport& r) {
    nlohmann::json j = {{"kind", to_string(r.kind)},
                        {"N", r.N},
                        {"d", r.d},
                        {"n", r.n},
                        {"residual", r.residual},
                        {"block_residuals", {{"zero", r.blocks.zero}, {"identity", r.blocks.identity}, {"friction", r.blocks.friction}}},
                        {"trace_Ms_numeric", r.trace_numeric},
                        {"trace_Ms_analytic", r.trace_analytic},
                        {"dominant_Ms_eigenvalue", r.dominant_Ms},
                        {"lifted_numeric_rate", r.lifted_numeric_rate},
                        {"dominant_eigenvalue", {r.dominant_eigenvalue.real(), r.dominant_eigenvalue.imag()}}};
    j["predicted_rate"] = r.predicted_rate ? nlohmann::json(*r.predicted_rate) : nlohmann::json(nullptr);
    if (r.growth) {
        const auto& g = *r.growth;
        j["measured"] = {{"rate", std::isfinite(g.rate) ? nlohmann::json(g.rate) : nlohmann::json(nullptr)},
                         {"window_samples", g.window_samples},
                         {"initial_norm", g.initial_norm},
                         {"max_norm", g.max_norm},
                         {"final_norm", g.final_norm}};
    }
    return j;
}

/// Full analysis of an equilibrium of a zero-frequency ensemble: Jacobian block
/// pattern, M_s trace, dominant mode and, when `t_end > 0`, a measured growth
/// rate along the dominant mode seeded with amplitude `eps`.
inline StabilityReport analyze_equilibrium(const ModelParams& p, const EquilibriumSpec& spec, double t_end = 0.0,
                                           double eps = 1e-6, double fd_eps = 1e-5) {
    const EnsembleState eq = make_equilibrium(spec);
    StabilityReport r;
    r.kind = spec.kind;
    r.N = spec.N;
    r.d = spec.d;
    r.n = spec.n;
    r.residual = equilibrium_residual(p, eq);
    const Eigen::MatrixXd jac = jacobian_fd(p, eq, fd_eps);
    r.blocks = block_structure_residuals(jac, p);
    r.trace_numeric = trace_Ms_numeric(jac);
    r.trace_analytic = trace_Ms_analytic(p);
    if (spec.kind == EquilibriumKind::bipolar) r.predicted_rate = bipolar_growth_rate(p, spec.N, spec.n);
    r.dominant_Ms = dominant_Ms_eigenvalue(jac);
    r.lifted_numeric_rate = r.dominant_Ms > 0.0 ? lifted_rate(p, r.dominant_Ms) : 0.0;
    const Mode mode = dominant_mode(jac);
    r.dominant_eigenvalue = mode.eigenvalue;
    if (t_end > 0.0) r.growth = measure_growth_rate(p, eq, mode.direction, eps, t_end);
    return r;
}

} // namespace lohe

#endif // LOHE_STABILITY_HPP
