#ifndef LOHE_DIAGNOSTICS_HPP
#define LOHE_DIAGNOSTICS_HPP

// Scalar functionals of an ensemble snapshot: two-point correlations,
// aggregation functional G and its time derivative, the energy functional,
// order parameter, diameters and the a-priori bounds used by the aggregation
// frameworks.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lohe/error.hpp"
#include "lohe/linalg.hpp"
#include "lohe/model.hpp"

namespace lohe {

/// h_ij = <z_i, z_j>, g_ij = 1 - h_ij, stored N x N row-major.
struct Correlations {
    std::size_t N = 0;
    std::vector<Complex> h;
    std::vector<Complex> g;

    Complex h_at(std::size_t i, std::size_t j) const { return h[i * N + j]; }
    Complex g_at(std::size_t i, std::size_t j) const { return g[i * N + j]; }
};

inline Correlations correlations(ConstCSpan z, std::size_t n, std::size_t dim) {
    if (z.size() != n * dim) throw DimensionError("correlations: size mismatch");
    Correlations c;
    c.N = n;
    c.h.resize(n * n);
    c.g.resize(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            const Complex hij = inner(z.subspan(i * dim, dim), z.subspan(j * dim, dim));
            c.h[i * n + j] = hij;
            c.h[j * n + i] = std::conj(hij);
            c.g[i * n + j] = 1.0 - hij;
            c.g[j * n + i] = 1.0 - std::conj(hij);
        }
    return c;
}

inline Correlations correlations(const EnsembleState& s) { return correlations(s.z, s.N, s.dim); }

/// G = (1/N^2) sum_ij |g_ij|^2
inline double aggregation_G(ConstCSpan z, std::size_t n, std::size_t dim) {
    if (z.size() != n * dim) throw DimensionError("aggregation_G: size mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            sum += 2.0 * std::norm(1.0 - inner(z.subspan(i * dim, dim), z.subspan(j * dim, dim)));
    for (std::size_t i = 0; i < n; ++i) sum += std::norm(1.0 - norm_squared(z.subspan(i * dim, dim)));
    return sum / static_cast<double>(n * n);
}

/// dG/dt from positions and velocities: dg_ij/dt = -<w_i, z_j> - <z_i, w_j>,
/// dG/dt = (1/N^2) sum_ij 2 Re(dg_ij/dt conj(g_ij)).
inline double aggregation_Gdot(ConstCSpan z, ConstCSpan w, std::size_t n, std::size_t dim) {
    if (z.size() != n * dim || w.size() != z.size()) throw DimensionError("aggregation_Gdot: size mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const auto zi = z.subspan(i * dim, dim), zj = z.subspan(j * dim, dim);
            const auto wi = w.subspan(i * dim, dim), wj = w.subspan(j * dim, dim);
            const Complex g = 1.0 - inner(zi, zj);
            const Complex gdot = -(inner(wi, zj) + inner(zi, wj));
            sum += 2.0 * (gdot * std::conj(g)).real();
        }
    return sum / static_cast<double>(n * n);
}

inline double aggregation_G(const EnsembleState& s) { return aggregation_G(s.z, s.N, s.dim); }
inline double aggregation_Gdot(const EnsembleState& s) { return aggregation_Gdot(s.z, s.w, s.N, s.dim); }

inline CVector centroid(const EnsembleState& s) { return detail::centroid(s.z, s.N, s.dim); }

/// rho = || (1/N) sum_j z_j ||
inline double order_parameter(ConstCSpan z, std::size_t n, std::size_t dim) {
    return norm(detail::centroid(z, n, dim));
}
inline double order_parameter(const EnsembleState& s) { return order_parameter(s.z, s.N, s.dim); }

/// The energy functional evaluated two ways: with the mean squared distance to
/// the centroid, and with 1 - ||z_c||^2. They coincide on the unit sphere.
struct EnergyForms {
    double centroid_form = 0.0;
    double order_form = 0.0;
};

namespace detail {

inline double energy_weight(const ModelParams& p) {
    if (!(p.kappa0 + p.kappa1 > 0.0)) throw DomainError("energy: kappa0 + kappa1 must be > 0");
    return (p.kappa0 + 2.0 * p.kappa1) / (2.0 * (p.kappa0 + p.kappa1));
}

/// Velocities in the reduced (co-rotating) frame of a homogeneous ensemble,
/// up to a common unitary: v_j = w_j - Omega z_j / gamma.
inline std::vector<Complex> reduced_velocities(const ModelParams& p, const EnsembleState& s) {
    std::vector<Complex> v(s.w.size());
    for (std::size_t j = 0; j < s.N; ++j) {
        const CVector vj = relative_velocity(p, s.zj(j), s.wj(j), j);
        std::copy(vj.begin(), vj.end(), v.begin() + static_cast<std::ptrdiff_t>(j * s.dim));
    }
    return v;
}

} // namespace detail

/// E = (1/N) sum_j ( m||u'_j||^2 - m c |<u_j,u'_j>|^2 + kappa0 ||u_c - u_j||^2 ),
/// c = (kappa0 + 2 kappa1) / (2 (kappa0 + kappa1)), in the co-rotating frame of
/// a homogeneous ensemble (u' has the norms of v = w - Omega z / gamma).
inline EnergyForms energy_forms(const ModelParams& p, const EnsembleState& s) {
    s.check_against(p);
    if (!p.homogeneous()) throw DomainError("energy: defined for homogeneous ensembles only");
    const double c = detail::energy_weight(p);
    const auto v = detail::reduced_velocities(p, s);
    const CVector zc = centroid(s);
    double kinetic = 0.0, spread = 0.0;
    for (std::size_t j = 0; j < s.N; ++j) {
        const ConstCSpan zj = s.zj(j);
        const ConstCSpan vj(v.data() + j * s.dim, s.dim);
        kinetic += p.m * (norm_squared(vj) - c * std::norm(inner(zj, vj)));
        spread += p.kappa0 * norm_squared(CVector(zc) - CVector(zj));
    }
    const double n = static_cast<double>(s.N);
    return {(kinetic + spread) / n, kinetic / n + p.kappa0 * (1.0 - norm_squared(zc))};
}

inline double energy(const ModelParams& p, const EnsembleState& s) { return energy_forms(p, s).centroid_form; }

/// Exact dE/dt of the order-form energy along the second-order vector field
/// (homogeneous ensembles; evaluated in the co-rotating frame).
inline double energy_rate(const ModelParams& p, const EnsembleState& s) {
    s.check_against(p);
    if (!p.homogeneous()) throw DomainError("energy_rate: defined for homogeneous ensembles only");
    const double c = detail::energy_weight(p);
    EnsembleState r(s.N, s.dim, s.t);
    r.z = s.z;
    r.w = detail::reduced_velocities(p, s);
    std::vector<Complex> dz(r.z.size()), dw(r.w.size());
    rhs_homogeneous_reduced(p, r, dz, dw);
    double rate = 0.0;
    for (std::size_t j = 0; j < s.N; ++j) {
        const ConstCSpan z = r.zj(j), v = r.wj(j);
        const ConstCSpan a(dw.data() + j * s.dim, s.dim);
        const double v2 = norm_squared(v);
        const Complex zv = inner(z, v);
        rate += p.m * (2.0 * inner(v, a).real() - c * 2.0 * (std::conj(zv) * (v2 + inner(z, a))).real());
    }
    rate /= static_cast<double>(s.N);
    // d/dt (1 - ||z_c||^2) = -2 Re <z_c, dz_c/dt>
    const CVector zc = detail::centroid(r.z, r.N, r.dim);
    const CVector vc = detail::centroid(r.w, r.N, r.dim);
    rate -= 2.0 * p.kappa0 * inner(zc, vc).real();
    return rate;
}

/// Residual of dE/dt + (2 gamma/m) E - (2 kappa0 gamma/m)(1 - ||z_c||^2) = 0.
inline double energy_identity_residual(const ModelParams& p, const EnsembleState& s) {
    const double e = energy_forms(p, s).order_form;
    const double rho2 = norm_squared(centroid(s));
    return energy_rate(p, s) + 2.0 * p.gamma / p.m * e - 2.0 * p.kappa0 * p.gamma / p.m * (1.0 - rho2);
}

struct DiagnosticsRecord {
    double t = 0.0;
    double G = 0.0;
    double Gdot = 0.0;
    std::optional<double> energy;
    double rho = 0.0;
    double DZ = 0.0;
    double DW = 0.0;
    double R1 = 0.0;
    double R2 = 0.0;
    double R3 = 0.0;
    double JM = 0.0;
    double Domega = 0.0;
    double omega_inf = 0.0;
    double norm_drift = 0.0;

    bool all_finite() const {
        for (double x : {t, G, Gdot, rho, DZ, DW, R1, R2, R3, JM, Domega, omega_inf, norm_drift})
            if (!std::isfinite(x)) return false;
        return !energy || std::isfinite(*energy);
    }
};

/// Omega^inf = max_j ||Omega_j||_F
inline double omega_inf(const ModelParams& p) {
    double best = 0.0;
    for (const auto& o : p.omegas) best = std::max(best, frobenius_norm(o));
    return best;
}

/// D(Omega) = max_ij ||Omega_i - Omega_j||_F
inline double omega_diameter(const ModelParams& p) {
    double best = 0.0;
    for (std::size_t i = 0; i < p.omegas.size(); ++i)
        for (std::size_t j = i + 1; j < p.omegas.size(); ++j)
            best = std::max(best, frobenius_norm(p.omegas[i].matrix() - p.omegas[j].matrix()));
    return best;
}

inline double max_pair_distance(ConstCSpan x, std::size_t n, std::size_t dim) {
    double best = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            best = std::max(best, distance(x.subspan(i * dim, dim), x.subspan(j * dim, dim)));
    return best;
}

/// R1 = max_j ||w_j||^2
inline double R1(const EnsembleState& s) {
    double best = 0.0;
    for (std::size_t j = 0; j < s.N; ++j) best = std::max(best, norm_squared(s.wj(j)));
    return best;
}

/// R2 = max_j |<z_c, z_j> - <z_j, z_c>|^2
inline double R2(const EnsembleState& s) {
    const CVector zc = centroid(s);
    double best = 0.0;
    for (std::size_t j = 0; j < s.N; ++j) {
        const Complex a = inner(zc, s.zj(j));
        best = std::max(best, std::norm(a - std::conj(a)));
    }
    return best;
}

/// R3 = max_j ||v_j||
inline double R3(const ModelParams& p, const EnsembleState& s) {
    double best = 0.0;
    for (std::size_t j = 0; j < s.N; ++j) best = std::max(best, norm(relative_velocity(p, s.zj(j), s.wj(j), j)));
    return best;
}

/// J_M = max_ij ((1 - Re h_ij)^2 + (Im h_ij)^2)^{1/4}
inline double J_M(const EnsembleState& s) {
    double best = 0.0;
    for (std::size_t i = 0; i < s.N; ++i)
        for (std::size_t j = i + 1; j < s.N; ++j) {
            const Complex h = inner(s.zj(i), s.zj(j));
            const double re = 1.0 - h.real(), im = h.imag();
            best = std::max(best, std::pow(re * re + im * im, 0.25));
        }
    return best;
}

/// Whether the energy functional is meaningful for this model/parameter set.
inline bool energy_applicable(const ModelParams& p, ModelKind model) {
    return (model == ModelKind::second_order || model == ModelKind::gauge) && p.m > 0.0 &&
           p.kappa0 + p.kappa1 > 0.0 && p.homogeneous();
}

/// Full record for a physical snapshot (z, w = dz/dt).
inline DiagnosticsRecord compute_diagnostics(const ModelParams& p, const EnsembleState& s, ModelKind model) {
    s.check_against(p);
    DiagnosticsRecord r;
    r.t = s.t;
    r.G = aggregation_G(s);
    r.Gdot = aggregation_Gdot(s);
    if (energy_applicable(p, model)) r.energy = energy(p, s);
    r.rho = order_parameter(s);
    r.DZ = max_pair_distance(s.z, s.N, s.dim);
    r.DW = max_pair_distance(s.w, s.N, s.dim);
    r.R1 = R1(s);
    r.R2 = R2(s);
    r.R3 = R3(p, s);
    r.JM = J_M(s);
    r.Domega = omega_diameter(p);
    r.omega_inf = omega_inf(p);
    r.norm_drift = s.max_norm_drift();
    return r;
}

/// A-priori constants: M1 and the decay rates nu1, nu2 of the framework
/// Gronwall problem (a, b, c) = (m, gamma, 4 kappa0 delta), the practical
/// aggregation forcing U, and the snapshot functionals.
struct Bounds {
    double M1 = 0.0;
    std::optional<double> nu1;
    std::optional<double> nu2;
    double U = 0.0;
    double v_bound = 0.0;     // max{ ||v_j^in||, 2(kappa0+kappa1)/gamma }
    double zdot_bound = 0.0;  // v_bound + Omega^inf / gamma
    double R1 = 0.0, R2 = 0.0, R3 = 0.0;
    double omega_inf = 0.0, Domega = 0.0;
    double JM = 0.0, DZ = 0.0, DW = 0.0;
};

/// nu_{1,2} = (gamma +- sqrt(gamma^2 - 16 m kappa0 delta)) / (2m); absent
/// when the discriminant is negative or m = 0.
inline std::optional<double> nu1(const ModelParams& p) {
    const double disc = p.gamma * p.gamma - 16.0 * p.m * p.kappa0 * p.delta;
    if (disc < 0.0 || !(p.m > 0.0)) return std::nullopt;
    return (p.gamma + std::sqrt(disc)) / (2.0 * p.m);
}

inline std::optional<double> nu2(const ModelParams& p) {
    const double disc = p.gamma * p.gamma - 16.0 * p.m * p.kappa0 * p.delta;
    if (disc < 0.0 || !(p.m > 0.0)) return std::nullopt;
    return (p.gamma - std::sqrt(disc)) / (2.0 * p.m);
}

/// U = 4 Omega^inf + 8 kappa1 + (16 m / gamma^2) (Omega^inf + 2(kappa0 + kappa1))^2
inline double practical_forcing_U(const ModelParams& p) {
    const double oi = omega_inf(p);
    const double q = oi + 2.0 * (p.kappa0 + p.kappa1);
    return 4.0 * oi + 8.0 * p.kappa1 + 16.0 * p.m / (p.gamma * p.gamma) * q * q;
}

/// M1 = max{ ||w_j^in||, 2(kappa0 + kappa1)/gamma }, with w^in taken in the
/// co-rotating frame (equal to dz/dt when Omega = 0).
inline double M1(const ModelParams& p, const EnsembleState& init) {
    double best = 2.0 * (p.kappa0 + p.kappa1) / p.gamma;
    for (std::size_t j = 0; j < init.N; ++j)
        best = std::max(best, norm(relative_velocity(p, init.zj(j), init.wj(j), j)));
    return best;
}

inline Bounds bounds_and_rates(const ModelParams& p, const EnsembleState& s) {
    s.check_against(p);
    Bounds b;
    b.M1 = M1(p, s);
    b.nu1 = nu1(p);
    b.nu2 = nu2(p);
    b.U = practical_forcing_U(p);
    b.R1 = R1(s);
    b.R2 = R2(s);
    b.R3 = R3(p, s);
    b.omega_inf = omega_inf(p);
    b.Domega = omega_diameter(p);
    b.v_bound = std::max(b.R3, 2.0 * (p.kappa0 + p.kappa1) / p.gamma);
    b.zdot_bound = b.v_bound + b.omega_inf / p.gamma;
    b.JM = J_M(s);
    b.DZ = max_pair_distance(s.z, s.N, s.dim);
    b.DW = max_pair_distance(s.w, s.N, s.dim);
    return b;
}

/// Least-squares slope of log(values) against times. Needs >= 2 positive samples.
inline double fit_log_linear_rate(std::span<const double> times, std::span<const double> values) {
    if (times.size() != values.size()) throw DimensionError("fit_log_linear_rate: length mismatch");
    double st = 0, sy = 0, stt = 0, sty = 0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (!(values[k] > 0.0)) continue;
        const double y = std::log(values[k]);
        st += times[k];
        sy += y;
        stt += times[k] * times[k];
        sty += times[k] * y;
        ++n;
    }
    if (n < 2) throw DomainError("fit_log_linear_rate: need at least two positive samples");
    const double dn = static_cast<double>(n);
    const double denom = dn * stt - st * st;
    if (!(denom > 0.0)) throw DomainError("fit_log_linear_rate: degenerate time samples");
    return (dn * sty - st * sy) / denom;
}

// --- serialization -------------------------------------------------------

/// CSV column order of a diagnostics row.
inline constexpr const char* kCsvHeader = "t,G,Gdot,energy,rho,DZ,DW,R1,R2,R3,JM,norm_drift";

/// Round-trip exact double formatting (17 significant digits).
inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline void write_csv_row(std::ostream& os, const DiagnosticsRecord& r) {
    os << format_double(r.t) << ',' << format_double(r.G) << ',' << format_double(r.Gdot) << ','
       << (r.energy ? format_double(*r.energy) : std::string{}) << ',' << format_double(r.rho) << ','
       << format_double(r.DZ) << ',' << format_double(r.DW) << ',' << format_double(r.R1) << ','
       << format_double(r.R2) << ',' << format_double(r.R3) << ',' << format_double(r.JM) << ','
       << format_double(r.norm_drift) << '\n';
}

inline nlohmann::json to_json(const DiagnosticsRecord& r) {
    nlohmann::json j = {{"t", r.t},     {"G", r.G},       {"Gdot", r.Gdot}, {"rho", r.rho},
                        {"DZ", r.DZ},   {"DW", r.DW},     {"R1", r.R1},     {"R2", r.R2},
                        {"R3", r.R3},   {"JM", r.JM},     {"Domega", r.Domega},
                        {"omega_inf", r.omega_inf},       {"norm_drift", r.norm_drift}};
    j["energy"] = r.energy ? nlohmann::json(*r.energy) : nlohmann::json(nullptr);
    return j;
}

} // namespace lohe

#endif // LOHE_DIAGNOSTICS_HPP
