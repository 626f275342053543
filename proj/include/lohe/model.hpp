#ifndef LOHE_MODEL_HPP
#define LOHE_MODEL_HPP

// Vector fields of the Lohe Hermitian sphere family:
//   * second-order model with inertia m and friction gamma, state (z, w = dz/dt)
//   * its gauge form in u_j = e^{-t Omega_j / gamma} z_j
//   * the first-order model (m = 0, gamma = 1)
//   * the Kuramoto phase model (d = 1, kappa1 = 0, real states)
//
// All positions/velocities are stored flat, particle-major: entry j*(d+1)+a
// is component a of particle j.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "lohe/error.hpp"
#include "lohe/linalg.hpp"

namespace lohe {

enum class ModelKind { second_order, first_order, gauge, kuramoto };

inline const char* to_string(ModelKind k) noexcept {
    switch (k) {
    case ModelKind::second_order: return "second_order";
    case ModelKind::first_order: return "first_order";
    case ModelKind::gauge: return "gauge";
    case ModelKind::kuramoto: return "kuramoto";
    }
    return "?";
}

struct ModelParams {
    double m = 1.0;
    double gamma = 1.0;
    double kappa0 = 1.0;
    double kappa1 = 0.0;
    double delta = 0.5;
    std::size_t N = 1;
    std::size_t d = 1;
    std::vector<SkewHermitian> omegas;

    std::size_t dim() const noexcept { return d + 1; }

    /// Parameters with every Omega_j = 0.
    static ModelParams zero_frequency(std::size_t n, std::size_t d, double m, double gamma, double kappa0,
                                      double kappa1, double delta = 0.5) {
        ModelParams p;
        p.m = m;
        p.gamma = gamma;
        p.kappa0 = kappa0;
        p.kappa1 = kappa1;
        p.delta = delta;
        p.N = n;
        p.d = d;
        p.omegas.assign(n, SkewHermitian(d + 1));
        return p;
    }

    void validate() const {
        if (!(gamma > 0.0)) throw DomainError("ModelParams: gamma must be > 0");
        if (!(kappa0 >= 0.0)) throw DomainError("ModelParams: kappa0 must be >= 0");
        if (!(kappa1 >= 0.0)) throw DomainError("ModelParams: kappa1 must be >= 0");
        if (!(m >= 0.0)) throw DomainError("ModelParams: m must be >= 0");
        if (!(delta > 0.0 && delta < 1.0)) throw DomainError("ModelParams: delta must lie in (0, 1)");
        if (N < 1) throw DomainError("ModelParams: N must be >= 1");
        if (omegas.size() != N) throw DimensionError("ModelParams: need one frequency matrix per particle");
        for (const auto& o : omegas)
            if (o.dim() != dim()) throw DimensionError("ModelParams: frequency matrix has wrong dimension");
    }

    /// All Omega_j identical (bitwise).
    bool homogeneous() const {
        for (std::size_t j = 1; j < omegas.size(); ++j)
            if (!(omegas[j] == omegas[0])) return false;
        return true;
    }

    /// Homogeneous with Omega = 0.
    bool zero_frequencies() const {
        for (const auto& o : omegas)
            if (!o.is_zero()) return false;
        return true;
    }
};

/// Positions z_j and velocities w_j = dz_j/dt at time t.
struct EnsembleState {
    double t = 0.0;
    std::size_t N = 0;
    std::size_t dim = 0;
    std::vector<Complex> z;
    std::vector<Complex> w;

    EnsembleState() = default;
    EnsembleState(std::size_t n, std::size_t dim_, double t0 = 0.0)
        : t(t0), N(n), dim(dim_), z(n * dim_), w(n * dim_) {}

    ConstCSpan zj(std::size_t j) const { return {z.data() + j * dim, dim}; }
    ConstCSpan wj(std::size_t j) const { return {w.data() + j * dim, dim}; }
    CSpan zj(std::size_t j) { return {z.data() + j * dim, dim}; }
    CSpan wj(std::size_t j) { return {w.data() + j * dim, dim}; }

    void set(std::size_t j, ConstCSpan pos, ConstCSpan vel) {
        if (pos.size() != dim || vel.size() != dim) throw DimensionError("EnsembleState::set: wrong dimension");
        std::copy(pos.begin(), pos.end(), zj(j).begin());
        std::copy(vel.begin(), vel.end(), wj(j).begin());
    }

    void check_against(const ModelParams& p) const {
        if (N != p.N || dim != p.dim() || z.size() != N * dim || w.size() != N * dim)
            throw DimensionError("EnsembleState: dimensions inconsistent with ModelParams");
    }

    /// max_j | ||z_j|| - 1 |
    double max_norm_drift() const {
        double worst = 0.0;
        for (std::size_t j = 0; j < N; ++j) worst = std::max(worst, std::abs(norm(zj(j)) - 1.0));
        return worst;
    }
};

struct KuramotoState {
    std::vector<double> theta; // unwrapped phases
    std::vector<double> nus;
    double kappa = 0.0;
};

namespace detail {

inline CVector centroid(ConstCSpan z, std::size_t n, std::size_t dim) {
    CVector c(dim);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t a = 0; a < dim; ++a) c[a] += z[j * dim + a];
    c *= 1.0 / static_cast<double>(n);
    return c;
}

/// kappa0 (<z,z> zc - <zc,z> z) + kappa1 (<z,zc> - <zc,z>) z, accumulated into out.
inline void add_coupling(double kappa0, double kappa1, ConstCSpan zc, ConstCSpan z, CSpan out) {
    const Complex czz = inner(zc, z);
    const Complex czc = std::conj(czz); // <z, zc>
    const double zz = norm_squared(z);
    const Complex radial = -kappa0 * czz + kappa1 * (czc - czz);
    for (std::size_t a = 0; a < z.size(); ++a) out[a] += kappa0 * zz * zc[a] + radial * z[a];
}

} // namespace detail

/// v_j = w_j - Omega_j z_j / gamma
inline CVector relative_velocity(const ModelParams& p, ConstCSpan z, ConstCSpan w, std::size_t j) {
    CVector v(w);
    CVector oz = p.omegas[j] * z;
    for (std::size_t a = 0; a < v.size(); ++a) v[a] -= oz[a] / p.gamma;
    return v;
}

/// Second-order model, expanded in (z, w):
///   m dw/dt = (m/gamma) Omega w + (m/gamma) Omega v - gamma w + Omega z
///             + coupling(z) - m ||v||^2 / ||z||^2 z,   v = w - Omega z / gamma.
/// Writes dz = w and dw into the output spans (flat, particle-major).
inline void rhs_second_order(const ModelParams& p, const EnsembleState& s, CSpan dz, CSpan dw) {
    if (!(p.m > 0.0)) throw DomainError("rhs_second_order: m = 0 has no inertia; use rhs_first_order");
    s.check_against(p);
    const std::size_t dim = s.dim;
    if (dz.size() != s.z.size() || dw.size() != s.w.size()) throw DimensionError("rhs_second_order: output size");
    const CVector zc = detail::centroid(s.z, s.N, dim);
    const double inv_m = 1.0 / p.m;
    const double mg = p.m / p.gamma;
    CVector oz(dim), ow(dim), ov(dim), v(dim), acc(dim);
    for (std::size_t j = 0; j < s.N; ++j) {
        const ConstCSpan z = s.zj(j);
        const ConstCSpan w = s.wj(j);
        const SkewHermitian& om = p.omegas[j];
        om.apply(z, oz);
        om.apply(w, ow);
        for (std::size_t a = 0; a < dim; ++a) v[a] = w[a] - oz[a] / p.gamma;
        om.apply(v, ov);
        const double v2 = norm_squared(v);
        const double z2 = norm_squared(z);
        for (std::size_t a = 0; a < dim; ++a) acc[a] = mg * ow[a] + mg * ov[a] - p.gamma * w[a] + oz[a];
        detail::add_coupling(p.kappa0, p.kappa1, zc, z, acc);
        for (std::size_t a = 0; a < dim; ++a) {
            acc[a] -= p.m * v2 / z2 * z[a];
            dz[j * dim + a] = w[a];
            dw[j * dim + a] = acc[a] * inv_m;
        }
    }
}

/// First-order model dz_j/dt = Omega_j z_j + coupling(z_j).
inline void rhs_first_order(const ModelParams& p, ConstCSpan z, CSpan dz) {
    const std::size_t dim = p.dim();
    if (z.size() != p.N * dim || dz.size() != z.size()) throw DimensionError("rhs_first_order: size mismatch");
    const CVector zc = detail::centroid(z, p.N, dim);
    for (std::size_t j = 0; j < p.N; ++j) {
        const ConstCSpan zj = z.subspan(j * dim, dim);
        const CSpan out = dz.subspan(j * dim, dim);
        p.omegas[j].apply(zj, out);
        detail::add_coupling(p.kappa0, p.kappa1, zc, zj, out);
    }
}

/// Rotation frames U_j(t) = e^{t Omega_j / gamma}.
inline std::vector<CMatrix> gauge_frames(const ModelParams& p, double t) {
    std::vector<CMatrix> frames;
    frames.reserve(p.N);
    for (const auto& o : p.omegas) frames.push_back(expm_skew(o, t / p.gamma));
    return frames;
}

/// Gauge system for u_j = U_j(t)^dagger z_j:
///   m u'' + gamma u' = kappa0 (||u_j||^2 c_j - <c_j, u_j> u_j) + kappa1 (<u_j, c_j> - <c_j, u_j>) u_j
///                      - m ||u'||^2 / ||u||^2 u_j,
/// where c_j = U_j^dagger z_c = (1/N) sum_k U_j^dagger U_k u_k. The pair factor
/// U_j^dagger U_k reduces to e^{(Omega_k - Omega_j) t / gamma} whenever Omega_j
/// and Omega_k commute (in particular for a homogeneous ensemble).
/// `s` holds (u, u') in its (z, w) slots.
inline void rhs_gauge(const ModelParams& p, const EnsembleState& s, CSpan du, CSpan dudot) {
    if (!(p.m > 0.0)) throw DomainError("rhs_gauge: m = 0 has no inertia");
    s.check_against(p);
    const std::size_t dim = s.dim;
    if (du.size() != s.z.size() || dudot.size() != s.w.size()) throw DimensionError("rhs_gauge: output size");
    const auto frames = gauge_frames(p, s.t);
    std::vector<Complex> zphys(s.z.size());
    for (std::size_t k = 0; k < s.N; ++k) frames[k].apply(s.zj(k), CSpan(zphys).subspan(k * dim, dim));
    const CVector zc = detail::centroid(zphys, s.N, dim);
    CVector cj(dim), acc(dim);
    for (std::size_t j = 0; j < s.N; ++j) {
        const ConstCSpan u = s.zj(j);
        const ConstCSpan ud = s.wj(j);
        // U_j^dagger z_c
        for (std::size_t a = 0; a < dim; ++a) {
            Complex sum{};
            for (std::size_t b = 0; b < dim; ++b) sum += std::conj(frames[j](b, a)) * zc[b];
            cj[a] = sum;
        }
        for (std::size_t a = 0; a < dim; ++a) acc[a] = -p.gamma * ud[a];
        detail::add_coupling(p.kappa0, p.kappa1, cj, u, acc);
        const double ud2 = norm_squared(ud);
        const double u2 = norm_squared(u);
        for (std::size_t a = 0; a < dim; ++a) {
            acc[a] -= p.m * ud2 / u2 * u[a];
            du[j * dim + a] = ud[a];
            dudot[j * dim + a] = acc[a] / p.m;
        }
    }
}

/// Homogeneous reduction: all Omega_j equal, so the gauge system loses its
/// frames and couples through u_c directly.
inline void rhs_homogeneous_reduced(const ModelParams& p, const EnsembleState& s, CSpan du, CSpan dudot) {
    ModelParams q = p;
    q.omegas.assign(p.N, SkewHermitian(p.dim()));
    rhs_second_order(q, s, du, dudot);
}

/// dtheta_j/dt = nu_j + (kappa/N) sum_k sin(theta_k - theta_j)
inline std::vector<double> rhs_kuramoto(const KuramotoState& s) {
    const std::size_t n = s.theta.size();
    if (s.nus.size() != n) throw DimensionError("rhs_kuramoto: theta and nus differ in length");
    std::vector<double> out(n);
    for (std::size_t j = 0; j < n; ++j) {
        double sum = 0.0;
        for (std::size_t k = 0; k < n; ++k) sum += std::sin(s.theta[k] - s.theta[j]);
        out[j] = s.nus[j] + s.kappa / static_cast<double>(n) * sum;
    }
    return out;
}

/// Removes the radial part of v_j = w_j - Omega_j z_j/gamma:
///   w'_j = w_j - Re<z_j, v_j> z_j   (assumes ||z_j|| = 1).
inline std::vector<Complex> project_admissible(const ModelParams& p, ConstCSpan z, ConstCSpan w) {
    const std::size_t dim = p.dim();
    if (z.size() != p.N * dim || w.size() != z.size()) throw DimensionError("project_admissible: size mismatch");
    std::vector<Complex> out(w.begin(), w.end());
    for (std::size_t j = 0; j < p.N; ++j) {
        const ConstCSpan zj = z.subspan(j * dim, dim);
        const CVector v = relative_velocity(p, zj, w.subspan(j * dim, dim), j);
        const double radial = inner(zj, v).real() / norm_squared(zj);
        for (std::size_t a = 0; a < dim; ++a) out[j * dim + a] -= radial * zj[a];
    }
    return out;
}

/// max_j |Re<z_j, v_j>|: zero for admissible data.
inline double admissibility_defect(const ModelParams& p, const EnsembleState& s) {
    double worst = 0.0;
    for (std::size_t j = 0; j < s.N; ++j)
        worst = std::max(worst, std::abs(inner(s.zj(j), relative_velocity(p, s.zj(j), s.wj(j), j)).real()));
    return worst;
}

/// Physical state (z, dz/dt) from gauge state (u, u'):
///   z = U u,  w = (Omega/gamma) z + U u'.
inline EnsembleState gauge_to_physical(const ModelParams& p, const EnsembleState& g) {
    g.check_against(p);
    const auto frames = gauge_frames(p, g.t);
    EnsembleState s(g.N, g.dim, g.t);
    CVector oz(g.dim), uw(g.dim);
    for (std::size_t j = 0; j < g.N; ++j) {
        frames[j].apply(g.zj(j), s.zj(j));
        frames[j].apply(g.wj(j), uw);
        p.omegas[j].apply(s.zj(j), oz);
        for (std::size_t a = 0; a < g.dim; ++a) s.wj(j)[a] = oz[a] / p.gamma + uw[a];
    }
    return s;
}

/// Gauge state (u, u') = (U^dagger z, U^dagger v) from a physical state.
inline EnsembleState physical_to_gauge(const ModelParams& p, const EnsembleState& s) {
    s.check_against(p);
    const auto frames = gauge_frames(p, s.t);
    EnsembleState g(s.N, s.dim, s.t);
    for (std::size_t j = 0; j < s.N; ++j) {
        const CMatrix back = frames[j].adjoint();
        back.apply(s.zj(j), g.zj(j));
        const CVector v = relative_velocity(p, s.zj(j), s.wj(j), j);
        back.apply(v, g.wj(j));
    }
    return g;
}

/// Kuramoto ansatz z_j = (cos theta_j, sin theta_j), Omega_j = [[0,-nu_j],[nu_j,0]].
inline ModelParams kuramoto_params(const std::vector<double>& nus, double kappa, double m = 0.0, double gamma = 1.0) {
    ModelParams p;
    p.m = m;
    p.gamma = gamma;
    p.kappa0 = kappa;
    p.kappa1 = 0.0;
    p.N = nus.size();
    p.d = 1;
    for (double nu : nus) p.omegas.push_back(SkewHermitian::planar_rotation(nu));
    return p;
}

inline std::vector<Complex> kuramoto_positions(std::span<const double> theta) {
    std::vector<Complex> z(2 * theta.size());
    for (std::size_t j = 0; j < theta.size(); ++j) {
        z[2 * j] = std::cos(theta[j]);
        z[2 * j + 1] = std::sin(theta[j]);
    }
    return z;
}

/// Natural frequencies nu_j read back from planar rotation generators.
inline std::vector<double> kuramoto_frequencies(const ModelParams& p) {
    if (p.d != 1) throw DomainError("kuramoto_frequencies: requires d = 1");
    std::vector<double> nus;
    for (const auto& o : p.omegas) {
        const double nu = o(1, 0).real();
        if (!(o == SkewHermitian::planar_rotation(nu)))
            throw DomainError("kuramoto_frequencies: frequency matrix is not a real planar rotation");
        nus.push_back(nu);
    }
    return nus;
}

/// Phase of a real unit vector (cos theta, sin theta), unwrapped toward `near`.
inline double phase_near(ConstCSpan z, double near) {
    const double raw = std::atan2(z[1].real(), z[0].real());
    const double two_pi = 2.0 * std::numbers::pi;
    return raw + two_pi * std::round((near - raw) / two_pi);
}

} // namespace lohe

#endif // LOHE_MODEL_HPP
