#ifndef LOHE_INITIAL_HPP
#define LOHE_INITIAL_HPP

// Seeded initial data. All velocities are admissible: Re<z_j, v_j> = 0 with
// v_j = w_j - Omega_j z_j / gamma.

#include <cstddef>
#include <random>
#include <vector>

#include "lohe/error.hpp"
#include "lohe/linalg.hpp"
#include "lohe/model.hpp"

namespace lohe {

namespace detail {

template <class Rng>
CVector random_tangent(Rng& rng, ConstCSpan z, double scale) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    CVector v(z.size());
    for (auto& x : v) x = {gauss(rng), gauss(rng)};
    const double radial = inner(z, v).real() / norm_squared(z);
    for (std::size_t a = 0; a < v.size(); ++a) v[a] -= radial * z[a];
    const double n = norm(v);
    if (n > 0.0) v *= scale / n;
    return v;
}

/// w_j = Omega_j z_j / gamma + v_j
inline void set_velocity(const ModelParams& p, EnsembleState& s, std::size_t j, ConstCSpan v) {
    const CVector oz = p.omegas[j] * s.zj(j);
    for (std::size_t a = 0; a < s.dim; ++a) s.wj(j)[a] = oz[a] / p.gamma + v[a];
}

} // namespace detail

/// Independent uniform points on the sphere; each relative velocity is a
/// random tangent vector of norm `speed`.
template <class Rng>
EnsembleState random_state(Rng& rng, const ModelParams& p, double speed = 0.0) {
    p.validate();
    EnsembleState s(p.N, p.dim());
    for (std::size_t j = 0; j < p.N; ++j) {
        const CVector z = random_unit_vector(rng, p.d);
        std::copy(z.begin(), z.end(), s.zj(j).begin());
        detail::set_velocity(p, s, j, detail::random_tangent(rng, z, speed));
    }
    return s;
}

/// Points z_j = normalize(a + spread * xi_j) around a random axis a, xi_j
/// a random tangent direction of unit norm; relative velocities of norm `speed`.
template <class Rng>
EnsembleState near_aggregated_state(Rng& rng, const ModelParams& p, double spread, double speed = 0.0) {
    p.validate();
    if (!(spread >= 0.0)) throw DomainError("near_aggregated_state: spread must be >= 0");
    const CVector axis = random_unit_vector(rng, p.d);
    EnsembleState s(p.N, p.dim());
    for (std::size_t j = 0; j < p.N; ++j) {
        CVector z = axis + detail::random_tangent(rng, axis, spread);
        z *= 1.0 / norm(z);
        std::copy(z.begin(), z.end(), s.zj(j).begin());
        detail::set_velocity(p, s, j, detail::random_tangent(rng, z, speed));
    }
    return s;
}

/// Kuramoto ansatz data: z_j = (cos theta_j, sin theta_j) with the first-order
/// velocity filled in by the caller's integrator.
inline EnsembleState kuramoto_state(const std::vector<double>& theta) {
    EnsembleState s(theta.size(), 2);
    s.z = kuramoto_positions(theta);
    return s;
}

} // namespace lohe

#endif // LOHE_INITIAL_HPP
