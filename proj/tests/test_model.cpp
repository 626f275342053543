#include <gtest/gtest.h>

#include <random>

#include "lohe/initial.hpp"
#include "lohe/integrator.hpp"
#include "lohe/model.hpp"

using namespace lohe;

namespace {

ModelParams heterogeneous(std::mt19937_64& rng, std::size_t n, std::size_t d, double m = 0.7) {
    ModelParams p;
    p.m = m;
    p.gamma = 1.3;
    p.kappa0 = 0.9;
    p.kappa1 = 0.4;
    p.N = n;
    p.d = d;
    for (std::size_t j = 0; j < n; ++j) p.omegas.push_back(random_skew_hermitian(rng, d, 1.0));
    return p;
}

double max_abs_diff(ConstCSpan a, ConstCSpan b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

// m z'' = -gamma z' + k0 (z_c - <z_c,z> z) + k1 (<z,z_c> - <z_c,z>) z - m ||z'||^2 z,
// valid for unit positions and zero frequencies.
std::vector<Complex> unit_sphere_acceleration(const ModelParams& p, const EnsembleState& s) {
    std::vector<Complex> out(s.z.size());
    std::vector<Complex> zc(s.dim);
    for (std::size_t j = 0; j < s.N; ++j)
        for (std::size_t a = 0; a < s.dim; ++a) zc[a] += s.z[j * s.dim + a] / static_cast<double>(s.N);
    for (std::size_t j = 0; j < s.N; ++j) {
        Complex czj{}, zjc{};
        double w2 = 0.0;
        for (std::size_t a = 0; a < s.dim; ++a) {
            czj += std::conj(zc[a]) * s.z[j * s.dim + a];
            zjc += std::conj(s.z[j * s.dim + a]) * zc[a];
            w2 += std::norm(s.w[j * s.dim + a]);
        }
        for (std::size_t a = 0; a < s.dim; ++a) {
            const Complex z = s.z[j * s.dim + a], w = s.w[j * s.dim + a];
            out[j * s.dim + a] = (-p.gamma * w + p.kappa0 * (zc[a] - czj * z) + p.kappa1 * (zjc - czj) * z -
                                  p.m * w2 * z) / p.m;
        }
    }
    return out;
}

// Gauge-frame acceleration with pair factor e^{(Omega_k - Omega_j) t / gamma}, as
// written for commuting frequencies.
std::vector<Complex> pair_factor_gauge_acceleration(const ModelParams& p, const EnsembleState& g) {
    const std::size_t dim = g.dim;
    std::vector<Complex> out(g.z.size());
    for (std::size_t j = 0; j < g.N; ++j) {
        CVector cj(dim);
        for (std::size_t k = 0; k < g.N; ++k) {
            const CMatrix f = expm(Complex(g.t / p.gamma) * (p.omegas[k].matrix() - p.omegas[j].matrix()));
            cj += f * g.zj(k);
        }
        cj *= 1.0 / static_cast<double>(g.N);
        const ConstCSpan u = g.zj(j), ud = g.wj(j);
        const Complex cu = inner(cj, u), uc = inner(u, cj);
        for (std::size_t a = 0; a < dim; ++a)
            out[j * dim + a] = (-p.gamma * ud[a] + p.kappa0 * (norm_squared(u) * cj[a] - cu * u[a]) +
                                p.kappa1 * (uc - cu) * u[a] - p.m * norm_squared(ud) / norm_squared(u) * u[a]) / p.m;
    }
    return out;
}

} // namespace

TEST(ModelParams, ValidationRejectsBadValues) {
    auto p = ModelParams::zero_frequency(3, 1, 1.0, 1.0, 1.0, 0.0);
    EXPECT_NO_THROW(p.validate());
    auto q = p;
    q.gamma = 0.0;
    EXPECT_THROW(q.validate(), DomainError);
    q = p;
    q.delta = 1.0;
    EXPECT_THROW(q.validate(), DomainError);
    q = p;
    q.kappa1 = -0.1;
    EXPECT_THROW(q.validate(), DomainError);
    q = p;
    q.omegas.pop_back();
    EXPECT_THROW(q.validate(), DimensionError);
    q = p;
    q.omegas[0] = SkewHermitian(3);
    EXPECT_THROW(q.validate(), DimensionError);
}

TEST(ModelParams, Homogeneity) {
    auto p = ModelParams::zero_frequency(3, 1, 1.0, 1.0, 1.0, 0.0);
    EXPECT_TRUE(p.homogeneous());
    EXPECT_TRUE(p.zero_frequencies());
    p.omegas.assign(3, SkewHermitian::planar_rotation(0.5));
    EXPECT_TRUE(p.homogeneous());
    EXPECT_FALSE(p.zero_frequencies());
    p.omegas[1] = SkewHermitian::planar_rotation(0.6);
    EXPECT_FALSE(p.homogeneous());
}

TEST(SecondOrder, ZeroFrequencyMatchesUnitSphereForm) {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 5; ++trial) {
        const auto p = ModelParams::zero_frequency(6, 2, 0.3, 1.1, 1.7, 0.6);
        const auto s = random_state(rng, p, 0.8);
        std::vector<Complex> dz(s.z.size()), dw(s.w.size());
        rhs_second_order(p, s, dz, dw);
        EXPECT_EQ(max_abs_diff(dz, s.w), 0.0);
        EXPECT_LT(max_abs_diff(dw, unit_sphere_acceleration(p, s)), 1e-13);
    }
}

TEST(SecondOrder, HeterogeneousMatchesGaugeReconstruction) {
    // z = U u with U = e^{t Omega / gamma}:
    //   z'' = U u'' + (2/gamma) Omega U u' + (1/gamma^2) Omega^2 U u.
    std::mt19937_64 rng(2);
    const auto p = heterogeneous(rng, 5, 2);
    auto s = random_state(rng, p, 0.6);
    s.t = 0.83;
    std::vector<Complex> dz(s.z.size()), dw(s.w.size());
    rhs_second_order(p, s, dz, dw);

    const EnsembleState g = physical_to_gauge(p, s);
    std::vector<Complex> du(g.z.size()), dud(g.w.size());
    rhs_gauge(p, g, du, dud);
    const auto frames = gauge_frames(p, s.t);
    for (std::size_t j = 0; j < p.N; ++j) {
        const CMatrix& U = frames[j];
        const CMatrix& O = p.omegas[j].matrix();
        const CVector a = U * ConstCSpan(dud.data() + j * 3, 3);
        const CVector b = O * (U * g.wj(j));
        const CVector c = O * (O * (U * g.zj(j)));
        for (std::size_t k = 0; k < 3; ++k) {
            const Complex expected = a[k] + 2.0 / p.gamma * b[k] + c[k] / (p.gamma * p.gamma);
            EXPECT_LT(std::abs(dw[j * 3 + k] - expected), 1e-12) << "particle " << j;
        }
    }
}

TEST(Gauge, CommutingFrequenciesMatchPairFactorForm) {
    std::mt19937_64 rng(3);
    auto p = ModelParams::zero_frequency(4, 1, 0.5, 1.0, 1.2, 0.3);
    // Commuting: all diagonal.
    for (std::size_t j = 0; j < p.N; ++j) {
        CMatrix a(2);
        a(0, 0) = Complex(0, 0.3 * static_cast<double>(j));
        a(1, 1) = Complex(0, -0.7 + 0.2 * static_cast<double>(j));
        p.omegas[j] = SkewHermitian::from_matrix(a);
    }
    auto g = random_state(rng, p, 0.5);
    g.t = 1.7;
    std::vector<Complex> du(g.z.size()), dud(g.w.size());
    rhs_gauge(p, g, du, dud);
    EXPECT_LT(max_abs_diff(dud, pair_factor_gauge_acceleration(p, g)), 1e-13);
}

TEST(Gauge, NonCommutingFrequenciesDepartFromPairFactorForm) {
    std::mt19937_64 rng(4);
    const auto p = heterogeneous(rng, 4, 2);
    auto g = random_state(rng, p, 0.5);
    g.t = 2.0;
    std::vector<Complex> du(g.z.size()), dud(g.w.size());
    rhs_gauge(p, g, du, dud);
    EXPECT_GT(max_abs_diff(dud, pair_factor_gauge_acceleration(p, g)), 1e-3);
}

TEST(Gauge, HomogeneousReductionMatchesGaugeSystem) {
    std::mt19937_64 rng(5);
    auto p = ModelParams::zero_frequency(5, 2, 0.4, 1.0, 1.0, 0.5);
    p.omegas.assign(5, random_skew_hermitian(rng, 2, 1.5));
    auto g = random_state(rng, p, 0.3);
    g.t = 3.1;
    std::vector<Complex> a(g.z.size()), b(g.w.size()), c(g.z.size()), d(g.w.size());
    rhs_gauge(p, g, a, b);
    rhs_homogeneous_reduced(p, g, c, d);
    EXPECT_LT(max_abs_diff(b, d), 1e-13);
}

TEST(Gauge, RoundTripThroughGaugeCoordinates) {
    std::mt19937_64 rng(6);
    const auto p = heterogeneous(rng, 4, 1);
    auto s = random_state(rng, p, 0.4);
    s.t = -0.7;
    const auto back = gauge_to_physical(p, physical_to_gauge(p, s));
    EXPECT_LT(max_abs_diff(back.z, s.z), 1e-14);
    EXPECT_LT(max_abs_diff(back.w, s.w), 1e-14);
}

TEST(SecondOrder, AdmissibleDataStayTangent) {
    // With ||z|| = 1 and Re<z, v> = 0 the norm is stationary to second order:
    // Re<z, w> = 0 and ||w||^2 + Re<z, w'> = 0.
    std::mt19937_64 rng(7);
    const auto p = heterogeneous(rng, 6, 2);
    const auto s = random_state(rng, p, 1.2);
    std::vector<Complex> dz(s.z.size()), dw(s.w.size());
    rhs_second_order(p, s, dz, dw);
    for (std::size_t j = 0; j < p.N; ++j) {
        EXPECT_LT(std::abs(inner(s.zj(j), s.wj(j)).real()), 1e-14);
        const double second = norm_squared(s.wj(j)) + inner(s.zj(j), ConstCSpan(dw.data() + j * 3, 3)).real();
        EXPECT_LT(std::abs(second), 1e-13);
    }
}

TEST(SecondOrder, RejectsMasslessAndMismatchedInput) {
    auto p = ModelParams::zero_frequency(3, 1, 0.0, 1.0, 1.0, 0.0);
    EnsembleState s(3, 2);
    std::vector<Complex> dz(6), dw(6);
    EXPECT_THROW(rhs_second_order(p, s, dz, dw), DomainError);
    p.m = 1.0;
    EnsembleState wrong(4, 2);
    EXPECT_THROW(rhs_second_order(p, wrong, dz, dw), DimensionError);
    std::vector<Complex> short_out(5);
    EXPECT_THROW(rhs_first_order(p, s.z, short_out), DimensionError);
}

TEST(FirstOrder, KuramotoAnsatzMatchesPhaseModel) {
    const std::vector<double> theta{0.2, 1.9, -2.4, 0.7, 3.0};
    const std::vector<double> nus{0.5, -0.3, 1.1, 0.0, -0.8};
    const double kappa = 1.4;
    const auto p = kuramoto_params(nus, kappa);
    const auto z = kuramoto_positions(theta);
    std::vector<Complex> dz(z.size());
    rhs_first_order(p, z, dz);
    const auto rates = rhs_kuramoto({theta, nus, kappa});
    for (std::size_t j = 0; j < theta.size(); ++j) {
        EXPECT_NEAR(std::abs(dz[2 * j] - (-std::sin(theta[j]) * rates[j])), 0.0, 1e-14);
        EXPECT_NEAR(std::abs(dz[2 * j + 1] - std::cos(theta[j]) * rates[j]), 0.0, 1e-14);
    }
}

TEST(Kuramoto, FrequencyReadBackAndValidation) {
    const auto p = kuramoto_params({0.5, -1.0}, 1.0);
    const auto nus = kuramoto_frequencies(p);
    EXPECT_DOUBLE_EQ(nus[0], 0.5);
    EXPECT_DOUBLE_EQ(nus[1], -1.0);
    auto q = p;
    CMatrix a(2);
    a(0, 0) = Complex(0, 1);
    q.omegas[0] = SkewHermitian::from_matrix(a);
    EXPECT_THROW(kuramoto_frequencies(q), DomainError);
    EXPECT_THROW(rhs_kuramoto({{0.0, 1.0}, {0.0}, 1.0}), DimensionError);
}

TEST(Kuramoto, PhaseUnwrapping) {
    const CVector z{std::cos(0.1), std::sin(0.1)};
    EXPECT_NEAR(phase_near(z, 2.0 * std::numbers::pi), 0.1 + 2.0 * std::numbers::pi, 1e-15);
    EXPECT_NEAR(phase_near(z, -6.0), 0.1 - 2.0 * std::numbers::pi, 1e-15);
}

TEST(Admissibility, ProjectionRemovesRadialVelocity) {
    std::mt19937_64 rng(8);
    const auto p = heterogeneous(rng, 4, 2);
    auto s = random_state(rng, p, 0.5);
    for (auto& w : s.w) w += Complex(0.3, -0.2);
    EXPECT_GT(admissibility_defect(p, s), 1e-3);
    s.w = project_admissible(p, s.z, s.w);
    EXPECT_LT(admissibility_defect(p, s), 1e-15);
    const auto again = project_admissible(p, s.z, s.w);
    EXPECT_LT(max_abs_diff(again, s.w), 1e-15);
}

TEST(InitialData, GeneratorsProduceAdmissibleUnitData) {
    std::mt19937_64 rng(9);
    const auto p = heterogeneous(rng, 7, 3);
    const auto s = random_state(rng, p, 0.9);
    const auto t = near_aggregated_state(rng, p, 0.1, 0.4);
    for (const auto* st : {&s, &t}) {
        EXPECT_LT(st->max_norm_drift(), 1e-14);
        EXPECT_LT(admissibility_defect(p, *st), 1e-14);
    }
    for (std::size_t j = 0; j < p.N; ++j) EXPECT_NEAR(norm(relative_velocity(p, s.zj(j), s.wj(j), j)), 0.9, 1e-14);
}

TEST(SecondOrder, CommonMotionFeelsNoCoupling) {
    auto p = ModelParams::zero_frequency(4, 1, 0.6, 1.4, 2.0, 0.5);
    const CVector z{std::cos(0.3), Complex(0.0, std::sin(0.3))};
    const CVector w{Complex(0.0, 0.8 * std::sin(0.3)), 0.8 * std::cos(0.3)}; // Re<z, w> = 0
    ASSERT_NEAR(inner(z, w).real(), 0.0, 1e-16);
    EnsembleState s(4, 2);
    for (std::size_t j = 0; j < 4; ++j) {
        std::copy(z.begin(), z.end(), s.zj(j).begin());
        std::copy(w.begin(), w.end(), s.wj(j).begin());
    }
    std::vector<Complex> dz(8), dw(8);
    rhs_second_order(p, s, dz, dw);
    const double w2 = norm_squared(w);
    for (std::size_t j = 0; j < 4; ++j)
        for (std::size_t a = 0; a < 2; ++a)
            EXPECT_NEAR(std::abs(dw[2 * j + a] - (-p.gamma * w[a] - p.m * w2 * z[a]) / p.m), 0.0, 1e-14);
}

TEST(SecondOrder, BipolarRestStateIsStationary) {
    const auto p = ModelParams::zero_frequency(5, 2, 0.3, 1.0, 1.7, 0.4);
    EnsembleState s(5, 3);
    const CVector a{Complex(0.0, 0.6), 0.8, 0.0};
    for (std::size_t j = 0; j < 5; ++j)
        for (std::size_t k = 0; k < 3; ++k) s.zj(j)[k] = j < 2 ? -a[k] : a[k];
    std::vector<Complex> dz(15), dw(15);
    rhs_second_order(p, s, dz, dw);
    for (const auto& x : dw) EXPECT_LT(std::abs(x), 1e-15);
}

TEST(FirstOrder, SingleParticleRotatesFreely) {
    std::mt19937_64 rng(10);
    auto p = ModelParams::zero_frequency(1, 2, 0.0, 1.0, 2.0, 0.7);
    p.omegas[0] = random_skew_hermitian(rng, 2, 1.0);
    const CVector z = random_unit_vector(rng, 2);
    std::vector<Complex> dz(3);
    rhs_first_order(p, z, dz);
    const CVector expected = p.omegas[0] * z;
    EXPECT_LT(max_abs_diff(dz, expected), 1e-15);
}

TEST(Kuramoto, HandEvaluatedPair) {
    const auto r = rhs_kuramoto({{0.0, std::numbers::pi / 2}, {0.0, 0.0}, 1.0});
    EXPECT_NEAR(r[0], 0.5, 1e-15);
    EXPECT_NEAR(r[1], -0.5, 1e-15);
    const auto same = rhs_kuramoto({{0.4, 0.4, 0.4}, {0.1, -0.2, 0.3}, 2.0});
    EXPECT_DOUBLE_EQ(same[1], -0.2);
}

TEST(SecondOrder, SmallMassStepTracksFirstOrderStep) {
    std::mt19937_64 rng(11);
    auto p = ModelParams::zero_frequency(4, 1, 1e-8, 1.0, 1.0, 0.3);
    for (auto& o : p.omegas) o = random_skew_hermitian(rng, 1, 0.5);
    auto q = p;
    q.m = 0.0;
    EnsembleState s = random_state(rng, p);
    rhs_first_order(q, s.z, s.w);
    s.w = project_admissible(p, s.z, s.w);
    const double dt = 0.25 * p.m / p.gamma;

    // 400 steps span 100 relaxation times m/gamma.
    System second(p, ModelKind::second_order), first(q, ModelKind::first_order);
    EnsembleState a = s, b = s;
    for (int k = 0; k < 400; ++k) {
        a = step_rk4(second, a, dt);
        b = step_rk4(first, b, dt);
    }
    EXPECT_LT(max_abs_diff(a.z, b.z), 1e-5);
    std::vector<Complex> slow(a.z.size());
    rhs_first_order(q, a.z, slow);
    EXPECT_LT(max_abs_diff(a.w, slow), 1e-5);
}
