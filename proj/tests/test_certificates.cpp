#include <gtest/gtest.h>

#include <random>

#include "lohe/certificates.hpp"
#include "lohe/initial.hpp"
#include "lohe/integrator.hpp"

using namespace lohe;

namespace {

// a y'' + b y' + c y + d = 0 by classical RK4 on (y, y'), written out by hand.
double ode_solution(const GronwallBound& g, double t_end, int steps = 20000) {
    const double h = t_end / steps;
    double y = g.y0, v = g.ydot0;
    auto acc = [&](double yy, double vv) { return -(g.b * vv + g.c * yy + g.d) / g.a; };
    for (int k = 0; k < steps; ++k) {
        const double k1y = v, k1v = acc(y, v);
        const double k2y = v + 0.5 * h * k1v, k2v = acc(y + 0.5 * h * k1y, v + 0.5 * h * k1v);
        const double k3y = v + 0.5 * h * k2v, k3v = acc(y + 0.5 * h * k2y, v + 0.5 * h * k2v);
        const double k4y = v + h * k3v, k4v = acc(y + h * k3y, v + h * k3v);
        y += h / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y);
        v += h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
    }
    return y;
}

ModelParams framework_a_params() { return ModelParams::zero_frequency(5, 1, 1e-4, 1.0, 10.0, 0.0, 0.5); }

EnsembleState aggregated_rest(std::size_t n, std::size_t dim) {
    EnsembleState s(n, dim);
    for (std::size_t j = 0; j < n; ++j) s.zj(j)[0] = 1.0;
    return s;
}

} // namespace

TEST(FrameworkA, DiscriminantExamples) {
    auto p = ModelParams::zero_frequency(5, 1, 0.01, 1.0, 10.0, 0.0, 0.5);
    const auto rest = aggregated_rest(5, 2);
    auto r = check_framework_A(p, rest);
    const Condition* a1 = r.find("A1: gamma^2 - 16 m kappa0 delta > 0");
    ASSERT_NE(a1, nullptr);
    EXPECT_NEAR(a1->lhs, 0.2, 1e-14);
    EXPECT_TRUE(a1->pass);
    p.m = 1.0;
    r = check_framework_A(p, rest);
    EXPECT_NEAR(r.conditions[0].lhs, -79.0, 1e-12);
    EXPECT_FALSE(r.conditions[0].pass);
    EXPECT_FALSE(r.overall);
}

TEST(FrameworkA, IdenticalRestEnsemblePassesWhenChainHolds) {
    const auto p = framework_a_params();
    const auto r = check_framework_A(p, aggregated_rest(5, 2));
    for (const auto& c : r.conditions) EXPECT_TRUE(c.pass) << c.name;
    EXPECT_TRUE(r.overall);
    // 16 m (2 kappa0 / gamma)^2 / (4 kappa0 delta)
    EXPECT_NEAR(framework_A_threshold(p, aggregated_rest(5, 2)), 0.032, 1e-15);
}

TEST(FrameworkA, OverallIsConjunctionAndMarginsAreReported) {
    auto p = framework_a_params();
    p.kappa1 = 1.0; // threshold exceeds the sphere cap
    const auto r = check_framework_A(p, aggregated_rest(5, 2));
    bool all = true;
    for (const auto& c : r.conditions) {
        all = all && c.pass;
        EXPECT_EQ(c.pass, c.margin() > 0.0);
    }
    EXPECT_EQ(r.overall, all);
    EXPECT_FALSE(r.overall);
    const auto j = to_json(r);
    EXPECT_EQ(j["conditions"].size(), r.conditions.size());
    EXPECT_TRUE(j["conditions"][0].contains("margin"));
}

TEST(FrameworkA, RejectsHeterogeneousEnsemble) {
    auto p = framework_a_params();
    p.omegas[2] = SkewHermitian::planar_rotation(0.1);
    EXPECT_THROW(check_framework_A(p, aggregated_rest(5, 2)), DomainError);
    EXPECT_THROW(check_framework_B(p, aggregated_rest(5, 2)), DomainError);
    EXPECT_NO_THROW(check_framework_C(p, aggregated_rest(5, 2)));
}

TEST(FrameworkB, DiscriminantExamples) {
    auto p = ModelParams::zero_frequency(5, 1, 1.0, 1.0, 10.0, 0.0, 0.5);
    auto r = check_framework_B(p, aggregated_rest(5, 2));
    EXPECT_NEAR(r.conditions[0].lhs, -79.0, 1e-12);
    EXPECT_TRUE(r.conditions[0].pass);
    p.m = 1e-6;
    r = check_framework_B(p, aggregated_rest(5, 2));
    EXPECT_FALSE(r.conditions[0].pass);
}

TEST(FrameworkB, ParameterChainNeverHoldsTogetherWithB1) {
    // With M1 >= 2 kappa0/gamma the threshold is at least (16 m kappa0/gamma^2)^2,
    // and B1 makes that exceed 1/delta^2 > (1-delta)^2/N.
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> logu(-4.0, 3.0), unit(0.01, 0.99);
    std::uniform_int_distribution<std::size_t> count(2, 20);
    std::size_t b1_cases = 0;
    for (int trial = 0; trial < 20000; ++trial) {
        const auto p = ModelParams::zero_frequency(count(rng), 1, std::pow(10.0, logu(rng)), std::pow(10.0, logu(rng)),
                                                   std::pow(10.0, logu(rng)), std::pow(10.0, logu(rng)) - 1e-4,
                                                   unit(rng));
        if (p.kappa1 < 0.0) continue;
        const auto r = check_framework_B(p, aggregated_rest(p.N, 2));
        if (!r.conditions[0].pass) continue;
        ++b1_cases;
        EXPECT_FALSE(r.conditions[2].pass) << "m=" << p.m << " gamma=" << p.gamma << " kappa0=" << p.kappa0;
    }
    EXPECT_GT(b1_cases, 1000u);
}

TEST(FrameworkB, RequiresInertia) {
    auto p = framework_a_params();
    p.m = 0.0;
    EXPECT_THROW(check_framework_B(p, aggregated_rest(5, 2)), DomainError);
}

TEST(FrameworkC, RestVelocitiesPassTheVelocityCondition) {
    auto p = framework_a_params();
    p.kappa1 = 0.0;
    const auto r = check_framework_C(p, aggregated_rest(5, 2));
    const Condition* c = r.find("C1: R3(V_in) < 2(kappa0+kappa1)/gamma");
    ASSERT_NE(c, nullptr);
    EXPECT_TRUE(c->pass);
    // U = 64 m kappa0^2 / gamma^2 when Omega^inf = kappa1 = 0.
    EXPECT_NEAR(framework_C_threshold(p), 64.0 * 1e-4 * 100.0 / (4.0 * 10.0 * 0.5), 1e-15);
}

TEST(FrameworkC, AnsatzThresholdVanishesForLargeCoupling) {
    auto p = framework_a_params();
    p.omegas.assign(5, SkewHermitian::planar_rotation(0.3));
    double previous = std::numeric_limits<double>::infinity();
    for (double k0 : {1e1, 1e2, 1e3, 1e4, 1e5}) {
        p.kappa0 = k0;
        p.m = ansatz_mass(k0, 1.0, 1.0);
        const double th = framework_C_threshold(p);
        EXPECT_LT(th, previous);
        previous = th;
    }
    EXPECT_LT(previous, 1e-3);
}

TEST(Envelope, ZeroDataGivesZero) {
    const GronwallBound g{1.0, 3.0, 2.0, 0.0, 0.0, 0.0};
    for (double t : {0.0, 0.5, 3.0}) EXPECT_EQ(gronwall_envelope(g, t), 0.0);
}

TEST(Envelope, OverdampedFormulaSolvesTheOde) {
    const std::vector<GronwallBound> cases{
        {1.0, 3.0, 2.0, -2.0, 0.0, 0.0}, {2.0, 5.0, 1.0, -0.5, 0.3, -0.2}, {0.5, 4.0, 3.0, 1.0, 0.1, 0.4}};
    for (const auto& g : cases) {
        ASSERT_EQ(g.damping(), Damping::overdamped);
        EXPECT_NEAR(gronwall_envelope(g, 0.0), g.y0, 1e-14);
        for (double t : {0.25, 1.0, 4.0}) EXPECT_NEAR(gronwall_envelope(g, t), ode_solution(g, t), 1e-8) << "t=" << t;
    }
}

TEST(Envelope, UniformBoundUnderInitialConditions) {
    // -d/c = 1, y0 + d/c = -0.5 < 0, y0' + nu1 y0 + 2d/(b - sqrt(D)) = 1 - 2 < 0.
    const GronwallBound g{1.0, 3.0, 2.0, -2.0, 0.5, 0.0};
    for (int k = 0; k <= 400; ++k) EXPECT_LT(gronwall_envelope(g, 0.05 * k), 1.0);
}

TEST(Envelope, UnderdampedFormulaDominatesTheOde) {
    const std::vector<GronwallBound> cases{
        {1.0, 1.0, 2.0, -1.0, 0.1, 0.0}, {2.0, 1.0, 5.0, -0.3, 0.0, 0.2}, {0.1, 0.5, 10.0, -2.0, 0.05, -0.1}};
    for (const auto& g : cases) {
        ASSERT_EQ(g.damping(), Damping::underdamped);
        for (double t : {0.1, 0.5, 1.0, 2.0, 5.0, 10.0})
            EXPECT_LE(ode_solution(g, t), gronwall_envelope(g, t) + 1e-9) << "t=" << t;
    }
}

TEST(Envelope, RejectsCriticalAndInvalidCoefficients) {
    EXPECT_THROW(gronwall_envelope({1.0, 2.0, 1.0, 0.0, 0.0, 0.0}, 1.0), DomainError);
    EXPECT_THROW(gronwall_envelope({0.0, 2.0, 1.0, 0.0, 0.0, 0.0}, 1.0), DomainError);
    EXPECT_THROW(gronwall_envelope({1.0, 3.0, -1.0, 0.0, 0.0, 0.0}, 1.0), DomainError);
}

TEST(PracticalBound, Examples) {
    auto p = ModelParams::zero_frequency(4, 1, 0.0, 1.0, 3.0, 0.0, 0.5);
    EXPECT_EQ(practical_bound(p), 0.0);
    p.kappa0 = 100.0;
    p.omegas.assign(4, SkewHermitian::planar_rotation(1.0 / std::sqrt(2.0)));
    p.m = ansatz_mass(100.0, 1.0, 1.0);
    const double full = practical_bound(p), simple = practical_bound_ansatz(p, 1.0, 1.0);
    EXPECT_NEAR(full, 0.02 + 4e-4 * 201.0 * 201.0 / 50.0, 1e-12);
    EXPECT_NEAR(simple, 0.02 + 1.28, 1e-12);
    EXPECT_LE(full, simple);

    auto q = p;
    q.kappa0 = 200.0;
    EXPECT_NEAR(practical_bound_ansatz(q, 1.0, 1.0), simple / 2.0, 1e-14);
    q.kappa0 = 0.0;
    EXPECT_THROW(practical_bound(q), DomainError);
}

TEST(Inequality, AggregatedRestHasZeroMargin) {
    const auto p = framework_a_params();
    IntegratorConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_end = 0.01;
    const auto traj = simulate(p, aggregated_rest(5, 2), cfg, ModelKind::second_order);
    const auto r = verify_inequality_F26(traj, p);
    EXPECT_EQ(r.violations, 0u);
    EXPECT_EQ(r.max_excess, 0.0);
    EXPECT_EQ(r.checked, traj.size() - 2);
}

TEST(Inequality, TooFewSamplesThrow) {
    const auto p = framework_a_params();
    IntegratorConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_end = 1e-3;
    const auto traj = simulate(p, aggregated_rest(5, 2), cfg, ModelKind::second_order);
    EXPECT_THROW(verify_inequality_F26(traj, p), DomainError);
}

TEST(Inequality, FrameworkAPassingRunIsSoundAndConsistent) {
    const auto p = framework_a_params();
    std::mt19937_64 rng(4);
    const auto init = near_aggregated_state(rng, p, 0.02);
    ASSERT_TRUE(check_framework_A(p, init).overall);
    IntegratorConfig cfg;
    cfg.dt = default_dt(p, ModelKind::second_order);
    cfg.t_end = 1.0;
    cfg.observe_every = 4000;
    const double threshold = framework_A_threshold(p, init);
    const auto envelope = homogeneous_envelope(p, init);
    InequalityMonitor mon(p);
    EnergyMonitor energy(p);
    double worst_threshold = -1.0, worst_envelope = -1.0;
    simulate(p, init, cfg, ModelKind::second_order, [&](const EnsembleState& s, std::size_t) {
        const auto r = compute_diagnostics(p, s, ModelKind::second_order);
        mon.observe(r);
        energy.observe(s);
        worst_threshold = std::max(worst_threshold, r.G - threshold);
        worst_envelope = std::max(worst_envelope, r.G - gronwall_envelope(envelope, r.t));
    });
    EXPECT_EQ(mon.report().violations, 0u);
    EXPECT_LT(worst_threshold, 1e-9);
    EXPECT_LT(worst_envelope, 1e-6);
    EXPECT_LE(energy.report().max_increase, 1e-8);

    // Negative control: positions scaled off the sphere.
    cfg.observe_every = 1;
    cfg.t_end = 0.01;
    Trajectory bad = simulate(p, init, cfg, ModelKind::second_order);
    for (std::size_t k = 0; k < bad.size(); ++k) {
        auto s = bad.states[k];
        for (auto& z : s.z) z *= 1.1;
        bad.diagnostics[k] = compute_diagnostics(p, s, ModelKind::second_order);
    }
    EXPECT_GT(verify_inequality_F26(bad, p).violations, 0u);
}

TEST(Decay, JmDecayReport) {
    auto p = ModelParams::zero_frequency(4, 1, 0.0, 1.0, 1.0, 0.0);
    std::mt19937_64 rng(5);
    const auto init = near_aggregated_state(rng, p, 0.3);
    IntegratorConfig cfg;
    cfg.dt = 1e-2;
    cfg.t_end = 5.0;
    cfg.observe_every = 10;
    const auto traj = simulate(p, init, cfg, ModelKind::first_order);
    const auto d = jm_decay(traj);
    EXPECT_TRUE(d.monotone);
    EXPECT_LT(d.rate, 0.0);
}
