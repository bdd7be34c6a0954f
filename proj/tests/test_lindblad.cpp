#include "qnd/lindblad.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

using namespace qnd;
using namespace qnd::lindblad;

namespace {

// Desk-scale drive: f = 0.05 keeps n ≤ 1, N = 12 is ample.
SystemParams oracle_params() {
    SystemParams p;
    p.epsilon = 1.0;
    p.delta = 0.0;
    p.g = 0.3;
    p.kappa = 0.1;
    p.f = 0.05;
    p.delta_omega = 0.3;
    return p;
}

DensityMatrix qubit_state(double c0, double c1, FockSpace s, std::size_t photons = 0) {
    return DensityMatrix::pure_product(Eigen::Vector2cd(c0, c1), s, photons);
}

ComplexMatrix random_density(std::mt19937_64& rng, Eigen::Index n) {
    std::normal_distribution<double> d(0.0, 1.0);
    ComplexMatrix x(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) x(i, j) = Complex(d(rng), d(rng));
    ComplexMatrix rho = x * x.adjoint();
    rho /= rho.trace();
    return rho;
}

// ⟨a⟩ restricted to the σ_z = +1 / -1 block, normalized by that block's weight.
Complex conditional_a(const DensityMatrix& rho, int block) {
    const auto n = static_cast<Eigen::Index>(rho.space().dim());
    const ComplexMatrix b = rho.matrix().block(block * n, block * n, n, n);
    const ComplexMatrix a = annihilation(rho.space());
    return (a * b).trace() / b.trace();
}

}  // namespace

TEST(Liouvillian, HermitianHamiltonianAndTracelessGenerator) {
    std::mt19937_64 rng(21);
    SystemParams p = oracle_params();
    p.delta = 0.2;
    p.gamma1 = 0.02;
    p.gamma2 = 0.03;
    for (auto mode : {CouplingMode::sigma_z, CouplingMode::sigma_n}) {
        const auto liou = build_liouvillian(p, FockSpace(6), mode);
        EXPECT_TRUE(is_hermitian(liou.hamiltonian(), 1e-12));
        EXPECT_EQ(liou.dissipators().size(), 3u);
        for (int trial = 0; trial < 5; ++trial) {
            const ComplexMatrix out = liou.apply(random_density(rng, 12));
            EXPECT_LT(std::abs(out.trace()), 1e-10);
            EXPECT_TRUE(is_hermitian(out, 1e-10));
        }
        const ComplexMatrix mixed = identity(12) / 12.0;
        EXPECT_LT(std::abs(liou.apply(mixed).trace()), 1e-12);
    }
}

TEST(Liouvillian, SigmaNNeedsDirection) {
    SystemParams p = oracle_params();
    p.epsilon = 0.0;
    p.delta = 0.0;
    EXPECT_THROW(build_liouvillian(p, FockSpace(4), CouplingMode::sigma_n), std::invalid_argument);
    EXPECT_NO_THROW(build_liouvillian(p, FockSpace(4), CouplingMode::sigma_z));
}

TEST(Liouvillian, ZeroRatesAreSkipped) {
    const auto liou = build_liouvillian(oracle_params(), FockSpace(4));
    ASSERT_EQ(liou.dissipators().size(), 1u);
    EXPECT_EQ(liou.dissipators()[0].rate, 0.1);
}

TEST(Evolve, PureCavityDecay) {
    SystemParams p = oracle_params();
    p.g = 0.0;
    p.f = 0.0;
    const FockSpace s(8);
    const auto liou = build_liouvillian(p, s);
    const auto grid = uniform_grid(20.0, 1.0);
    const auto rec = evolve(liou, qubit_state(1, 0, s, 3), grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        EXPECT_NEAR(rec.observables[i].photons, 3.0 * std::exp(-p.kappa * grid[i]), 1e-8);
    }
    const auto vac = evolve(liou, qubit_state(0, 1, s), grid);
    EXPECT_LT(max_abs(vac.states.back().matrix() - vac.states.front().matrix()), 1e-14);
}

TEST(Evolve, DarkStateIsStationary) {
    SystemParams p = oracle_params();
    p.f = 0.0;
    const FockSpace s(6);
    const auto liou = build_liouvillian(p, s);
    const auto rec = evolve(liou, qubit_state(1, 0, s), uniform_grid(10.0, 2.0));
    for (const auto& o : rec.observables) {
        EXPECT_NEAR(o.sigma_z, 1.0, 1e-14);
        EXPECT_NEAR(std::abs(o.a), 0.0, 1e-14);
        EXPECT_NEAR(o.photons, 0.0, 1e-14);
    }
}

TEST(Evolve, ClassicalDrivenCavity) {
    SystemParams p = oracle_params();
    p.g = 0.0;
    p.delta_omega = 0.4;
    const FockSpace s(12);
    const auto liou = build_liouvillian(p, s);
    const auto grid = uniform_grid(40.0, 1.0);
    const auto rec = evolve(liou, qubit_state(1, 1, s), grid);
    const Complex z(0.5 * p.kappa, p.delta_omega);
    const Complex steady = -kI * p.f / z;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Complex classical = steady * (1.0 - std::exp(-z * grid[i]));
        EXPECT_LT(std::abs(rec.observables[i].a - classical), 1e-6);
    }
}

// The σ_z = +1 branch sees δω - g = 0, where the printed α_i(t) is the cavity
// solution. The σ_z = -1 branch (δω_i = 0.6) follows cavity_amplitude; the
// printed α_i(t) differs from it there by a drive phase.
TEST(Evolve, ConditionalPointerStates) {
    const SystemParams p = oracle_params();
    const FockSpace s(12);
    const auto liou = build_liouvillian(p, s);
    const auto grid = uniform_grid(20.0, 0.5);
    const auto up = evolve(liou, qubit_state(1, 0, s), grid);
    const auto down = evolve(liou, qubit_state(0, 1, s), grid);
    const auto ps_up = analytic::pointer_state(p, analytic::SigmaZ::plus);
    const auto ps_down = analytic::pointer_state(p, analytic::SigmaZ::minus);
    double printed_gap = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        EXPECT_LT(std::abs(up.observables[i].a - analytic::alpha_of_t(ps_up, p.kappa, grid[i])), 1e-6);
        EXPECT_LT(std::abs(down.observables[i].a -
                           analytic::cavity_amplitude(p, analytic::Branch::plus, grid[i])),
                  1e-6);
        printed_gap = std::max(
            printed_gap, std::abs(down.observables[i].a - analytic::alpha_of_t(ps_down, p.kappa, grid[i])));
    }
    EXPECT_GT(printed_gap, 1e-2);
}

TEST(Evolve, CoherenceMatchesClosedForm) {
    SystemParams p = oracle_params();
    p.gamma2 = 0.01;
    const FockSpace s(12);
    const auto liou = build_liouvillian(p, s);
    const auto grid = uniform_grid(15.0, 0.5);
    const auto rec = evolve(liou, qubit_state(1, 1, s), grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double closed = std::abs(coherence_solution(p, grid[i], 1.0)) / 2.0;
        EXPECT_LT(std::abs(rec.observables[i].coherence / closed - 1.0), 1e-4) << grid[i];
    }
}

TEST(CoherenceSolution, TrivialCases) {
    SystemParams p = oracle_params();
    const Complex a0(0.3, -0.2);
    EXPECT_EQ(coherence_solution(p, 0.0, a0), a0);
    p.g = 0.0;
    for (double t : {0.5, 7.0, 31.0}) {
        const Complex v = coherence_solution(p, t, 1.0);
        EXPECT_NEAR(std::abs(v), 1.0, 1e-13);
        EXPECT_LT(std::abs(v - std::exp(-kI * p.epsilon * t)), 1e-12);
    }
    EXPECT_THROW(coherence_solution(p, -1.0, 1.0), std::invalid_argument);
}

// Long-time log-slope of the closed-form coherence is the steady dephasing rate.
TEST(CoherenceSolution, LongTimeRateIsGammaM) {
    for (double dw : {0.0, 0.3, -0.5}) {
        SystemParams p = oracle_params();
        p.delta_omega = dw;
        const double t1 = 50.0 / p.kappa;
        const double t2 = 60.0 / p.kappa;
        const double rate = -(std::log(std::abs(coherence_solution(p, t2, 1.0))) -
                              std::log(std::abs(coherence_solution(p, t1, 1.0)))) /
                            (t2 - t1);
        EXPECT_NEAR(rate, analytic::gamma_m(p).rate, 1e-8 * std::max(1.0, rate)) << dw;
    }
}

// Fitted decay of |ρ_01| e^{γ2 t} over κt ∈ [3, 6] against the closed form.
// The pointer overlap is not a usable reference here: it becomes constant at
// steady state while the coherence keeps decaying.
TEST(Evolve, DephasingRateOverSteadyWindow) {
    SystemParams p = oracle_params();
    p.gamma2 = 0.01;
    p.delta_omega = 0.0;
    const FockSpace s(12);
    const auto liou = build_liouvillian(p, s);
    const auto grid = uniform_grid(60.0, 2.0);
    const auto rec = evolve(liou, qubit_state(1, 1, s), grid);
    std::vector<double> ts;
    std::vector<double> ys;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (p.kappa * grid[i] >= 3.0 - 1e-9 && p.kappa * grid[i] <= 6.0 + 1e-9) {
            ts.push_back(grid[i]);
            ys.push_back(std::log(rec.observables[i].coherence * std::exp(p.gamma2 * grid[i])));
        }
    }
    const auto slope = [](const std::vector<double>& x, const std::vector<double>& y) {
        double mx = 0, my = 0;
        for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
        mx /= x.size();
        my /= y.size();
        double num = 0, den = 0;
        for (std::size_t i = 0; i < x.size(); ++i) num += (x[i] - mx) * (y[i] - my), den += (x[i] - mx) * (x[i] - mx);
        return num / den;
    };
    std::vector<double> closed;
    for (double t : ts) closed.push_back(std::log(std::abs(coherence_solution(p, t, 1.0)) * std::exp(p.gamma2 * t)));
    const double numeric_rate = -slope(ts, ys);
    const double closed_rate = -slope(ts, closed);
    EXPECT_NEAR(numeric_rate / closed_rate, 1.0, 0.05);

    std::vector<double> overlap;
    for (double t : ts) overlap.push_back(std::log(analytic::overlap_decay(p, t).exact));
    const double overlap_late = -(std::log(analytic::overlap_decay(p, 600.0).exact) -
                                  std::log(analytic::overlap_decay(p, 500.0).exact)) / 100.0;
    EXPECT_LT(std::abs(overlap_late), 1e-12);
    EXPECT_GT(numeric_rate, 0.5 * analytic::gamma_m(p).rate);
}

TEST(Evolve, UnitaryLimitConservesPurity) {
    SystemParams p = oracle_params();
    p.f = 0.0;
    p.kappa = 1e-300;  // effectively closed; kappa must stay > 0
    const FockSpace s(5);
    const auto liou = build_liouvillian(p, s);
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(10);
    psi(1) = 0.6;
    psi(5 + 2) = Complex(0.0, 0.8);
    const DensityMatrix rho(s, psi * psi.adjoint());
    const auto rec = evolve(liou, rho, uniform_grid(30.0, 1.0));
    for (const auto& st : rec.states) EXPECT_NEAR(st.purity(), 1.0, 1e-8);
}

TEST(Evolve, InvariantsAndObservableConsistency) {
    SystemParams p = oracle_params();
    p.delta = 0.1;
    p.gamma1 = 0.01;
    p.gamma2 = 0.02;
    const FockSpace s(10);
    for (auto mode : {CouplingMode::sigma_z, CouplingMode::sigma_n}) {
        const auto liou = build_liouvillian(p, s, mode);
        const auto rec = evolve(liou, qubit_state(0.8, 0.6, s), uniform_grid(20.0, 1.0));
        ASSERT_TRUE(rec.truncation_ok);
        for (std::size_t i = 0; i < rec.states.size(); ++i) {
            const auto& st = rec.states[i];
            EXPECT_NEAR(st.trace().real(), 1.0, 1e-8);
            EXPECT_TRUE(is_hermitian(st.matrix(), 1e-9));
            EXPECT_GE(st.min_eigenvalue(), -1e-7);
            const auto again = observe(st, liou);
            EXPECT_EQ(again.sigma_z, rec.observables[i].sigma_z);
            EXPECT_EQ(again.a, rec.observables[i].a);
            EXPECT_EQ(again.coherence, rec.observables[i].coherence);
            EXPECT_NEAR(rec.observables[i].sigma_z,
                        expectation(st, tensor(qubit_operator(QubitOp::sigma_z), identity(10))).real(),
                        1e-12);
        }
    }
}

TEST(Evolve, TruncationFlag) {
    SystemParams p = oracle_params();
    p.f = 1.0;
    const FockSpace s(6);
    const auto rec = evolve(build_liouvillian(p, s), qubit_state(1, 0, s), uniform_grid(4.0, 1.0));
    EXPECT_FALSE(rec.truncation_ok);
    EXPECT_GT(rec.max_top_population, kDefaultTruncationThreshold);
    EXPECT_GE(recommended_fock_dim(400.0), 400u + 100u + 10u);
}

TEST(Evolve, TruncationConvergence) {
    const SystemParams p = oracle_params();
    const auto grid = uniform_grid(10.0, 1.0);
    const FockSpace small(12);
    const FockSpace large(24);
    const auto a = evolve(build_liouvillian(p, small), qubit_state(1, 1, small), grid);
    const auto b = evolve(build_liouvillian(p, large), qubit_state(1, 1, large), grid);
    ASSERT_TRUE(a.truncation_ok);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto& x = a.observables[i];
        const auto& y = b.observables[i];
        EXPECT_LT(std::abs(x.sigma_z - y.sigma_z), 1e-8);
        EXPECT_LT(std::abs(x.sigma_x - y.sigma_x), 1e-8);
        EXPECT_LT(std::abs(x.a - y.a), 1e-8);
        EXPECT_LT(std::abs(x.photons - y.photons), 1e-8);
        EXPECT_LT(std::abs(x.coherence - y.coherence), 1e-8);
    }
}

// |⟨a⟩_+ - ⟨a⟩_-| at δω = 0 is 2f|∫_0^t e^{-κs/2} sin(gs) ds|, which grows
// until t = π/g and then shrinks. With g = 0.3 > κ that is before 3/κ.
TEST(Evolve, PointerSeparationGrowsUntilHalfPeriod) {
    SystemParams p = oracle_params();
    p.delta_omega = 0.0;
    const FockSpace s(12);
    const auto liou = build_liouvillian(p, s);
    const auto grid = uniform_grid(3.0 / p.kappa, 0.5);
    const auto rec = evolve(liou, qubit_state(1, 1, s), grid);
    double prev = -1.0;
    double max_sep = 0.0;
    bool shrinks_later = false;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double sep = std::abs(conditional_a(rec.states[i], 0) - conditional_a(rec.states[i], 1));
        if (grid[i] <= kPi / p.g) {
            EXPECT_GE(sep, prev - 1e-12);
        } else if (sep < max_sep - 1e-3) {
            shrinks_later = true;
        }
        max_sep = std::max(max_sep, sep);
        prev = sep;
    }
    EXPECT_TRUE(shrinks_later);
}

TEST(Evolve, Errors) {
    const SystemParams p = oracle_params();
    const auto liou = build_liouvillian(p, FockSpace(4));
    EXPECT_THROW(evolve(liou, qubit_state(1, 0, FockSpace(5)), uniform_grid(1.0, 0.5)),
                 std::invalid_argument);
}

TEST(Repeatability, IdealQnd) {
    const SystemParams p = oracle_params();
    const FockSpace s(8);
    const auto liou = build_liouvillian(p, s);
    const auto res = repeatability_experiment(liou, qubit_state(1, 1, s), 5.0, 4);
    ASSERT_EQ(res.p_agree.size(), 3u);
    for (double v : res.p_agree) EXPECT_NEAR(v, 1.0, 1e-6);
    EXPECT_NEAR(res.p_first[0], 0.5, 1e-10);
    EXPECT_NEAR(res.p_first[1], 0.5, 1e-10);
}

TEST(Repeatability, NoCouplingNoTunneling) {
    SystemParams p = oracle_params();
    p.g = 0.0;
    const FockSpace s(4);
    const auto liou = build_liouvillian(p, s, CouplingMode::sigma_n);
    const auto res = repeatability_experiment(liou, qubit_state(0.6, 0.8, s), 3.0, 3);
    for (double v : res.p_agree) EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(Repeatability, Guards) {
    const FockSpace s(4);
    const auto liou = build_liouvillian(oracle_params(), s);
    const auto rho = qubit_state(1, 0, s);
    EXPECT_THROW(repeatability_experiment(liou, rho, 1.0, 7), std::invalid_argument);
    EXPECT_THROW(repeatability_experiment(liou, rho, 1.0, 1), std::invalid_argument);
    EXPECT_THROW(repeatability_experiment(liou, rho, 0.0, 2), std::invalid_argument);
}
