// runner.hpp: executes a RunConfig and tabulates the result.

#pragma once

#include "qnd/analytic.hpp"
#include "qnd/backaction.hpp"
#include "qnd/config.hpp"
#include "qnd/core.hpp"
#include "qnd/csv.hpp"
#include "qnd/lindblad.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace qnd {

// out[i] = fn(i) on a pool of `threads` workers. Results land by index, so
// the output does not depend on scheduling.
template <class T, class F>
std::vector<T> parallel_map(std::size_t n, int threads, F&& fn) {
    std::vector<T> out(n);
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    const auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                out[i] = fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(n);
                return;
            }
        }
    };
    const auto workers = static_cast<std::size_t>(std::max(1, threads));
    if (workers == 1 || n < 2) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < std::min(workers, n); ++w) pool.emplace_back(work);
    }
    if (error) std::rethrow_exception(error);
    return out;
}

// δω ∈ [−1, 1]; the numerator is an exact integer so the grid is exactly
// antisymmetric about its midpoint.
inline std::vector<double> omega_grid(int points) {
    std::vector<double> w(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) {
        w[static_cast<std::size_t>(i)] = static_cast<double>(2 * i - (points - 1)) / (points - 1);
    }
    return w;
}

// ---------------------------------- fig2 ------------------------------------

inline SweepResult run_fig2(const RunConfig& c) {
    const auto omegas = omega_grid(c.omega_points);
    auto times = uniform_grid(c.t_max, c.t_step);
    times.erase(times.begin());  // t = 0 excluded
    const auto blocks = parallel_map<std::vector<std::vector<double>>>(
        omegas.size(), c.threads, [&](std::size_t i) {
            SystemParams p = c.params;
            p.delta_omega = omegas[i];
            std::vector<std::vector<double>> rows;
            for (double t : times) {
                rows.push_back({omegas[i], t,
                                analytic::outcome_probability(p, 1.0, t, 1,
                                                              analytic::ReadoutNoise::zero_point),
                                analytic::outcome_probability(p, 1.0, t, 1,
                                                              analytic::ReadoutNoise::backaction)});
            }
            return rows;
        });
    SweepResult r{{"delta_omega", "t", "p_zero_point", "p_backaction"}, {}};
    for (const auto& b : blocks)
        for (const auto& row : b) r.add_row(row);
    return r;
}

// ---------------------------------- fig3 ------------------------------------

inline constexpr double kFig3Kappas[] = {0.1, 0.2, 0.3, 0.4};

inline SweepResult run_fig3(const RunConfig& c) {
    const auto omegas = omega_grid(c.omega_points);
    const std::size_t nk = std::size(kFig3Kappas);
    const auto rows = parallel_map<std::vector<double>>(
        nk * omegas.size(), c.threads, [&](std::size_t idx) {
            SystemParams p = c.params;
            p.kappa = kFig3Kappas[idx / omegas.size()];
            p.delta_omega = omegas[idx % omegas.size()];
            if (!c.s_ii_set) p.s_ii = 2.0 / p.kappa;
            return std::vector<double>{p.kappa, p.delta_omega,
                                       analytic::outcome_probability(p, 1.0, c.t, 1),
                                       analytic::gamma_m(p).rate};
        });
    SweepResult r{{"kappa", "delta_omega", "p_measure_0", "gamma_m"}, {}};
    for (const auto& row : rows) r.add_row(row);
    return r;
}

// --------------------------------- sweeps -----------------------------------

inline std::vector<std::string> analytic_observables() {
    return {"n_plus",        "n_minus",  "signal_amplitude", "p_measure_0", "p_zero_point",
            "gamma_m",       "gamma_m_weak", "overlap",      "overlap_formula"};
}

inline std::vector<double> analytic_point(const SystemParams& p, double t) {
    const auto s = analytic::steady_amplitudes(p);
    const auto ov = analytic::overlap_decay(p, t);
    return {s.n_plus,
            s.n_minus,
            std::abs(analytic::signal_amplitude(p)),
            analytic::outcome_probability(p, 1.0, t, 1),
            analytic::outcome_probability(p, 1.0, t, 1, analytic::ReadoutNoise::zero_point),
            analytic::gamma_m(p).rate,
            analytic::weak_coupling_gamma_m(p),
            ov.exact,
            ov.formula};
}

inline std::vector<std::string> backaction_observables() {
    return {"eta",        "energy",     "n_bar",          "gamma_up", "gamma_down",
            "gamma_phi",  "gamma_phi_pure", "t_eff"};
}

inline std::vector<double> backaction_point(const SystemParams& p) {
    const auto basis = backaction::eigenbasis(p);
    const auto r = backaction::rates(p, basis);
    return {basis.eta,  basis.energy,       backaction::operating_n_bar(p), r.gamma_up,
            r.gamma_down, r.gamma_phi,      r.gamma_phi_pure,               r.t_eff};
}

inline SystemParams sweep_params(const RunConfig& c, int i) {
    SystemParams p = c.params;
    *sweep_target(p, c.sweep->parameter) = c.sweep->at(i);
    if (c.sweep->parameter == "kappa" && !c.s_ii_set) p.s_ii = 2.0 / p.kappa;
    return p;
}

inline SweepResult run_sweep(const RunConfig& c) {
    if (!c.sweep) throw ConfigError("run_sweep: no sweep configured");
    if (c.mode != Mode::analytic && c.mode != Mode::backaction) {
        throw ConfigError("sweep is supported only for analytic and backaction modes");
    }
    RunConfig checked = c;
    try {
        validate_invariants(checked);
        if (c.mode == Mode::backaction) {
            for (int i = 0; i < c.sweep->count; ++i) {
                const SystemParams p = sweep_params(c, i);
                if (p.epsilon == 0.0 && p.delta == 0.0) {
                    throw std::invalid_argument("sweep point " + std::to_string(i) +
                                                ": epsilon and delta both zero");
                }
            }
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }

    const bool analytic_mode = c.mode == Mode::analytic;
    SweepResult r;
    r.columns.push_back(c.sweep->parameter);
    for (auto& name : analytic_mode ? analytic_observables() : backaction_observables()) {
        r.columns.push_back(name);
    }
    const auto rows = parallel_map<std::vector<double>>(
        static_cast<std::size_t>(c.sweep->count), c.threads, [&](std::size_t i) {
            const SystemParams p = sweep_params(c, static_cast<int>(i));
            std::vector<double> row{c.sweep->at(static_cast<int>(i))};
            const auto obs = analytic_mode ? analytic_point(p, c.t) : backaction_point(p);
            row.insert(row.end(), obs.begin(), obs.end());
            return row;
        });
    for (const auto& row : rows) r.add_row(row);
    return r;
}

// ------------------------------ single runs ---------------------------------

inline SweepResult run_analytic_series(const RunConfig& c) {
    using analytic::SigmaZ;
    const SystemParams& p = c.params;
    const auto plus = analytic::pointer_state(p, SigmaZ::plus);
    const auto minus = analytic::pointer_state(p, SigmaZ::minus);
    SweepResult r{{"t", "alpha_plus_re", "alpha_plus_im", "alpha_minus_re", "alpha_minus_im",
                   "p_measure_0", "p_zero_point", "overlap", "overlap_formula", "coherence"},
                  {}};
    for (double t : uniform_grid(c.t_max, c.t_step)) {
        const Complex ap = analytic::alpha_of_t(plus, p.kappa, t);
        const Complex am = analytic::alpha_of_t(minus, p.kappa, t);
        const auto ov = analytic::overlap_decay(p, t);
        r.add_row({t, ap.real(), ap.imag(), am.real(), am.imag(),
                   analytic::outcome_probability(p, 1.0, t, 1),
                   analytic::outcome_probability(p, 1.0, t, 1, analytic::ReadoutNoise::zero_point),
                   ov.exact, ov.formula, std::abs(lindblad::coherence_solution(p, t, 0.5))});
    }
    return r;
}

inline SweepResult run_lindblad_series(const RunConfig& c) {
    const FockSpace space(c.fock_dim);
    const auto liou = lindblad::build_liouvillian(c.params, space, c.coupling_mode);
    const auto rho0 = DensityMatrix::pure_product(Eigen::Vector2cd(1.0, 1.0), space);
    const auto grid = uniform_grid(c.t_max, c.t_step);
    const auto rec = lindblad::evolve(liou, rho0, grid);
    if (!rec.truncation_ok) {
        for (std::size_t i = 0; i < rec.t.size(); ++i) {
            if (rec.observables[i].top_population > kDefaultTruncationThreshold) {
                throw NumericalError(
                    "Fock truncation: top-level population " +
                        format_number(rec.observables[i].top_population) +
                        " exceeds threshold; increase fock_dim or lower f",
                    rec.t[i]);
            }
        }
    }
    SweepResult r{{"t", "sigma_z", "sigma_x", "a_re", "a_im", "photons", "coherence",
                   "top_population", "min_eigenvalue"},
                  {}};
    for (std::size_t i = 0; i < rec.t.size(); ++i) {
        const auto& o = rec.observables[i];
        r.add_row({rec.t[i], o.sigma_z, o.sigma_x, o.a.real(), o.a.imag(), o.photons, o.coherence,
                   o.top_population, o.min_eigenvalue});
    }
    return r;
}

inline SweepResult run_backaction_series(const RunConfig& c) {
    using backaction::ReducedMode;
    const auto basis = backaction::eigenbasis(c.params);
    Eigen::Matrix2cd rho0;
    rho0 << 0.5, 0.5, 0.5, 0.5;
    const auto grid = uniform_grid(c.t_max, c.t_step);
    const auto mk = backaction::evolve_reduced(c.params, basis, rho0, grid, ReducedMode::markov);
    const auto td =
        backaction::evolve_reduced(c.params, basis, rho0, grid, ReducedMode::time_dependent);
    SweepResult r{{"t", "p_up", "coherence", "p_up_memory", "coherence_memory"}, {}};
    for (std::size_t i = 0; i < grid.size(); ++i) {
        r.add_row({grid[i], mk.p_up[i], mk.coherence[i], td.p_up[i], td.coherence[i]});
    }
    return r;
}

// Starts in |0⟩ ⊗ |vac⟩ (in sigma_n mode |0⟩ is the upper energy eigenstate).
inline SweepResult run_repeatability(const RunConfig& c) {
    const FockSpace space(c.fock_dim);
    const auto liou = lindblad::build_liouvillian(c.params, space, c.coupling_mode);
    const auto rho0 = DensityMatrix::pure_product(Eigen::Vector2cd(1.0, 0.0), space);
    const auto res = lindblad::repeatability_experiment(liou, rho0, c.t_meas, c.n_meas);
    SweepResult r{{"t_meas", "pair", "p_agree"}, {}};
    for (std::size_t j = 0; j < res.p_agree.size(); ++j) {
        r.add_row({res.t_meas, static_cast<double>(j + 1), res.p_agree[j]});
    }
    return r;
}

inline SweepResult run(const RunConfig& c) {
    require_mode(c);
    if (c.sweep && *c.mode != Mode::analytic && *c.mode != Mode::backaction) {
        throw ConfigError("sweep is supported only for analytic and backaction modes");
    }
    switch (*c.mode) {
    case Mode::analytic: return c.sweep ? run_sweep(c) : run_analytic_series(c);
    case Mode::backaction: return c.sweep ? run_sweep(c) : run_backaction_series(c);
    case Mode::lindblad: return run_lindblad_series(c);
    case Mode::fig2: return run_fig2(c);
    case Mode::fig3: return run_fig3(c);
    case Mode::repeatability: return run_repeatability(c);
    }
    throw ConfigError("unknown mode");
}

}  // namespace qnd
