// lindblad.hpp: master equation for the qubit ⊗ truncated-Fock resonator.
//
//   dρ/dt = -i[H, ρ] + κ D[a]ρ + γ1 D[σ_-]ρ + (γ2/2) D[σ_z]ρ,
//   D[L]ρ = LρL† - ½{L†L, ρ}
//
// Rotating frame. Coupling enters as (δω - g σ) a†a, so the σ_z = ±1 branch
// of the resonator sees detuning δω ∓ g, the same detuning as
// analytic::pointer_state(±1).

#pragma once

#include "qnd/analytic.hpp"
#include "qnd/core.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qnd::lindblad {

// sigma_z: qubit term (ε/2)σ_z and coupling via σ_z, Δ dropped (dispersive limit).
// sigma_n: qubit eigenbasis, (E/2)σ_z with E = sqrt(ε²+Δ²), coupling via
//          σ_n = cos η σ_z + sin η σ_x, η = atan2(Δ, ε).
enum class CouplingMode { sigma_z, sigma_n };

struct Dissipator {
    double rate;
    ComplexMatrix op;
};

class Liouvillian {
public:
    Liouvillian(const SystemParams& params, FockSpace space, CouplingMode mode)
        : params_(params), space_(space), mode_(mode) {
        params_.validate();
        const ComplexMatrix a1 = annihilation(space_);
        const ComplexMatrix num1 = a1.adjoint() * a1;
        const ComplexMatrix id_f = identity(space_.dim());
        const ComplexMatrix sz = qubit_operator(QubitOp::sigma_z);
        const ComplexMatrix sx = qubit_operator(QubitOp::sigma_x);
        const ComplexMatrix id_q = qubit_operator(QubitOp::identity);

        double qubit_split = params_.epsilon;
        ComplexMatrix coupling = sz;
        if (mode_ == CouplingMode::sigma_n) {
            if (params_.epsilon == 0.0 && params_.delta == 0.0) {
                throw std::invalid_argument("sigma_n mode needs (epsilon, delta) != (0, 0)");
            }
            const double eta = std::atan2(params_.delta, params_.epsilon);
            qubit_split = std::hypot(params_.epsilon, params_.delta);
            coupling = std::cos(eta) * sz + std::sin(eta) * sx;
        }

        a_ = tensor(id_q, a1);
        number_ = tensor(id_q, num1);
        h_ = tensor(0.5 * qubit_split * sz, id_f) + params_.delta_omega * number_ -
             params_.g * tensor(coupling, num1) + params_.f * (a_ + ComplexMatrix(a_.adjoint()));

        const std::pair<double, ComplexMatrix> jumps[] = {
            {params_.kappa, a_},
            {params_.gamma1, tensor(qubit_operator(QubitOp::sigma_minus), id_f)},
            {0.5 * params_.gamma2, tensor(sz, id_f)}};
        h_eff_ = h_;
        for (const auto& [rate, op] : jumps) {
            if (rate == 0.0) continue;
            dissipators_.push_back({rate, op});
            h_eff_ -= Complex(0.0, 0.5 * rate) * (op.adjoint() * op);
        }
    }

    const SystemParams& params() const noexcept { return params_; }
    const FockSpace& space() const noexcept { return space_; }
    CouplingMode mode() const noexcept { return mode_; }
    const ComplexMatrix& hamiltonian() const noexcept { return h_; }
    const std::vector<Dissipator>& dissipators() const noexcept { return dissipators_; }
    const ComplexMatrix& a() const noexcept { return a_; }
    const ComplexMatrix& number() const noexcept { return number_; }

    // 𝓛ρ, acting on any square matrix of the joint dimension (not only states).
    ComplexMatrix apply(const ComplexMatrix& rho) const {
        ComplexMatrix hr = h_eff_ * rho;
        ComplexMatrix out = -kI * hr;
        out.noalias() += kI * (rho * h_eff_.adjoint());
        for (const auto& d : dissipators_) {
            out.noalias() += d.rate * (d.op * rho * d.op.adjoint());
        }
        return out;
    }

private:
    SystemParams params_;
    FockSpace space_;
    CouplingMode mode_;
    ComplexMatrix a_;
    ComplexMatrix number_;
    ComplexMatrix h_;
    ComplexMatrix h_eff_;  // H - (i/2) Σ r L†L
    std::vector<Dissipator> dissipators_;
};

inline Liouvillian build_liouvillian(const SystemParams& params, FockSpace space,
                                     CouplingMode mode = CouplingMode::sigma_z) {
    return {params, space, mode};
}

struct Observables {
    double sigma_z;
    double sigma_x;
    Complex a;
    double photons;
    double coherence;       // |ρ_01| of the reduced qubit state
    double top_population;  // top two Fock levels
    double min_eigenvalue;
};

inline Observables observe(const DensityMatrix& rho, const Liouvillian& liou) {
    const ComplexMatrix q = partial_trace(rho, Subsystem::qubit);
    return {(q(0, 0) - q(1, 1)).real(),
            2.0 * q(0, 1).real(),
            expectation(rho, liou.a()),
            expectation(rho, liou.number()).real(),
            std::abs(q(0, 1)),
            rho.top_fock_population(),
            rho.min_eigenvalue()};
}

struct EvolutionRecord {
    std::vector<double> t;
    std::vector<DensityMatrix> states;
    std::vector<Observables> observables;
    double max_top_population = 0.0;
    bool truncation_ok = true;
};

struct EvolveOptions {
    double step = 0.0;  // 0: default_step(params, spacing)
    double truncation_threshold = kDefaultTruncationThreshold;
};

// Recommended Fock dimension for a drive of mean photon number n_bar.
inline std::size_t recommended_fock_dim(double n_bar) {
    return static_cast<std::size_t>(std::ceil(n_bar + 5.0 * std::sqrt(n_bar) + 10.0));
}

inline double grid_spacing(std::span<const double> t_grid) {
    double s = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < t_grid.size(); ++i) s = std::min(s, t_grid[i] - t_grid[i - 1]);
    return s;
}

inline EvolutionRecord evolve(const Liouvillian& liou, const DensityMatrix& rho0,
                              std::span<const double> t_grid, const EvolveOptions& opt = {}) {
    if (!(rho0.space() == liou.space())) {
        throw std::invalid_argument("evolve: state and generator Fock spaces differ");
    }
    const double step =
        opt.step > 0.0 ? opt.step : default_step(liou.params(), grid_spacing(t_grid));
    const auto raw = integrate(
        [&liou](double, const ComplexMatrix& r) { return liou.apply(r); }, rho0.matrix(), t_grid,
        step);

    EvolutionRecord rec;
    rec.t.assign(t_grid.begin(), t_grid.end());
    rec.states.reserve(raw.size());
    rec.observables.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        try {
            rec.states.emplace_back(liou.space(), raw[i], Validation::evolved);
        } catch (const std::invalid_argument& e) {
            throw NumericalError(std::string("evolve: ") + e.what(), t_grid[i]);
        }
        rec.observables.push_back(observe(rec.states.back(), liou));
        rec.max_top_population =
            std::max(rec.max_top_population, rec.observables.back().top_population);
    }
    rec.truncation_ok = rec.max_top_population <= opt.truncation_threshold;
    return rec;
}

// a_10(t) = a_10(0) exp[-i(ε - iγ2)t - 2ig ∫_0^t α_+(t') α_-*(t') dt'], α_±(0) = 0.
// The integral uses adaptive Simpson at absolute tolerance 1e-10.
inline Complex coherence_solution(const SystemParams& p, double t, Complex a10_0) {
    if (t < 0.0) throw std::invalid_argument("coherence_solution: t must be >= 0");
    using analytic::Branch;
    using analytic::cavity_amplitude;
    const auto integrand = [&p](double s) {
        return cavity_amplitude(p, Branch::plus, s) * std::conj(cavity_amplitude(p, Branch::minus, s));
    };
    const int panels = std::max(16, static_cast<int>(std::ceil(t * p.max_rate())));
    const Complex integral = adaptive_simpson<Complex>(integrand, 0.0, t, 1e-10, panels);
    return a10_0 * std::exp(-kI * Complex(p.epsilon, -p.gamma2) * t - 2.0 * kI * p.g * integral);
}

// ------------------------------ repeatability -------------------------------

inline constexpr int kMaxRepeatedMeasurements = 6;

struct RepeatabilityResult {
    double t_meas;
    // p_agree[j]: probability that measurements j and j+1 give the same outcome.
    std::vector<double> p_agree;
    // p_first[k]: probability of outcome k (0 ↔ σ_z = +1) on the first measurement.
    std::array<double, 2> p_first{};
};

namespace detail {
// Branches lighter than this are dropped; their weight bounds the error.
inline constexpr double kBranchCutoff = 1e-15;

inline ComplexMatrix project(const ComplexMatrix& rho, std::size_t fock_dim, int outcome) {
    const auto n = static_cast<Eigen::Index>(fock_dim);
    ComplexMatrix out = ComplexMatrix::Zero(rho.rows(), rho.cols());
    out.block(outcome * n, outcome * n, n, n) = rho.block(outcome * n, outcome * n, n, n);
    return out;
}

inline void branch(const Liouvillian& liou, const ComplexMatrix& rho, double weight, int depth,
                   int last, const std::vector<double>& window, double step,
                   RepeatabilityResult& res) {
    const auto evolved = integrate(
        [&liou](double, const ComplexMatrix& r) { return liou.apply(r); }, rho,
        std::span<const double>(window), step);
    const ComplexMatrix& r = evolved.back();
    for (int k = 0; k < 2; ++k) {
        ComplexMatrix pr = project(r, liou.space().dim(), k);
        const double pk = pr.trace().real();
        if (pk <= kBranchCutoff) continue;
        const double w = weight * pk;
        if (depth == 0) res.p_first[static_cast<std::size_t>(k)] = pk;
        if (depth > 0 && k == last) res.p_agree[static_cast<std::size_t>(depth - 1)] += w;
        if (depth + 1 < static_cast<int>(res.p_agree.size()) + 1) {
            branch(liou, pr / pk, w, depth + 1, k, window, step, res);
        }
    }
}
}  // namespace detail

// n_meas projective σ_z measurements at t_meas, 2 t_meas, ...; the branch tree
// (projection onto each outcome, renormalized) is followed exactly.
inline RepeatabilityResult repeatability_experiment(const Liouvillian& liou,
                                                    const DensityMatrix& rho0, double t_meas,
                                                    int n_meas, double step = 0.0) {
    if (!(t_meas > 0.0)) throw std::invalid_argument("repeatability: t_meas must be > 0");
    if (n_meas < 2) throw std::invalid_argument("repeatability: n_meas must be >= 2");
    if (n_meas > kMaxRepeatedMeasurements) {
        throw std::invalid_argument("repeatability: n_meas must be <= " +
                                    std::to_string(kMaxRepeatedMeasurements));
    }
    RepeatabilityResult res;
    res.t_meas = t_meas;
    res.p_agree.assign(static_cast<std::size_t>(n_meas - 1), 0.0);
    const std::vector<double> window{0.0, t_meas};
    const double h = step > 0.0 ? step : default_step(liou.params(), t_meas);
    detail::branch(liou, rho0.matrix(), 1.0, 0, -1, window, h, res);
    return res;
}

}  // namespace qnd::lindblad
