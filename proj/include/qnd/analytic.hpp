// analytic.hpp: closed-form pointer states, readout probabilities and
// measurement-induced dephasing for the dispersive qubit-resonator model.

#pragma once

#include "qnd/core.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace qnd::analytic {

// Qubit σ_z eigenvalue labelling a pointer state: |0⟩ ↔ +1, |1⟩ ↔ -1.
enum class SigmaZ : int { plus = 1, minus = -1 };

constexpr double value(SigmaZ s) { return static_cast<double>(static_cast<int>(s)); }

struct PointerState {
    SigmaZ sigma_z;
    double amplitude;  // A_i = f / sqrt(δω_i² + κ²/4)
    double phase;      // φ_i = atan2(δω_i, κ/2) - π/2, in (-π, 0)
    double detuning;   // δω_i = δω - g σ_z
};

inline PointerState pointer_state(const SystemParams& p, SigmaZ sz) {
    const double det = p.delta_omega - p.g * value(sz);
    const double half_k = 0.5 * p.kappa;
    return {sz, p.f / std::sqrt(det * det + half_k * half_k), std::atan2(det, half_k) - 0.5 * kPi,
            det};
}

// α_i(t) = A_i e^{iφ_i} [1 - e^{-iδω_i t - κt/2}]
inline Complex alpha_of_t(const PointerState& ps, double kappa, double t) {
    if (t < 0.0) throw std::invalid_argument("alpha_of_t: t must be >= 0");
    const Complex steady = std::polar(ps.amplitude, ps.phase);
    return steady * (1.0 - std::exp(Complex(-0.5 * kappa * t, -ps.detuning * t)));
}

// Branch of the driven cavity with detuning δω ± g.
enum class Branch : int { plus = 1, minus = -1 };

constexpr double value(Branch b) { return static_cast<double>(static_cast<int>(b)); }

// α_±^s = -i f / (κ/2 + i(δω ± g))
inline Complex steady_alpha(const SystemParams& p, Branch b) {
    return -kI * p.f / Complex(0.5 * p.kappa, p.delta_omega + value(b) * p.g);
}

// α_±(t) = α_±^s + e^{-(κ/2 + i(δω ± g))t} (α_±(0) - α_±^s)
inline Complex cavity_amplitude(const SystemParams& p, Branch b, double t,
                                Complex initial = 0.0) {
    const Complex s = steady_alpha(p, b);
    const Complex z(0.5 * p.kappa, p.delta_omega + value(b) * p.g);
    return s + std::exp(-z * t) * (initial - s);
}

struct SteadyAmplitudes {
    Complex alpha_plus_s;
    Complex alpha_minus_s;
    double n_plus;
    double n_minus;
};

inline SteadyAmplitudes steady_amplitudes(const SystemParams& p) {
    const double c = 0.25 * p.kappa * p.kappa;
    const double dp = p.delta_omega + p.g;
    const double dm = p.delta_omega - p.g;
    return {steady_alpha(p, Branch::plus), steady_alpha(p, Branch::minus),
            p.f * p.f / (c + dp * dp), p.f * p.f / (c + dm * dm)};
}

// A = f (e^{2iφ_0} - e^{2iφ_1}) / √2 with φ_0, φ_1 the σ_z = +1, -1 pointer phases.
inline Complex signal_amplitude(const SystemParams& p) {
    const double phi0 = pointer_state(p, SigmaZ::plus).phase;
    const double phi1 = pointer_state(p, SigmaZ::minus).phase;
    return p.f * (std::polar(1.0, 2.0 * phi0) - std::polar(1.0, 2.0 * phi1)) / std::sqrt(2.0);
}

// δx(t) = |A| t along the rotated quadrature φ = arg A.
inline double signal_separation(const SystemParams& p, double t) {
    return std::abs(signal_amplitude(p)) * t;
}

// Mean of the integrated signal for branch σ_z: x_i(t) = √2 Re α_i(t).
inline double signal_mean(const SystemParams& p, SigmaZ sz, double t) {
    return std::sqrt(2.0) * alpha_of_t(pointer_state(p, sz), p.kappa, t).real();
}

// Gaussian p(x | σ_z) with mean x_i(t) and variance S_II t.
inline double conditional_signal_pdf(const SystemParams& p, SigmaZ sz, double t, double x) {
    if (!(t > 0.0)) throw std::invalid_argument("conditional_signal_pdf: t must be > 0");
    const double var = p.s_ii * t;
    const double d = x - signal_mean(p, sz, t);
    return std::exp(-d * d / (2.0 * var)) / std::sqrt(2.0 * kPi * var);
}

// backaction: white output noise, variance S_II t.
// zero_point: vacuum quadrature variance 1/2, time independent.
enum class ReadoutNoise { backaction, zero_point };

inline constexpr double kZeroPointVariance = 0.5;

// P(I, t) = ½[1 + I ⟨σ_z⟩_0 erf(|A| t / sqrt(2 var))]
inline double outcome_probability(const SystemParams& p, double sz0, double t, int outcome,
                                  ReadoutNoise noise = ReadoutNoise::backaction) {
    if (std::abs(sz0) > 1.0) throw std::invalid_argument("outcome_probability: |sz0| > 1");
    if (t < 0.0) throw std::invalid_argument("outcome_probability: t must be >= 0");
    if (outcome != 1 && outcome != -1) {
        throw std::invalid_argument("outcome_probability: outcome must be +1 or -1");
    }
    if (t == 0.0) return 0.5;
    const double var = noise == ReadoutNoise::backaction ? p.s_ii * t : kZeroPointVariance;
    const double arg = std::abs(signal_amplitude(p)) * t / std::sqrt(2.0 * var);
    return 0.5 * (1.0 + outcome * sz0 * std::erf(arg));
}

struct GammaM {
    double rate;               // (n_+ + n_-) κ g² / (κ²/4 + g² + δω²)
    double product_literal;    // 2g Im(α_+^s α_-^s), as printed
    double product_conjugate;  // -2g Im(α_+^s conj(α_-^s)); equals `rate`
};

inline GammaM gamma_m(const SystemParams& p) {
    const auto s = steady_amplitudes(p);
    const double rate = (s.n_plus + s.n_minus) * p.kappa * p.g * p.g /
                        (0.25 * p.kappa * p.kappa + p.g * p.g + p.delta_omega * p.delta_omega);
    return {rate, 2.0 * p.g * (s.alpha_plus_s * s.alpha_minus_s).imag(),
            -2.0 * p.g * (s.alpha_plus_s * std::conj(s.alpha_minus_s)).imag()};
}

struct OverlapDecay {
    double formula;  // e^{-Γ_m t}
    double exact;    // |⟨α_-(t)|α_+(t)⟩| = exp(-|α_+ - α_-|²/2)
};

inline OverlapDecay overlap_decay(const SystemParams& p, double t) {
    if (t < 0.0) throw std::invalid_argument("overlap_decay: t must be >= 0");
    const Complex d = cavity_amplitude(p, Branch::plus, t) - cavity_amplitude(p, Branch::minus, t);
    return {std::exp(-gamma_m(p).rate * t), std::exp(-0.5 * std::norm(d))};
}

// Γ_m = κ n̄ θ_0², θ_0 = arctan(2g/κ), n̄ taken at δω = 0.
inline double weak_coupling_gamma_m(const SystemParams& p) {
    const double n_bar = p.f * p.f / (0.25 * p.kappa * p.kappa + p.g * p.g);
    const double theta = std::atan(2.0 * p.g / p.kappa);
    return p.kappa * n_bar * theta * theta;
}

// Regime warnings for weak_coupling_gamma_m; empty when the limit applies.
inline std::vector<std::string> weak_coupling_warnings(const SystemParams& p) {
    std::vector<std::string> w;
    if (p.delta_omega != 0.0) w.emplace_back("weak-coupling rate assumes delta_omega = 0");
    if (std::abs(p.g) > p.kappa / 5.0) w.emplace_back("weak-coupling rate assumes g << kappa");
    return w;
}

}  // namespace qnd::analytic
