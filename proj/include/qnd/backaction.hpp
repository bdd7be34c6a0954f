// backaction.hpp: QND violation through the σ_n coupling: photon-number noise,
// second-order (Redfield) reduced dynamics and the resulting qubit rates.
//
// Conventions
//   correlator   C(τ) = ⟨δn(τ)δn(0)⟩ = n̄ exp(-iδω τ - κ|τ|/2), C(-τ) = C(τ)*
//   spectrum     S_nn(ω) = ∫_{-∞}^{∞} dτ e^{iωτ} C(τ) = n̄ κ / ((ω - δω)² + κ²/4)
//   n̄            operating-point photon number f² / (κ²/4 + δω²)
// S_nn is full-axis. The one-sided transform ∫_0^∞ has real part S_nn/2.
// The sign of δω in C(τ) is the one produced by the rotating-frame resonator
// of lindblad.hpp (checked by quantum regression in the tests).

#pragma once

#include "qnd/core.hpp"

#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace qnd::backaction {

struct QubitEigenbasis {
    double eta;     // mixing angle atan2(Δ, ε)
    double energy;  // E = sqrt(ε² + Δ²) = ω_01
    Eigen::Vector2cd up;
    Eigen::Vector2cd down;
};

inline QubitEigenbasis eigenbasis(double epsilon, double delta) {
    if (epsilon == 0.0 && delta == 0.0) {
        throw std::invalid_argument("eigenbasis: epsilon and delta both zero");
    }
    const double eta = std::atan2(delta, epsilon);
    const double c = std::cos(0.5 * eta);
    const double s = std::sin(0.5 * eta);
    return {eta, std::hypot(epsilon, delta), Eigen::Vector2cd(c, s), Eigen::Vector2cd(-s, c)};
}

inline QubitEigenbasis eigenbasis(const SystemParams& p) { return eigenbasis(p.epsilon, p.delta); }

inline double operating_n_bar(const SystemParams& p) {
    return p.f * p.f / (0.25 * p.kappa * p.kappa + p.delta_omega * p.delta_omega);
}

class NoiseSpectrum {
public:
    NoiseSpectrum(double n_bar, double kappa, double delta_omega)
        : n_bar_(n_bar), kappa_(kappa), delta_omega_(delta_omega) {
        if (!(kappa > 0.0)) throw std::invalid_argument("NoiseSpectrum: kappa must be > 0");
        if (n_bar < 0.0) throw std::invalid_argument("NoiseSpectrum: n_bar must be >= 0");
    }
    explicit NoiseSpectrum(const SystemParams& p)
        : NoiseSpectrum(operating_n_bar(p), p.kappa, p.delta_omega) {}

    double n_bar() const noexcept { return n_bar_; }
    double kappa() const noexcept { return kappa_; }
    double delta_omega() const noexcept { return delta_omega_; }

    Complex correlator(double tau) const {
        return n_bar_ * std::exp(Complex(-0.5 * kappa_ * std::abs(tau), -delta_omega_ * tau));
    }

    double density(double omega) const {
        const double d = omega - delta_omega_;
        return n_bar_ * kappa_ / (d * d + 0.25 * kappa_ * kappa_);
    }

    // ∫_0^t dτ e^{iωτ} C(τ); t = +inf gives the Markov limit.
    Complex half_transform(double omega, double t) const {
        const Complex z(-0.5 * kappa_, omega - delta_omega_);
        if (std::isinf(t)) return -n_bar_ / z;
        return n_bar_ * (std::exp(z * t) - 1.0) / z;
    }

private:
    double n_bar_;
    double kappa_;
    double delta_omega_;
};

inline Complex number_correlator(const SystemParams& p, double tau) {
    return NoiseSpectrum(p).correlator(tau);
}

inline double spectral_density(const SystemParams& p, double omega) {
    return NoiseSpectrum(p).density(omega);
}

struct RateSet {
    double gamma_down;      // g² sin²η S_nn(ω_01)
    double gamma_up;        // g² sin²η S_nn(-ω_01)
    double gamma_phi;       // (Γ↑ + Γ↓)/2 + γ_φ
    double gamma_phi_pure;  // g² cos²η S_nn(0)
    double t_eff;           // Γ↑/Γ↓ = exp(-ω_01 / T_eff), k_B = ħ = 1
};

// T_eff from the up/down ratio: +inf for equal rates (including both zero),
// negative for population inversion.
inline double effective_temperature(double gamma_up, double gamma_down, double omega01) {
    if (gamma_down == 0.0 && gamma_up > 0.0) {
        throw std::domain_error("effective temperature undefined: gamma_down = 0 < gamma_up");
    }
    if (gamma_up == gamma_down) return std::numeric_limits<double>::infinity();
    return -omega01 / std::log(gamma_up / gamma_down);
}

inline RateSet rates(const SystemParams& p, const QubitEigenbasis& basis) {
    if (!(basis.energy > 0.0)) throw std::invalid_argument("rates: E must be > 0");
    const NoiseSpectrum s(p);
    const double sin2 = std::pow(std::sin(basis.eta), 2);
    const double cos2 = std::pow(std::cos(basis.eta), 2);
    const double g2 = p.g * p.g;
    RateSet r{};
    r.gamma_down = g2 * sin2 * s.density(basis.energy);
    r.gamma_up = g2 * sin2 * s.density(-basis.energy);
    r.gamma_phi_pure = g2 * cos2 * s.density(0.0);
    r.gamma_phi = 0.5 * (r.gamma_up + r.gamma_down) + r.gamma_phi_pure;
    r.t_eff = effective_temperature(r.gamma_up, r.gamma_down, basis.energy);
    return r;
}

// ------------------------------ Redfield tensor -----------------------------

// M_{kk'll'} in the energy eigenbasis {|↑⟩, |↓⟩} (index 0 = +E/2).
struct RedfieldTensor {
    std::array<Complex, 16> m{};
    Complex& operator()(int k, int kp, int l, int lp) { return m[static_cast<std::size_t>(((k * 2 + kp) * 2 + l) * 2 + lp)]; }
    const Complex& operator()(int k, int kp, int l, int lp) const {
        return m[static_cast<std::size_t>(((k * 2 + kp) * 2 + l) * 2 + lp)];
    }

    // dρ_{kk'} contribution -Σ_{ll'} M_{kk'll'} ρ_{ll'}
    Eigen::Matrix2cd contract(const Eigen::Matrix2cd& rho) const {
        Eigen::Matrix2cd out = Eigen::Matrix2cd::Zero();
        for (int k = 0; k < 2; ++k)
            for (int kp = 0; kp < 2; ++kp)
                for (int l = 0; l < 2; ++l)
                    for (int lp = 0; lp < 2; ++lp) out(k, kp) -= (*this)(k, kp, l, lp) * rho(l, lp);
        return out;
    }
};

namespace detail {
struct CouplingElements {
    double s[2][2];   // σ_n = cos η σ_z + sin η σ_x in the eigenbasis
    double w[2][2];   // Bohr frequencies E_k - E_l
};

inline CouplingElements coupling_elements(const QubitEigenbasis& b) {
    const double c = std::cos(b.eta);
    const double s = std::sin(b.eta);
    return {{{c, s}, {s, -c}}, {{0.0, b.energy}, {-b.energy, 0.0}}};
}
}  // namespace detail

// M(t, τ) built from σ_n^I(t) = e^{iH_s t} σ_n e^{-iH_s t} and C(τ), C(τ)*.
inline RedfieldTensor redfield_tensor(const SystemParams& p, const QubitEigenbasis& basis,
                                      double t, double tau) {
    const auto ce = detail::coupling_elements(basis);
    const Complex c = NoiseSpectrum(p).correlator(tau);
    const Complex cc = std::conj(c);
    const auto sig = [&](int a, int b, double time) {
        return ce.s[a][b] * std::exp(Complex(0.0, ce.w[a][b] * time));
    };
    const double g2 = p.g * p.g;
    RedfieldTensor m;
    for (int k = 0; k < 2; ++k)
        for (int kp = 0; kp < 2; ++kp)
            for (int l = 0; l < 2; ++l)
                for (int lp = 0; lp < 2; ++lp) {
                    Complex v = 0.0;
                    if (lp == kp) {
                        for (int q = 0; q < 2; ++q) v += c * sig(k, q, t) * sig(q, l, t - tau);
                    }
                    v -= c * sig(k, l, t - tau) * sig(lp, kp, t);
                    if (k == l) {
                        for (int q = 0; q < 2; ++q) v += cc * sig(lp, q, t - tau) * sig(q, kp, t);
                    }
                    v -= cc * sig(k, l, t) * sig(lp, kp, t - tau);
                    m(k, kp, l, lp) = g2 * v;
                }
    return m;
}

// K(t) = ∫_0^{upper} dτ M(t, τ) in closed form; upper = t for the
// time-dependent equation, +inf for the Markov limit.
inline RedfieldTensor memory_kernel(const SystemParams& p, const QubitEigenbasis& basis, double t,
                                    double upper) {
    const auto ce = detail::coupling_elements(basis);
    const NoiseSpectrum spec(p);
    const auto G = [&](double w) { return spec.half_transform(w, upper); };
    const auto ph = [&](double w) { return std::exp(Complex(0.0, w * t)); };
    const double g2 = p.g * p.g;
    RedfieldTensor k4;
    for (int k = 0; k < 2; ++k)
        for (int kp = 0; kp < 2; ++kp)
            for (int l = 0; l < 2; ++l)
                for (int lp = 0; lp < 2; ++lp) {
                    Complex v = 0.0;
                    if (lp == kp) {
                        for (int q = 0; q < 2; ++q)
                            v += ce.s[k][q] * ce.s[q][l] * ph(ce.w[k][q] + ce.w[q][l]) * G(-ce.w[q][l]);
                    }
                    const double ss = ce.s[k][l] * ce.s[lp][kp];
                    const Complex phase = ph(ce.w[k][l] + ce.w[lp][kp]);
                    v -= ss * phase * G(-ce.w[k][l]);
                    if (k == l) {
                        for (int q = 0; q < 2; ++q)
                            v += ce.s[lp][q] * ce.s[q][kp] * ph(ce.w[lp][q] + ce.w[q][kp]) *
                                 std::conj(G(ce.w[lp][q]));
                    }
                    v -= ss * phase * std::conj(G(ce.w[lp][kp]));
                    k4(k, kp, l, lp) = g2 * v;
                }
    return k4;
}

// Secular rates read off the Markov-limit kernel: ρ̇_↑↑ ∋ -Γ↓ρ_↑↑,
// ρ̇_↓↓ ∋ -Γ↑ρ_↓↓, ρ̇_↑↓ ∋ -Γ_2 ρ_↑↓. `pure` = Γ_2 - (Γ↑+Γ↓)/2, which is
// 2 g² cos²η S_nn(0): twice RateSet::gamma_phi_pure.
struct KernelRates {
    double gamma_down;
    double gamma_up;
    double coherence_decay;
    double pure;
};

inline KernelRates kernel_rates(const SystemParams& p, const QubitEigenbasis& basis) {
    const auto k = memory_kernel(p, basis, 0.0, std::numeric_limits<double>::infinity());
    KernelRates r{k(0, 0, 0, 0).real(), k(1, 1, 1, 1).real(), k(0, 1, 0, 1).real(), 0.0};
    r.pure = r.coherence_decay - 0.5 * (r.gamma_down + r.gamma_up);
    return r;
}

// ----------------------------- reduced dynamics -----------------------------

// markov: Bloch equation with constant RateSet rates,
//   Γ↓ D[σ_-] + Γ↑ D[σ_+] + (γ_φ/2) D[σ_z]  (interaction picture).
// time_dependent: dρ^I/dt = -K(t) ρ^I with the finite memory integral ∫_0^t.
enum class ReducedMode { markov, time_dependent };

struct ReducedRecord {
    std::vector<double> t;
    std::vector<Eigen::Matrix2cd> states;  // interaction picture, eigenbasis
    std::vector<double> p_up;
    std::vector<double> sigma_z;
    std::vector<double> coherence;
};

inline Eigen::Matrix2cd markov_rhs(const RateSet& r, const Eigen::Matrix2cd& rho) {
    Eigen::Matrix2cd d;
    const double pop = -r.gamma_down * rho(0, 0).real() + r.gamma_up * rho(1, 1).real();
    d(0, 0) = pop;
    d(1, 1) = -pop;
    d(0, 1) = -r.gamma_phi * rho(0, 1);
    d(1, 0) = -r.gamma_phi * rho(1, 0);
    return d;
}

inline ReducedRecord evolve_reduced(const SystemParams& p, const QubitEigenbasis& basis,
                                    const Eigen::Matrix2cd& rho0, std::span<const double> t_grid,
                                    ReducedMode mode = ReducedMode::markov, double step = 0.0) {
    if (std::abs(rho0.trace() - 1.0) > 1e-9 || (rho0 - rho0.adjoint()).cwiseAbs().maxCoeff() > 1e-10) {
        throw std::invalid_argument("evolve_reduced: rho0 must be a unit-trace Hermitian 2x2 matrix");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(rho0, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-12) {
        throw std::invalid_argument("evolve_reduced: rho0 must be positive semidefinite");
    }
    double spacing = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < t_grid.size(); ++i) spacing = std::min(spacing, t_grid[i] - t_grid[i - 1]);

    std::vector<Eigen::Matrix2cd> raw;
    if (mode == ReducedMode::markov) {
        const RateSet r = rates(p, basis);
        const double fastest = std::max(r.gamma_up + r.gamma_down, r.gamma_phi);
        const double h = step > 0.0 ? step : (fastest > 0.0 ? std::min(spacing, 0.05 / fastest) : spacing);
        raw = integrate([&r](double, const Eigen::Matrix2cd& y) { return markov_rhs(r, y); }, rho0,
                        t_grid, h);
    } else {
        const double fastest = std::max({basis.energy, p.kappa, std::abs(p.delta_omega)});
        const double h = step > 0.0 ? step : std::min(spacing, 1.0 / (50.0 * fastest));
        raw = integrate(
            [&](double t, const Eigen::Matrix2cd& y) { return memory_kernel(p, basis, t, t).contract(y); },
            rho0, t_grid, h);
    }

    ReducedRecord rec;
    rec.t.assign(t_grid.begin(), t_grid.end());
    for (const auto& s : raw) {
        rec.states.push_back(s);
        rec.p_up.push_back(s(0, 0).real());
        rec.sigma_z.push_back((s(0, 0) - s(1, 1)).real());
        rec.coherence.push_back(std::abs(s(0, 1)));
    }
    return rec;
}

}  // namespace qnd::backaction
