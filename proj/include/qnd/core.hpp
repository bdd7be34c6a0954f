// core.hpp: parameters, dense operators on qubit ⊗ Fock space, RK4 integration.
//
// Units: hbar = 1, every rate and frequency is angular and expressed in 1/ns.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qnd {

using Complex = std::complex<double>;
using ComplexMatrix =
    Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr Complex kI{0.0, 1.0};
inline constexpr double kPi = 3.14159265358979323846;

// Thrown when an integration produces NaN/Inf or a state leaves its
// validity envelope. `time()` is the first time at which it was detected.
class NumericalError : public std::runtime_error {
public:
    NumericalError(const std::string& what, double time)
        : std::runtime_error(what), time_(time) {}
    double time() const noexcept { return time_; }

private:
    double time_;
};

// --------------------------------- parameters -------------------------------

struct SystemParams {
    double epsilon = 10.0;     // qubit energy bias
    double delta = 0.0;        // tunnel splitting
    double g = 0.3;            // qubit-resonator coupling
    double kappa = 0.1;        // resonator decay
    double gamma1 = 0.0;       // qubit relaxation
    double gamma2 = 0.0;       // intrinsic qubit dephasing
    double f = 1.0;            // drive amplitude
    double delta_omega = 0.0;  // resonator minus drive frequency
    double s_ii = 20.0;        // output noise spectral density (2/kappa)

    // Throws std::invalid_argument naming the offending field.
    void validate() const {
        const std::pair<const char*, double> all[] = {
            {"epsilon", epsilon}, {"delta", delta},   {"g", g},
            {"kappa", kappa},     {"gamma1", gamma1}, {"gamma2", gamma2},
            {"f", f},             {"delta_omega", delta_omega},
            {"s_ii", s_ii}};
        for (const auto& [name, v] : all) {
            if (!std::isfinite(v)) {
                throw std::invalid_argument(std::string(name) + " must be finite");
            }
        }
        if (kappa <= 0.0) throw std::invalid_argument("kappa must be > 0");
        if (s_ii <= 0.0) throw std::invalid_argument("s_ii must be > 0");
        if (delta < 0.0) throw std::invalid_argument("delta must be >= 0");
        if (gamma1 < 0.0) throw std::invalid_argument("gamma1 must be >= 0");
        if (gamma2 < 0.0) throw std::invalid_argument("gamma2 must be >= 0");
        if (f < 0.0) throw std::invalid_argument("f must be >= 0");
    }

    // Dispersive (QND) regime: delta << epsilon, taken as delta < |epsilon|/ratio.
    bool is_dispersive(double ratio = 10.0) const {
        return delta < std::abs(epsilon) / ratio;
    }

    // Fastest rate in the rotating-frame problem; sets the default RK4 step.
    double max_rate() const {
        return std::max({std::hypot(epsilon, delta), std::abs(delta_omega) + std::abs(g),
                         kappa, f});
    }
};

// Default RK4 step: min(1/(50 max_rate), grid spacing).
inline double default_step(const SystemParams& p, double spacing) {
    return std::min(1.0 / (50.0 * p.max_rate()), spacing);
}

// ------------------------------- Fock space ---------------------------------

inline constexpr double kDefaultTruncationThreshold = 1e-6;

class FockSpace {
public:
    explicit FockSpace(std::size_t dim) : dim_(dim) {
        if (dim < 2) throw std::invalid_argument("Fock dimension must be >= 2");
    }
    std::size_t dim() const noexcept { return dim_; }
    // Joint qubit ⊗ Fock dimension.
    std::size_t joint_dim() const noexcept { return 2 * dim_; }
    bool operator==(const FockSpace&) const = default;

private:
    std::size_t dim_;
};

// --------------------------------- matrices ---------------------------------

inline bool is_hermitian(const ComplexMatrix& m, double tol) {
    if (m.rows() != m.cols()) return false;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = i; j < m.cols(); ++j) {
            if (std::abs(m(i, j) - std::conj(m(j, i))) > tol) return false;
        }
    }
    return true;
}

inline double max_abs(const ComplexMatrix& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

// Kronecker product, first factor slowest-varying.
inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
    ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

// ⟨m|a|n⟩ = sqrt(n) δ_{m,n-1}
inline ComplexMatrix annihilation(const FockSpace& space) {
    const auto n = static_cast<Eigen::Index>(space.dim());
    ComplexMatrix a = ComplexMatrix::Zero(n, n);
    for (Eigen::Index k = 1; k < n; ++k) a(k - 1, k) = std::sqrt(static_cast<double>(k));
    return a;
}

inline ComplexMatrix identity(std::size_t dim) {
    const auto n = static_cast<Eigen::Index>(dim);
    return ComplexMatrix::Identity(n, n);
}

enum class QubitOp { sigma_z, sigma_x, sigma_minus, identity };

// Basis {|0⟩, |1⟩} with |0⟩ ↔ σ_z = +1. σ_minus = |1⟩⟨0| relaxes toward σ_z = -1.
inline ComplexMatrix qubit_operator(QubitOp which) {
    ComplexMatrix m = ComplexMatrix::Zero(2, 2);
    switch (which) {
    case QubitOp::sigma_z:
        m(0, 0) = 1.0;
        m(1, 1) = -1.0;
        break;
    case QubitOp::sigma_x:
        m(0, 1) = 1.0;
        m(1, 0) = 1.0;
        break;
    case QubitOp::sigma_minus:
        m(1, 0) = 1.0;
        break;
    case QubitOp::identity:
        m(0, 0) = 1.0;
        m(1, 1) = 1.0;
        break;
    }
    return m;
}

inline ComplexMatrix tensor(const ComplexMatrix& qubit_part, const ComplexMatrix& fock_part) {
    if (qubit_part.rows() != 2 || qubit_part.cols() != 2) {
        throw std::invalid_argument("tensor: qubit factor must be 2x2");
    }
    if (fock_part.rows() != fock_part.cols() || fock_part.rows() < 2) {
        throw std::invalid_argument("tensor: Fock factor must be square with dim >= 2");
    }
    return kron(qubit_part, fock_part);
}

// ------------------------------ density matrix ------------------------------

enum class Subsystem { qubit, resonator };

// Tolerances: `strict` for freshly prepared states, `evolved` for integrator output.
enum class Validation { strict, evolved };

class DensityMatrix {
public:
    DensityMatrix(FockSpace space, ComplexMatrix matrix, Validation v = Validation::strict)
        : space_(space), m_(std::move(matrix)) {
        const auto n = static_cast<Eigen::Index>(space_.joint_dim());
        if (m_.rows() != n || m_.cols() != n) {
            throw std::invalid_argument("DensityMatrix: expected " + std::to_string(n) + "x" +
                                        std::to_string(n) + " matrix");
        }
        const double trace_tol = v == Validation::strict ? 1e-9 : 1e-8;
        const double herm_tol = v == Validation::strict ? 1e-10 : 1e-9;
        const Complex tr = m_.trace();
        if (std::abs(tr - 1.0) > trace_tol) {
            std::ostringstream os;
            os << "DensityMatrix: trace " << tr.real() << " deviates from 1";
            throw std::invalid_argument(os.str());
        }
        if (!is_hermitian(m_, herm_tol)) {
            throw std::invalid_argument("DensityMatrix: matrix is not Hermitian");
        }
    }

    // ρ_q ⊗ ρ_r
    static DensityMatrix product(const ComplexMatrix& qubit, const ComplexMatrix& resonator) {
        return {FockSpace(static_cast<std::size_t>(resonator.rows())), tensor(qubit, resonator)};
    }

    // |ψ_q⟩⟨ψ_q| ⊗ |n⟩⟨n|
    static DensityMatrix pure_product(const Eigen::Vector2cd& qubit, FockSpace space,
                                      std::size_t photons = 0) {
        const Eigen::Vector2cd q = qubit.normalized();
        ComplexMatrix rq = q * q.adjoint();
        ComplexMatrix rr = ComplexMatrix::Zero(static_cast<Eigen::Index>(space.dim()),
                                               static_cast<Eigen::Index>(space.dim()));
        rr(static_cast<Eigen::Index>(photons), static_cast<Eigen::Index>(photons)) = 1.0;
        return {space, tensor(rq, rr)};
    }

    const FockSpace& space() const noexcept { return space_; }
    const ComplexMatrix& matrix() const noexcept { return m_; }
    Complex trace() const { return m_.trace(); }

    double min_eigenvalue() const {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(m_, Eigen::EigenvaluesOnly);
        return solver.eigenvalues().minCoeff();
    }

    double purity() const { return (m_ * m_).trace().real(); }

    // Population of the top `levels` Fock states, summed over both qubit sectors.
    double top_fock_population(std::size_t levels = 2) const {
        const std::size_t n = space_.dim();
        double pop = 0.0;
        for (std::size_t q = 0; q < 2; ++q) {
            for (std::size_t k = n - std::min(levels, n); k < n; ++k) {
                const auto i = static_cast<Eigen::Index>(q * n + k);
                pop += m_(i, i).real();
            }
        }
        return pop;
    }

private:
    FockSpace space_;
    ComplexMatrix m_;
};

inline ComplexMatrix partial_trace(const DensityMatrix& rho, Subsystem keep) {
    const auto n = static_cast<Eigen::Index>(rho.space().dim());
    const ComplexMatrix& m = rho.matrix();
    if (keep == Subsystem::qubit) {
        ComplexMatrix out(2, 2);
        for (Eigen::Index a = 0; a < 2; ++a) {
            for (Eigen::Index b = 0; b < 2; ++b) {
                out(a, b) = m.block(a * n, b * n, n, n).trace();
            }
        }
        return out;
    }
    return m.block(0, 0, n, n) + m.block(n, n, n, n);
}

// tr(op ρ)
inline Complex expectation(const DensityMatrix& rho, const ComplexMatrix& op) {
    const ComplexMatrix& m = rho.matrix();
    if (op.rows() != m.rows() || op.cols() != m.cols()) {
        throw std::invalid_argument("expectation: operator dimension mismatch");
    }
    // Σ_ij op_ij ρ_ji without forming the product.
    return (op.array() * m.transpose().array()).sum();
}

// ------------------------------- integration --------------------------------

namespace detail {
inline bool finite(double v) { return std::isfinite(v); }
inline bool finite(const Complex& v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); }
template <class Derived>
bool finite(const Eigen::DenseBase<Derived>& m) { return m.allFinite(); }
}  // namespace detail

// Classical fixed-step RK4 sampled on `t_grid` (strictly increasing, starting at 0).
// Each grid interval is split into ceil(dt/max_step) equal substeps.
// `rhs(t, y)` returns dy/dt. State must support y + h*k arithmetic.
template <class State, class Rhs>
std::vector<State> integrate(Rhs&& rhs, const State& y0, std::span<const double> t_grid,
                             double max_step) {
    if (t_grid.empty() || t_grid.front() != 0.0) {
        throw std::invalid_argument("integrate: time grid must start at 0");
    }
    if (!(max_step > 0.0)) throw std::invalid_argument("integrate: step must be > 0");
    for (std::size_t i = 1; i < t_grid.size(); ++i) {
        if (!(t_grid[i] > t_grid[i - 1])) {
            throw std::invalid_argument("integrate: time grid must be strictly increasing");
        }
    }

    std::vector<State> out;
    out.reserve(t_grid.size());
    out.push_back(y0);
    State y = y0;
    for (std::size_t i = 1; i < t_grid.size(); ++i) {
        const double t0 = t_grid[i - 1];
        const double span = t_grid[i] - t0;
        const auto steps =
            static_cast<std::size_t>(std::max(1.0, std::ceil(span / max_step - 1e-9)));
        const double h = span / static_cast<double>(steps);
        for (std::size_t s = 0; s < steps; ++s) {
            const double t = t0 + static_cast<double>(s) * h;
            const State k1 = rhs(t, y);
            const State k2 = rhs(t + 0.5 * h, State(y + (0.5 * h) * k1));
            const State k3 = rhs(t + 0.5 * h, State(y + (0.5 * h) * k2));
            const State k4 = rhs(t + h, State(y + h * k3));
            y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if (!detail::finite(y)) {
                std::ostringstream os;
                os << "integrate: non-finite state at t = " << t + h;
                throw NumericalError(os.str(), t + h);
            }
        }
        out.push_back(y);
    }
    return out;
}

// Uniform grid 0, dt, ..., t_max (last point clipped to t_max).
inline std::vector<double> uniform_grid(double t_max, double dt) {
    if (!(dt > 0.0) || !(t_max >= 0.0)) throw std::invalid_argument("uniform_grid: bad bounds");
    std::vector<double> t{0.0};
    const auto n = static_cast<std::size_t>(std::llround(std::ceil(t_max / dt - 1e-9)));
    for (std::size_t i = 1; i <= n; ++i) t.push_back(std::min(t_max, static_cast<double>(i) * dt));
    if (t.size() > 1 && t[t.size() - 1] <= t[t.size() - 2]) t.pop_back();
    return t;
}

// ------------------------------- quadrature ---------------------------------

namespace detail {
template <class T, class F>
T simpson_step(F& fn, double a, double b, const T& fa, const T& fm, const T& fb, const T& whole,
               double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const T flm = fn(lm);
    const T frm = fn(rm);
    const T left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const T right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const T diff = left + right - whole;
    if (depth <= 0 || std::abs(diff) <= 15.0 * tol) return left + right + diff / 15.0;
    return simpson_step(fn, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_step(fn, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

// Adaptive composite Simpson with Richardson correction; T is double or Complex.
// The interval is pre-split into `panels` pieces so oscillatory integrands are
// not under-sampled by the first estimate.
template <class T, class F>
T adaptive_simpson(F&& fn, double a, double b, double tol = 1e-10, int panels = 16,
                   int max_depth = 40) {
    if (a == b) return T{};
    T total{};
    const double width = (b - a) / panels;
    const double panel_tol = tol / panels;
    for (int p = 0; p < panels; ++p) {
        const double lo = a + p * width;
        const double hi = p + 1 == panels ? b : lo + width;
        const T fa = fn(lo);
        const T fb = fn(hi);
        const T fm = fn(0.5 * (lo + hi));
        const T whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
        total += detail::simpson_step<T>(fn, lo, hi, fa, fm, fb, whole, panel_tol, max_depth);
    }
    return total;
}

}  // namespace qnd
