// config.hpp: RunConfig and its line-oriented `key = value` format.

#pragma once

#include "qnd/core.hpp"
#include "qnd/csv.hpp"
#include "qnd/lindblad.hpp"

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace qnd {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Mode { analytic, lindblad, backaction, fig2, fig3, repeatability };

inline std::string_view mode_name(Mode m) {
    switch (m) {
    case Mode::analytic: return "analytic";
    case Mode::lindblad: return "lindblad";
    case Mode::backaction: return "backaction";
    case Mode::fig2: return "fig2";
    case Mode::fig3: return "fig3";
    case Mode::repeatability: return "repeatability";
    }
    return "";
}

inline std::optional<Mode> parse_mode(std::string_view s) {
    for (Mode m : {Mode::analytic, Mode::lindblad, Mode::backaction, Mode::fig2, Mode::fig3,
                   Mode::repeatability}) {
        if (s == mode_name(m)) return m;
    }
    if (s == "repeat") return Mode::repeatability;
    return std::nullopt;
}

struct Sweep {
    std::string parameter;
    double start = 0.0;
    double stop = 0.0;
    int count = 0;

    double at(int i) const {
        if (i == count - 1) return stop;
        return start + (stop - start) * static_cast<double>(i) / static_cast<double>(count - 1);
    }
    bool operator==(const Sweep&) const = default;
};

struct RunConfig {
    SystemParams params;
    bool s_ii_set = false;  // otherwise s_ii follows 2/kappa
    std::size_t fock_dim = 12;
    double t_max = 2.0;
    double t_step = 0.01;
    double t = 0.1;  // readout time for analytic/fig3 probabilities
    int omega_points = 201;
    lindblad::CouplingMode coupling_mode = lindblad::CouplingMode::sigma_z;
    int n_meas = 2;
    double t_meas = 50.0;
    std::optional<Sweep> sweep;
    std::optional<Mode> mode;
    std::string output_path;
    int threads = 1;

    bool operator==(const RunConfig& o) const {
        const auto& a = params;
        const auto& b = o.params;
        return a.epsilon == b.epsilon && a.delta == b.delta && a.g == b.g && a.kappa == b.kappa &&
               a.gamma1 == b.gamma1 && a.gamma2 == b.gamma2 && a.f == b.f &&
               a.delta_omega == b.delta_omega && a.s_ii == b.s_ii && s_ii_set == o.s_ii_set &&
               fock_dim == o.fock_dim && t_max == o.t_max && t_step == o.t_step && t == o.t &&
               omega_points == o.omega_points && coupling_mode == o.coupling_mode &&
               n_meas == o.n_meas && t_meas == o.t_meas && sweep == o.sweep && mode == o.mode &&
               output_path == o.output_path && threads == o.threads;
    }
};

// Names usable as `sweep = <name>, start, stop, count`.
inline double* sweep_target(SystemParams& p, std::string_view name) {
    if (name == "epsilon") return &p.epsilon;
    if (name == "delta") return &p.delta;
    if (name == "g") return &p.g;
    if (name == "kappa") return &p.kappa;
    if (name == "gamma1") return &p.gamma1;
    if (name == "gamma2") return &p.gamma2;
    if (name == "f") return &p.f;
    if (name == "delta_omega") return &p.delta_omega;
    if (name == "s_ii") return &p.s_ii;
    return nullptr;
}

namespace detail {
inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline int parse_integer(std::string_view s) {
    const double v = parse_number(s);
    if (!(std::abs(v) <= std::numeric_limits<int>::max()) || v != std::trunc(v)) {
        throw std::invalid_argument("expected an integer, got '" + std::string(s) + "'");
    }
    return static_cast<int>(v);
}
}  // namespace detail

// Sets one key. Throws std::invalid_argument (message without location) on
// unknown keys or malformed values; invariants are checked by validate().
inline void set_config_value(RunConfig& c, std::string_view key, std::string_view raw) {
    const std::string value = detail::trim(raw);
    if (double* target = sweep_target(c.params, key)) {
        *target = parse_number(value);
        if (key == "s_ii") c.s_ii_set = true;
    } else if (key == "fock_dim") {
        const auto n = detail::parse_integer(value);
        if (n < 2) throw std::invalid_argument("fock_dim must be >= 2");
        c.fock_dim = static_cast<std::size_t>(n);
    } else if (key == "t_max") {
        c.t_max = parse_number(value);
    } else if (key == "t_step") {
        c.t_step = parse_number(value);
    } else if (key == "t") {
        c.t = parse_number(value);
    } else if (key == "omega_points") {
        c.omega_points = detail::parse_integer(value);
    } else if (key == "coupling_mode") {
        if (value == "sigma_z") {
            c.coupling_mode = lindblad::CouplingMode::sigma_z;
        } else if (value == "sigma_n") {
            c.coupling_mode = lindblad::CouplingMode::sigma_n;
        } else {
            throw std::invalid_argument("coupling_mode must be sigma_z or sigma_n");
        }
    } else if (key == "n_meas") {
        c.n_meas = detail::parse_integer(value);
    } else if (key == "t_meas") {
        c.t_meas = parse_number(value);
    } else if (key == "sweep") {
        std::vector<std::string> parts;
        std::istringstream in(value);
        for (std::string part; std::getline(in, part, ',');) parts.push_back(detail::trim(part));
        if (parts.size() != 4) {
            throw std::invalid_argument("sweep must be 'name, start, stop, count'");
        }
        Sweep s;
        s.parameter = parts[0];
        s.start = parse_number(parts[1]);
        s.stop = parse_number(parts[2]);
        s.count = detail::parse_integer(parts[3]);
        c.sweep = s;
    } else if (key == "mode") {
        const auto m = parse_mode(value);
        if (!m) throw std::invalid_argument("unknown mode '" + value + "'");
        c.mode = m;
    } else if (key == "output_path") {
        c.output_path = value;
    } else if (key == "threads") {
        c.threads = detail::parse_integer(value);
    } else {
        throw std::invalid_argument("unknown key");
    }
}

// Checks every invariant except the presence of `mode`. Throws std::invalid_argument.
inline void validate_invariants(RunConfig& c) {
    if (!c.s_ii_set && c.params.kappa > 0.0) c.params.s_ii = 2.0 / c.params.kappa;
    c.params.validate();
    if (!(c.t_step > 0.0)) throw std::invalid_argument("t_step must be > 0");
    if (!(c.t_max >= c.t_step)) throw std::invalid_argument("t_max must be >= t_step");
    if (!(c.t > 0.0)) throw std::invalid_argument("t must be > 0");
    if (c.omega_points < 2) throw std::invalid_argument("omega_points must be >= 2");
    if (c.threads < 1) throw std::invalid_argument("threads must be >= 1");
    if (!(c.t_meas > 0.0)) throw std::invalid_argument("t_meas must be > 0");
    if (c.n_meas < 2 || c.n_meas > lindblad::kMaxRepeatedMeasurements) {
        throw std::invalid_argument("n_meas must be in [2, " +
                                    std::to_string(lindblad::kMaxRepeatedMeasurements) + "]");
    }
    if (c.sweep) {
        const Sweep& s = *c.sweep;
        if (!sweep_target(c.params, s.parameter)) {
            throw std::invalid_argument("sweep: unknown parameter '" + s.parameter + "'");
        }
        if (s.count < 2) throw std::invalid_argument("sweep count must be >= 2");
        for (int i = 0; i < s.count; ++i) {
            SystemParams p = c.params;
            *sweep_target(p, s.parameter) = s.at(i);
            if (s.parameter == "kappa" && !c.s_ii_set) p.s_ii = 2.0 / p.kappa;
            try {
                p.validate();
            } catch (const std::invalid_argument& e) {
                std::ostringstream os;
                os << "sweep point " << i << " (" << s.parameter << " = " << s.at(i)
                   << "): " << e.what();
                throw std::invalid_argument(os.str());
            }
        }
    }
}

// Parses without requiring `mode` (it usually comes from the command line).
// Errors name the line and key. Keys not in `text` keep their value from `base`.
inline RunConfig parse_config_text(const std::string& text, RunConfig base = {}) {
    RunConfig c = std::move(base);
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    std::vector<std::pair<int, std::string>> seen;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view body(line);
        if (const auto hash = body.find('#'); hash != std::string_view::npos) {
            body = body.substr(0, hash);
        }
        const std::string trimmed = detail::trim(body);
        if (trimmed.empty()) continue;
        const auto eq = trimmed.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
        }
        const std::string key = detail::trim(std::string_view(trimmed).substr(0, eq));
        try {
            set_config_value(c, key, std::string_view(trimmed).substr(eq + 1));
        } catch (const std::invalid_argument& e) {
            throw ConfigError("line " + std::to_string(lineno) + ": " + key + ": " + e.what());
        }
        seen.emplace_back(lineno, key);
    }
    try {
        validate_invariants(c);
    } catch (const std::invalid_argument& e) {
        // Point at the line that set the offending key when there is one.
        const std::string msg = e.what();
        for (auto it = seen.rbegin(); it != seen.rend(); ++it) {
            if (msg.rfind(it->second + " ", 0) == 0 || msg.rfind(it->second + ":", 0) == 0) {
                throw ConfigError("line " + std::to_string(it->first) + ": " + it->second + ": " +
                                  msg);
            }
        }
        throw ConfigError(msg);
    }
    return c;
}

inline void require_mode(const RunConfig& c) {
    if (!c.mode) throw ConfigError("mode required");
}

inline RunConfig parse_config(const std::string& text) {
    RunConfig c = parse_config_text(text);
    require_mode(c);
    return c;
}

// Canonical form: every key, fixed order, shortest round-trip numbers.
inline std::string emit_config(const RunConfig& c) {
    std::ostringstream os;
    const auto num = [&os](const char* k, double v) { os << k << " = " << format_number(v) << '\n'; };
    const SystemParams& p = c.params;
    num("epsilon", p.epsilon);
    num("delta", p.delta);
    num("g", p.g);
    num("kappa", p.kappa);
    num("gamma1", p.gamma1);
    num("gamma2", p.gamma2);
    num("f", p.f);
    num("delta_omega", p.delta_omega);
    if (c.s_ii_set) num("s_ii", p.s_ii);
    os << "fock_dim = " << c.fock_dim << '\n';
    num("t_max", c.t_max);
    num("t_step", c.t_step);
    num("t", c.t);
    os << "omega_points = " << c.omega_points << '\n';
    os << "coupling_mode = "
       << (c.coupling_mode == lindblad::CouplingMode::sigma_z ? "sigma_z" : "sigma_n") << '\n';
    os << "n_meas = " << c.n_meas << '\n';
    num("t_meas", c.t_meas);
    if (c.sweep) {
        os << "sweep = " << c.sweep->parameter << ", " << format_number(c.sweep->start) << ", "
           << format_number(c.sweep->stop) << ", " << c.sweep->count << '\n';
    }
    if (c.mode) os << "mode = " << mode_name(*c.mode) << '\n';
    if (!c.output_path.empty()) os << "output_path = " << c.output_path << '\n';
    os << "threads = " << c.threads << '\n';
    return os.str();
}

}  // namespace qnd
