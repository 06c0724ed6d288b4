#pragma once

// Scenario configuration: flat `section.key = value` text, '#' starts a comment.
// Unknown keys, duplicates and malformed values are rejected with the line number.
// Numeric values accept a plain number or a product/quotient with `pi`, e.g. `3*pi/4`.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cslfi/constants.hpp"
#include "cslfi/csl.hpp"
#include "cslfi/dynamics.hpp"
#include "cslfi/errors.hpp"
#include "cslfi/estimation.hpp"
#include "cslfi/version.hpp"

namespace cslfi::config {

struct NoiseParams {
    double n1    = 0;
    double n2    = 0;
    double r     = 0;
    double psi_s = 0;

    [[nodiscard]] dynamics::InputNoiseSpec thermal() const { return dynamics::InputNoiseSpec::thermal(n1, n2); }
    [[nodiscard]] dynamics::InputNoiseSpec tms() const { return dynamics::InputNoiseSpec::tms(r, psi_s); }
    [[nodiscard]] dynamics::InputNoiseSpec of(dynamics::NoiseKind kind) const {
        return kind == dynamics::NoiseKind::thermal ? thermal() : tms();
    }

    friend bool operator==(const NoiseParams &, const NoiseParams &) = default;
};

struct CslSection {
    double     lambda_rate = 0;
    double     r_c         = 0;
    double     mass        = 0;
    csl::Shape shape       = csl::Shape::sphere;
    double     size        = 0;

    [[nodiscard]] csl::CslParams   params(double omega_m) const { return {lambda_rate, r_c, mass, omega_m}; }
    [[nodiscard]] csl::MassDensity density() const { return {shape, size, mass}; }

    friend bool operator==(const CslSection &, const CslSection &) = default;
};

/// Reported times; `points` values evenly spaced over [start, stop].
struct TimeGrid {
    double      start  = 0;
    double      stop   = 0;
    std::size_t points = 0;

    [[nodiscard]] std::vector<double> times() const {
        std::vector<double> t(points);
        for(std::size_t i = 0; i < points; ++i)
            t[i] = points == 1 ? start : start + (stop - start) * static_cast<double>(i) / static_cast<double>(points - 1);
        return t;
    }

    friend bool operator==(const TimeGrid &, const TimeGrid &) = default;
};

struct SteadySpec {
    dynamics::NoiseKind input = dynamics::NoiseKind::tms;

    friend bool operator==(const SteadySpec &, const SteadySpec &) = default;
};

enum class Scale { linear, log };

struct Sweep {
    std::string name;
    double      start = 0;
    double      stop  = 0;
    std::size_t count = 0;
    Scale       scale = Scale::linear;

    [[nodiscard]] std::vector<double> values() const {
        std::vector<double> v(count);
        for(std::size_t i = 0; i < count; ++i) {
            const double f = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
            v[i] = scale == Scale::linear ? start + (stop - start) * f : start * std::pow(stop / start, f);
        }
        if(count > 1) v.back() = stop;
        return v;
    }

    friend bool operator==(const Sweep &, const Sweep &) = default;
};

struct ScenarioConfig {
    dynamics::SystemParams       system;
    std::optional<CslSection>    csl;
    NoiseParams                  noise;
    estimation::MeasurementSpec  measurement;
    std::optional<TimeGrid>      grid;
    std::optional<SteadySpec>    steady;
    std::optional<Sweep>         sweep;
    double                       step_fraction = dynamics::EvolveOptions{}.step_fraction;

    /// System parameters with lambda_csl replaced by the value derived from csl.* when present.
    [[nodiscard]] dynamics::SystemParams effective_system() const {
        auto p = system;
        if(csl) p.lambda_csl = csl::csl_diffusion_rate(csl->params(system.omega_m), csl->density());
        return p;
    }

    [[nodiscard]] dynamics::EvolveOptions evolve_options() const { return {step_fraction, true}; }

    friend bool operator==(const ScenarioConfig &, const ScenarioConfig &) = default;
};

struct KeyDoc {
    const char *key;
    const char *unit;
    const char *meaning;
};

inline const std::vector<KeyDoc> &key_table() {
    static const std::vector<KeyDoc> table = {
        {"system.omega_m", "rad/s", "mechanical angular frequency (required)"},
        {"system.gamma_m", "1/s", "mechanical damping (required)"},
        {"system.kappa", "1/s", "cavity decay rate, both cavities (required)"},
        {"system.delta1", "rad/s", "cavity-1 detuning (default 0)"},
        {"system.delta2", "rad/s", "cavity-2 detuning (default 0)"},
        {"system.g", "rad/s", "optomechanical coupling (required)"},
        {"system.temperature", "K", "mechanical bath temperature (required)"},
        {"system.lambda_csl", "1/s", "CSL diffusion rate Lambda; replaced by csl.* when given (default 0)"},
        {"csl.lambda_rate", "1/s", "collapse rate lambda_CSL"},
        {"csl.r_c", "m", "correlation length r_CSL"},
        {"csl.mass", "kg", "test-mass mass"},
        {"csl.shape", "-", "sphere | cube (default sphere)"},
        {"csl.size", "m", "sphere radius or cube side"},
        {"noise.n1", "-", "thermal photons entering cavity 1 (classical input)"},
        {"noise.n2", "-", "thermal photons entering cavity 2 (classical input)"},
        {"noise.r", "-", "two-mode squeezing amplitude (quantum input)"},
        {"noise.psi_s", "rad", "two-mode squeezing angle"},
        {"measurement.l", "-", "POVM squeezing; 1 heterodyne, 0 / inf homodyne (clamped to [1e-8, 1e8])"},
        {"measurement.theta", "rad", "POVM phase-space angle"},
        {"measurement.phi_bs", "rad", "EPR beam-splitter angle (pi/4 is 50:50)"},
        {"measurement.epr_mode", "-", "plus | minus | best (default best)"},
        {"grid.start", "s", "first reported time (integration always starts at t = 0)"},
        {"grid.stop", "s", "last reported time"},
        {"grid.points", "-", "number of reported times"},
        {"steady.enabled", "-", "true selects the steady-state solve instead of a time grid"},
        {"steady.input", "-", "tms | thermal input noise for the steady state (default tms)"},
        {"sweep.name", "-", "numeric key to sweep, e.g. noise.r (steady mode only)"},
        {"sweep.start", "key unit", "first sweep value"},
        {"sweep.stop", "key unit", "last sweep value"},
        {"sweep.count", "-", "number of sweep values"},
        {"sweep.scale", "-", "linear | log (default linear)"},
        {"integrator.step_fraction", "-", "RK4 step as a fraction of 1/spectral radius of A (default 0.005)"},
    };
    return table;
}

/// Pointer to the numeric field behind a sweepable key, or nullptr.
inline double *numeric_field(ScenarioConfig &c, std::string_view key) {
    if(key == "system.omega_m") return &c.system.omega_m;
    if(key == "system.gamma_m") return &c.system.gamma_m;
    if(key == "system.kappa") return &c.system.kappa;
    if(key == "system.delta1") return &c.system.delta1;
    if(key == "system.delta2") return &c.system.delta2;
    if(key == "system.g") return &c.system.g;
    if(key == "system.temperature") return &c.system.temperature;
    if(key == "system.lambda_csl") return &c.system.lambda_csl;
    if(key == "noise.n1") return &c.noise.n1;
    if(key == "noise.n2") return &c.noise.n2;
    if(key == "noise.r") return &c.noise.r;
    if(key == "noise.psi_s") return &c.noise.psi_s;
    if(key == "measurement.l") return &c.measurement.l;
    if(key == "measurement.theta") return &c.measurement.theta;
    if(key == "measurement.phi_bs") return &c.measurement.phi_bs;
    if(c.csl) {
        if(key == "csl.lambda_rate") return &c.csl->lambda_rate;
        if(key == "csl.r_c") return &c.csl->r_c;
        if(key == "csl.mass") return &c.csl->mass;
        if(key == "csl.size") return &c.csl->size;
    }
    return nullptr;
}

/// Copy of `c` with the sweep parameter set to `value`.
inline ScenarioConfig at_sweep_value(const ScenarioConfig &c, double value) {
    ScenarioConfig out = c;
    if(!c.sweep) return out;
    double *field = numeric_field(out, c.sweep->name);
    if(!field) throw ConfigError("sweep.name '" + c.sweep->name + "' is not a numeric parameter of this config");
    *field = c.sweep->name == "measurement.l" ? estimation::clamp_povm_squeezing(value) : value;
    return out;
}

namespace detail {
    inline std::string_view trim(std::string_view s) {
        const auto b = s.find_first_not_of(" \t\r");
        if(b == std::string_view::npos) return {};
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    }

    inline std::string where(int line, std::string_view key) {
        return "line " + std::to_string(line) + " (" + std::string(key) + ")";
    }

    inline double parse_factor(std::string_view tok, const std::string &ctx) {
        tok = trim(tok);
        if(tok == "pi") return constants::pi;
        double v = 0;
        auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if(tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size())
            throw ConfigError(ctx + ": cannot parse '" + std::string(tok) + "' as a number");
        return v;
    }

    /// [sign] factor ((*|/) factor)*
    inline double parse_number(std::string_view text, const std::string &ctx) {
        text        = trim(text);
        double sign = 1.0;
        if(!text.empty() && (text.front() == '-' || text.front() == '+')) {
            if(text.front() == '-') sign = -1.0;
            text.remove_prefix(1);
        }
        if(text.empty()) throw ConfigError(ctx + ": missing value");
        double      acc = 1.0;
        char        op  = '*';
        std::size_t pos = 0;
        while(true) {
            const auto next = text.find_first_of("*/", pos);
            const auto tok  = text.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos);
            const double f  = parse_factor(tok, ctx);
            acc             = op == '*' ? acc * f : acc / f;
            if(next == std::string_view::npos) break;
            op  = text[next];
            pos = next + 1;
        }
        return sign * acc;
    }

    inline std::size_t parse_count(std::string_view text, const std::string &ctx) {
        text              = trim(text);
        std::size_t value = 0;
        auto [ptr, ec]    = std::from_chars(text.data(), text.data() + text.size(), value);
        if(text.empty() || ec != std::errc() || ptr != text.data() + text.size())
            throw ConfigError(ctx + ": expected a non-negative integer, got '" + std::string(text) + "'");
        return value;
    }

    inline bool parse_bool(std::string_view text, const std::string &ctx) {
        text = trim(text);
        if(text == "true") return true;
        if(text == "false") return false;
        throw ConfigError(ctx + ": expected true or false, got '" + std::string(text) + "'");
    }

    struct Entry {
        std::string value;
        int         line = 0;
    };

    inline std::map<std::string, Entry> tokenize(std::string_view text) {
        std::map<std::string, Entry> entries;
        int                          line_no = 0;
        std::size_t                  pos     = 0;
        while(pos <= text.size()) {
            const auto       nl   = text.find('\n', pos);
            std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
            pos                   = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
            ++line_no;
            if(const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
            line = trim(line);
            if(line.empty()) continue;
            const auto eq = line.find('=');
            if(eq == std::string_view::npos)
                throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value', got '" + std::string(line) + "'");
            const std::string key(trim(line.substr(0, eq)));
            const std::string value(trim(line.substr(eq + 1)));
            bool              known = false;
            for(const auto &doc : key_table()) known = known || key == doc.key;
            if(!known) throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
            if(entries.count(key))
                throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "' (first on line " +
                                  std::to_string(entries[key].line) + ")");
            entries[key] = {value, line_no};
        }
        return entries;
    }

    inline bool has_prefix(const std::map<std::string, Entry> &e, std::string_view prefix) {
        for(const auto &[k, v] : e)
            if(std::string_view(k).substr(0, prefix.size()) == prefix) return true;
        return false;
    }

    class Reader {
    public:
        explicit Reader(const std::map<std::string, Entry> &e) : e_(e) {}

        [[nodiscard]] bool has(const std::string &key) const { return e_.count(key) > 0; }

        [[nodiscard]] std::string ctx(const std::string &key) const {
            return has(key) ? where(e_.at(key).line, key) : "key " + key;
        }

        [[nodiscard]] const std::string &raw(const std::string &key) const {
            if(!has(key)) throw ConfigError("missing required key '" + key + "'");
            return e_.at(key).value;
        }

        [[nodiscard]] double number(const std::string &key) const { return parse_number(raw(key), ctx(key)); }
        [[nodiscard]] double number(const std::string &key, double fallback) const { return has(key) ? number(key) : fallback; }
        [[nodiscard]] std::size_t count(const std::string &key) const { return parse_count(raw(key), ctx(key)); }

        template<class Enum>
        Enum choice(const std::string &key, std::initializer_list<std::pair<const char *, Enum>> options, Enum fallback) const {
            if(!has(key)) return fallback;
            const std::string &v = raw(key);
            std::string        allowed;
            for(const auto &[name, value] : options) {
                if(v == name) return value;
                allowed += allowed.empty() ? name : std::string(" | ") + name;
            }
            throw ConfigError(ctx(key) + ": expected " + allowed + ", got '" + v + "'");
        }

    private:
        const std::map<std::string, Entry> &e_;
    };

    inline std::string fmt(double v) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    }

    inline void rethrow_as_config(const auto &fn) {
        try {
            fn();
        } catch(const ConfigError &) {
            throw;
        } catch(const QuadratureError &) {
            throw;
        } catch(const std::invalid_argument &e) {
            throw ConfigError(e.what());
        }
    }
} // namespace detail

enum class ParseMode {
    scenario, ///< full experiment: system, noise, measurement, grid or steady state
    csl_only, ///< csl.* and system.omega_m only, for the alpha verb
};

inline void validate(const ScenarioConfig &c, ParseMode mode = ParseMode::scenario) {
    detail::rethrow_as_config([&] {
        if(mode == ParseMode::csl_only) {
            if(!c.csl) throw ConfigError("csl.* keys are required");
            c.csl->params(c.system.omega_m).validate();
            c.csl->density().validate();
            return;
        }
        c.system.validate();
        if(c.csl) {
            c.csl->params(c.system.omega_m).validate();
            c.csl->density().validate();
        }
        c.noise.thermal().validate();
        c.noise.tms().validate();
        c.measurement.validate();
        if(!(c.step_fraction > 0) || !std::isfinite(c.step_fraction)) throw ConfigError("integrator.step_fraction must be > 0");
        if(c.grid.has_value() == c.steady.has_value()) throw ConfigError("exactly one of grid.* and steady.enabled = true is required");
        if(c.grid) {
            const auto &g = *c.grid;
            if(!(g.start >= 0) || !std::isfinite(g.stop) || !std::isfinite(g.start)) throw ConfigError("grid.start must be finite and >= 0");
            if(g.points == 0) throw ConfigError("grid.points must be >= 1");
            if(g.points > 1 && !(g.stop > g.start)) throw ConfigError("grid.stop must exceed grid.start");
            if(c.sweep) throw ConfigError("sweep.* is only supported together with steady.enabled = true");
        }
        if(c.sweep) {
            const auto &s = *c.sweep;
            ScenarioConfig probe = c;
            if(!numeric_field(probe, s.name)) throw ConfigError("sweep.name '" + s.name + "' is not a recognised numeric key");
            if(!std::isfinite(s.start) || !std::isfinite(s.stop)) throw ConfigError("sweep.start and sweep.stop must be finite");
            if(s.scale == Scale::log && !(s.start > 0 && s.stop > 0)) throw ConfigError("log sweep needs positive start and stop");
            for(double v : s.values()) {
                const auto point = at_sweep_value(c, v);
                point.system.validate();
                if(point.csl) {
                    point.csl->params(point.system.omega_m).validate();
                    point.csl->density().validate();
                }
                point.noise.thermal().validate();
                point.noise.tms().validate();
                point.measurement.validate();
            }
        }
    });
}

inline ScenarioConfig parse(std::string_view text, ParseMode mode = ParseMode::scenario) {
    const auto         entries = detail::tokenize(text);
    const detail::Reader rd(entries);
    ScenarioConfig     c;

    const bool full = mode == ParseMode::scenario;
    auto       sys  = [&](const char *key, bool required_in_full) {
        const std::string k = std::string("system.") + key;
        return required_in_full && full ? rd.number(k) : rd.number(k, 0.0);
    };
    c.system.omega_m     = rd.number("system.omega_m");
    c.system.gamma_m     = sys("gamma_m", true);
    c.system.kappa       = sys("kappa", true);
    c.system.delta1      = sys("delta1", false);
    c.system.delta2      = sys("delta2", false);
    c.system.g           = sys("g", true);
    c.system.temperature = sys("temperature", true);
    c.system.lambda_csl  = sys("lambda_csl", false);

    if(detail::has_prefix(entries, "csl.") || !full) {
        CslSection s;
        s.lambda_rate = rd.number("csl.lambda_rate");
        s.r_c         = rd.number("csl.r_c");
        s.mass        = rd.number("csl.mass");
        s.shape       = rd.choice("csl.shape", {{"sphere", csl::Shape::sphere}, {"cube", csl::Shape::cube}}, csl::Shape::sphere);
        s.size        = rd.number("csl.size");
        c.csl         = s;
    }

    c.noise.n1    = rd.number("noise.n1", 0.0);
    c.noise.n2    = rd.number("noise.n2", 0.0);
    c.noise.r     = rd.number("noise.r", 0.0);
    c.noise.psi_s = rd.number("noise.psi_s", 0.0);

    c.measurement.l      = estimation::clamp_povm_squeezing(rd.number("measurement.l", 1.0));
    c.measurement.theta  = rd.number("measurement.theta", 0.0);
    c.measurement.phi_bs = rd.number("measurement.phi_bs", constants::pi / 4.0);
    c.measurement.output = rd.choice("measurement.epr_mode",
                                     {{"plus", estimation::EprOutput::plus},
                                      {"minus", estimation::EprOutput::minus},
                                      {"best", estimation::EprOutput::best}},
                                     estimation::EprOutput::best);

    if(detail::has_prefix(entries, "grid.")) c.grid = TimeGrid{rd.number("grid.start"), rd.number("grid.stop"), rd.count("grid.points")};

    const bool steady = rd.has("steady.enabled") && detail::parse_bool(rd.raw("steady.enabled"), rd.ctx("steady.enabled"));
    if(steady)
        c.steady = SteadySpec{rd.choice("steady.input", {{"tms", dynamics::NoiseKind::tms}, {"thermal", dynamics::NoiseKind::thermal}},
                                        dynamics::NoiseKind::tms)};
    else if(rd.has("steady.input"))
        throw ConfigError(rd.ctx("steady.input") + ": steady.input requires steady.enabled = true");

    if(detail::has_prefix(entries, "sweep."))
        c.sweep = Sweep{rd.raw("sweep.name"), rd.number("sweep.start"), rd.number("sweep.stop"), rd.count("sweep.count"),
                        rd.choice("sweep.scale", {{"linear", Scale::linear}, {"log", Scale::log}}, Scale::linear)};

    c.step_fraction = rd.number("integrator.step_fraction", c.step_fraction);

    validate(c, mode);
    return c;
}

inline ScenarioConfig load(const std::string &path, ParseMode mode = ParseMode::scenario) {
    std::ifstream in(path, std::ios::binary);
    if(!in) throw IoError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse(buf.str(), mode);
    } catch(const ConfigError &e) {
        throw ConfigError(path + ": " + e.what());
    }
}

/// Canonical text form; parse(serialize(c)) == c.
inline std::string serialize(const ScenarioConfig &c) {
    using detail::fmt;
    std::ostringstream o;
    o << "system.omega_m = " << fmt(c.system.omega_m) << '\n'
      << "system.gamma_m = " << fmt(c.system.gamma_m) << '\n'
      << "system.kappa = " << fmt(c.system.kappa) << '\n'
      << "system.delta1 = " << fmt(c.system.delta1) << '\n'
      << "system.delta2 = " << fmt(c.system.delta2) << '\n'
      << "system.g = " << fmt(c.system.g) << '\n'
      << "system.temperature = " << fmt(c.system.temperature) << '\n'
      << "system.lambda_csl = " << fmt(c.system.lambda_csl) << '\n';
    if(c.csl)
        o << "csl.lambda_rate = " << fmt(c.csl->lambda_rate) << '\n'
          << "csl.r_c = " << fmt(c.csl->r_c) << '\n'
          << "csl.mass = " << fmt(c.csl->mass) << '\n'
          << "csl.shape = " << csl::to_string(c.csl->shape) << '\n'
          << "csl.size = " << fmt(c.csl->size) << '\n';
    o << "noise.n1 = " << fmt(c.noise.n1) << '\n'
      << "noise.n2 = " << fmt(c.noise.n2) << '\n'
      << "noise.r = " << fmt(c.noise.r) << '\n'
      << "noise.psi_s = " << fmt(c.noise.psi_s) << '\n'
      << "measurement.l = " << fmt(c.measurement.l) << '\n'
      << "measurement.theta = " << fmt(c.measurement.theta) << '\n'
      << "measurement.phi_bs = " << fmt(c.measurement.phi_bs) << '\n'
      << "measurement.epr_mode = " << estimation::to_string(c.measurement.output) << '\n';
    if(c.grid) o << "grid.start = " << fmt(c.grid->start) << '\n' << "grid.stop = " << fmt(c.grid->stop) << '\n' << "grid.points = " << c.grid->points << '\n';
    if(c.steady) o << "steady.enabled = true\n" << "steady.input = " << dynamics::to_string(c.steady->input) << '\n';
    if(c.sweep)
        o << "sweep.name = " << c.sweep->name << '\n'
          << "sweep.start = " << fmt(c.sweep->start) << '\n'
          << "sweep.stop = " << fmt(c.sweep->stop) << '\n'
          << "sweep.count = " << c.sweep->count << '\n'
          << "sweep.scale = " << (c.sweep->scale == Scale::linear ? "linear" : "log") << '\n';
    o << "integrator.step_fraction = " << fmt(c.step_fraction) << '\n';
    return o.str();
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for(unsigned char ch : data) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    return h;
}

/// Hash of the canonical config text and the tool version, as 16 hex digits.
inline std::string config_hash(const ScenarioConfig &c) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a(serialize(c) + "version = " + cslfi::version + '\n')));
    return buf;
}

} // namespace cslfi::config
