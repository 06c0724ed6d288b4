#pragma once

// The two experiments: transient comparison of the classical strategy (thermal input,
// local readout of cavity 1) with the quantum one (two-mode squeezed input, EPR readout),
// and the steady-state sweep. Results go to a small deterministic CSV.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <system_error>
#include <vector>

#include "cslfi/config.hpp"
#include "cslfi/dynamics.hpp"
#include "cslfi/errors.hpp"
#include "cslfi/estimation.hpp"
#include "cslfi/gaussian.hpp"
#include "cslfi/parallel.hpp"
#include "cslfi/version.hpp"

namespace cslfi::scenario {

using config::ScenarioConfig;

enum class Strategy { classical, quantum, both };

inline bool includes(Strategy s, Strategy which) { return s == Strategy::both || s == which; }

inline constexpr const char *units_note = "per-shot-FI-for-Lambda-in-inverse-seconds";
inline constexpr const char *flag_pure  = "pure-singularity";
inline constexpr const char *flag_unstable = "non-hurwitz";

struct Row {
    double                   x = 0; ///< time in s, sweep value, or point index
    std::optional<double>    cfi_classical;
    std::optional<double>    qfi_classical;
    std::optional<double>    cfi_quantum;
    std::optional<double>    qfi_quantum;
    std::string              epr_mode; ///< beam-splitter output read by the EPR scheme
    std::vector<std::string> flags;
};

struct ResultTable {
    std::string      config_hash;
    std::string      version = cslfi::version;
    std::string      index_name;
    std::vector<Row> rows;
};

namespace detail {
    inline estimation::MeasurementSpec local_readout(const ScenarioConfig &c) {
        auto spec   = c.measurement;
        spec.scheme = estimation::Scheme::local;
        spec.target = gaussian::modes::cavity1;
        return spec;
    }

    inline estimation::MeasurementSpec epr_readout(const ScenarioConfig &c) {
        auto spec   = c.measurement;
        spec.scheme = estimation::Scheme::epr;
        return spec;
    }

    inline const char *epr_label(gaussian::ModeRole role) { return role == gaussian::ModeRole::epr_minus ? "minus" : "plus"; }

    inline void add_flag(Row &row, const char *flag) {
        for(const auto &f : row.flags)
            if(f == flag) return;
        row.flags.emplace_back(flag);
    }

    inline void fill_classical(Row &row, const estimation::FisherResult &r) {
        row.cfi_classical = r.cfi;
        row.qfi_classical = r.qfi;
        if(!r.qfi) add_flag(row, flag_pure);
    }

    inline void fill_quantum(Row &row, const estimation::FisherResult &r) {
        row.cfi_quantum = r.cfi;
        row.qfi_quantum = r.qfi;
        row.epr_mode    = epr_label(r.mode);
        if(!r.qfi) add_flag(row, flag_pure);
    }
} // namespace detail

/// Evolves both strategies from the Lambda-dependent initial state and evaluates the
/// Fisher information at every grid time.
inline ResultTable run_transient(const ScenarioConfig &c, Strategy strategy = Strategy::both) {
    if(!c.grid) throw ConfigError("run_transient: config has no time grid");
    const auto p = c.effective_system();
    const auto a = dynamics::build_drift(p);
    if(!a.hurwitz()) {
        std::ostringstream msg;
        msg << "run_transient: drift matrix is not Hurwitz (max Re eigenvalue " << a.max_real_eigenvalue() << " at t = 0 s)";
        throw NotHurwitz(msg.str());
    }
    const auto init  = dynamics::initial_state(p);
    const auto times = c.grid->times();

    ResultTable table{config::config_hash(c), cslfi::version, "time_s", {}};
    table.rows.resize(times.size());
    for(std::size_t i = 0; i < times.size(); ++i) table.rows[i].x = times[i];

    std::vector<std::vector<estimation::FisherResult>> results(2);
    parallel::for_each_index(2, [&](std::size_t branch) {
        const bool quantum = branch == 1;
        if(!includes(strategy, quantum ? Strategy::quantum : Strategy::classical)) return;
        const auto noise = quantum ? c.noise.tms() : c.noise.thermal();
        const auto traj  = dynamics::evolve(a, dynamics::build_diffusion(p, noise), init, times, c.evolve_options());
        results[branch]  = estimation::strategy_fisher(traj, noise, quantum ? detail::epr_readout(c) : detail::local_readout(c));
    });
    for(std::size_t i = 0; i < results[0].size(); ++i) detail::fill_classical(table.rows[i], results[0][i]);
    for(std::size_t i = 0; i < results[1].size(); ++i) detail::fill_quantum(table.rows[i], results[1][i]);
    return table;
}

/// Steady-state Fisher information of the local and EPR readouts at each sweep value
/// (or once, without a sweep). Non-Hurwitz points are flagged and skipped.
inline ResultTable run_steady_sweep(const ScenarioConfig &c, Strategy strategy = Strategy::both) {
    if(!c.steady) throw ConfigError("run_steady_sweep: config does not enable the steady state");
    const std::vector<double> values = c.sweep ? c.sweep->values() : std::vector<double>{0.0};

    ResultTable table{config::config_hash(c), cslfi::version, c.sweep ? c.sweep->name : "point", {}};
    table.rows.resize(values.size());
    parallel::for_each_index(values.size(), [&](std::size_t i) {
        const auto pc  = config::at_sweep_value(c, values[i]);
        Row       &row = table.rows[i];
        row.x          = values[i];
        const auto p   = pc.effective_system();
        const auto a   = dynamics::build_drift(p);
        if(!a.hurwitz()) {
            detail::add_flag(row, flag_unstable);
            return;
        }
        const auto ss = dynamics::steady_state(a, dynamics::build_diffusion(p, pc.noise.of(pc.steady->input)));
        const auto &sigma = ss.sigma.matrix();
        if(includes(strategy, Strategy::classical)) detail::fill_classical(row, estimation::fisher_at(sigma, ss.sensitivity, detail::local_readout(pc)));
        if(includes(strategy, Strategy::quantum)) detail::fill_quantum(row, estimation::fisher_at(sigma, ss.sensitivity, detail::epr_readout(pc)));
    });
    return table;
}

inline ResultTable run(const ScenarioConfig &c, Strategy strategy = Strategy::both) {
    return c.grid ? run_transient(c, strategy) : run_steady_sweep(c, strategy);
}

inline std::string format_number(std::optional<double> v) {
    if(!v || std::isnan(*v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", *v);
    return buf;
}

inline std::string format_csv(const ResultTable &t) {
    std::string out = "# config-hash=" + t.config_hash + " units=" + units_note + "\n";
    out += t.index_name + ",cfi_classical_strategy,qfi_classical_strategy,cfi_quantum_strategy,qfi_quantum_strategy,epr_mode,flags\n";
    for(const auto &r : t.rows) {
        out += format_number(r.x) + ',' + format_number(r.cfi_classical) + ',' + format_number(r.qfi_classical) + ',' +
               format_number(r.cfi_quantum) + ',' + format_number(r.qfi_quantum) + ',' + r.epr_mode + ',';
        for(std::size_t k = 0; k < r.flags.size(); ++k) out += (k ? ";" : "") + r.flags[k];
        out += '\n';
    }
    return out;
}

/// Writes to `<path>.tmp` and renames, so an interrupted run never leaves a partial file at `path`.
inline void emit_csv(const ResultTable &t, const std::string &path) {
    const std::string tmp  = path + ".tmp";
    const std::string text = format_csv(t);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if(!out) throw IoError("cannot open '" + tmp + "' for writing");
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        out.flush();
        if(!out) throw IoError("write to '" + tmp + "' failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if(ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError("cannot move output into place at '" + path + "'");
    }
}

struct Check {
    std::string name;
    bool        passed = false;
    std::string detail;
};

/// Invariant suite on one config without producing data: stability, residuals,
/// physicality of every state the config would visit, and CFI <= QFI.
inline std::vector<Check> run_checks(const ScenarioConfig &c) {
    std::vector<Check> out;
    auto add = [&](std::string name, bool ok, std::string detail) { out.push_back({std::move(name), ok, std::move(detail)}); };
    auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3g", v);
        return std::string(buf);
    };

    const auto p = c.effective_system();
    add("lambda finite and non-negative", std::isfinite(p.lambda_csl) && p.lambda_csl >= 0, "Lambda = " + num(p.lambda_csl) + " 1/s");

    const auto bs = gaussian::beam_splitter_transform(c.measurement.phi_bs, 2, gaussian::modes::optical1, gaussian::modes::optical2);
    add("beam splitter symplectic", bs.symplectic_defect() <= gaussian::symplectic_tolerance, "defect " + num(bs.symplectic_defect()));

    const auto a = dynamics::build_drift(p);
    add("drift Hurwitz", a.hurwitz(), "max Re eigenvalue " + num(a.max_real_eigenvalue()));
    if(!a.hurwitz()) return out;

    const auto init = dynamics::initial_state(p);
    add("initial state physical", gaussian::check_physicality(init.sigma), "margin " + num(gaussian::uncertainty_margin(init.sigma.matrix())));

    for(auto kind : {dynamics::NoiseKind::thermal, dynamics::NoiseKind::tms}) {
        const auto  ss  = dynamics::steady_state(a, dynamics::build_diffusion(p, c.noise.of(kind)));
        std::string tag = std::string(" (") + dynamics::to_string(kind) + ")";
        add("steady residual" + tag, ss.residual.scaled < 1e-10, "scaled " + num(ss.residual.scaled));
        add("steady state physical" + tag, gaussian::check_physicality(ss.sigma), "margin " + num(gaussian::uncertainty_margin(ss.sigma.matrix())));
    }

    try {
        const auto table = run(c);
        double     worst = 0;
        for(const auto &r : table.rows) {
            for(auto [cfi, qfi] : {std::pair{r.cfi_classical, r.qfi_classical}, std::pair{r.cfi_quantum, r.qfi_quantum}})
                if(cfi && qfi) worst = std::max(worst, (*cfi - *qfi) / std::max(std::abs(*qfi), 1e-300));
        }
        add("scenario runs", true, std::to_string(table.rows.size()) + " rows");
        add("CFI <= QFI", worst <= 1e-9, "worst relative excess " + num(worst));
    } catch(const PhysicsError &e) {
        add("scenario runs", false, e.what());
    }
    return out;
}

} // namespace cslfi::scenario
