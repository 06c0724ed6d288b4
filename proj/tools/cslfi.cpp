// Command-line front end: transient | steady-sweep | alpha | validate.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cslfi/cslfi.hpp"

namespace {

enum Exit { ok = 0, config_error = 2, physics_error = 3, io_error = 4 };

std::string key_help() {
    std::string s = "\nConfig keys (flat `key = value`, '#' comments):\n";
    for(const auto &k : cslfi::config::key_table()) {
        char line[200];
        std::snprintf(line, sizeof line, "  %-26s %-9s %s\n", k.key, k.unit, k.meaning);
        s += line;
    }
    return s;
}

int write_table(const cslfi::scenario::ResultTable &t, const std::string &out) {
    if(out.empty() || out == "-") {
        std::cout << cslfi::scenario::format_csv(t);
        return ok;
    }
    cslfi::scenario::emit_csv(t, out);
    return ok;
}

} // namespace

int main(int argc, char **argv) {
    using namespace cslfi;
    CLI::App app{"Fisher information of the CSL diffusion rate in a two-cavity optomechanical setup"};
    app.footer(key_help());
    app.require_subcommand(1);

    std::string            config_path, out_path;
    scenario::Strategy     strategy = scenario::Strategy::both;
    const std::map<std::string, scenario::Strategy> strategies{
        {"classical", scenario::Strategy::classical}, {"quantum", scenario::Strategy::quantum}, {"both", scenario::Strategy::both}};

    auto add_common = [&](CLI::App *cmd, bool with_output) {
        cmd->add_option("--config", config_path, "scenario config file")->required();
        if(with_output) {
            cmd->add_option("--out", out_path, "CSV output path (stdout when omitted)");
            cmd->add_option("--strategy", strategy, "classical | quantum | both")->transform(CLI::CheckedTransformer(strategies, CLI::ignore_case).description(""))->type_name("STRATEGY");
        }
    };
    auto *transient = app.add_subcommand("transient", "Fisher information versus time for both strategies");
    auto *steady    = app.add_subcommand("steady-sweep", "steady-state Fisher information over a parameter sweep");
    auto *alpha     = app.add_subcommand("alpha", "print the mass-scaling factor alpha and Lambda from csl.* keys");
    auto *check     = app.add_subcommand("validate", "run the invariant suite on a config without writing data");
    add_common(transient, true);
    add_common(steady, true);
    add_common(alpha, false);
    add_common(check, false);

    try {
        app.parse(argc, argv);
    } catch(const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? ok : config_error;
    }

    try {
        if(*alpha) {
            const auto c   = config::load(config_path, config::ParseMode::csl_only);
            const auto dens = c.csl->density();
            const double a  = csl::alpha_factor(dens, c.csl->r_c);
            const double lambda = csl::csl_diffusion_rate(c.csl->params(c.system.omega_m), a);
            std::printf("shape = %s\nsize_m = %.12g\ndensity_kg_per_m3 = %.12g\nalpha = %.12g\nalpha_point_mass = %.12g\nLambda_per_s = %.12g\n",
                        csl::to_string(dens.shape), dens.size, dens.density(), a, csl::alpha_point_mass(dens.mass), lambda);
            return ok;
        }

        const auto c = config::load(config_path);
        if(*check) {
            bool all = true;
            for(const auto &r : scenario::run_checks(c)) {
                std::printf("%s  %-34s %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
                all = all && r.passed;
            }
            return all ? ok : physics_error;
        }
        if(*transient) {
            if(!c.grid) throw ConfigError("transient needs grid.* keys");
            return write_table(scenario::run_transient(c, strategy), out_path);
        }
        if(!c.steady) throw ConfigError("steady-sweep needs steady.enabled = true");
        return write_table(scenario::run_steady_sweep(c, strategy), out_path);
    } catch(const ConfigError &e) {
        std::cerr << "config error: " << e.what() << '\n';
        return config_error;
    } catch(const IoError &e) {
        std::cerr << "io error: " << e.what() << '\n';
        return io_error;
    } catch(const PhysicsError &e) {
        std::cerr << "physics error: " << e.what() << '\n';
        return physics_error;
    } catch(const Error &e) {
        std::cerr << "error: " << e.what() << '\n';
        return physics_error;
    } catch(const std::invalid_argument &e) {
        std::cerr << "config error: " << e.what() << '\n';
        return config_error;
    }
}
