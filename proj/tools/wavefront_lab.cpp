#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "wavefront/experiments.hpp"
#include "wavefront/io.hpp"

namespace {

struct Override {
    std::string section;
    std::string key;
    std::string value;
};

/// Registers --flag mapped onto section.key; values are applied to the
/// configuration after parsing, in command-line order.
void map_flag(CLI::App* cmd, std::vector<Override>* sink, const char* flag,
              const char* section, const char* key, const char* doc) {
    cmd->add_option_function<std::string>(
        flag,
        [sink, section, key](const std::string& v) {
            sink->push_back({section, key, v});
        },
        doc);
}

void add_model_flags(CLI::App* cmd, std::vector<Override>* sink) {
    map_flag(cmd, sink, "--birth", "model", "birth",
             "beverton-holt | nicholson | pushed");
    map_flag(cmd, sink, "--r", "model", "r", "preset growth slope g'(0)");
    map_flag(cmd, sink, "--kappa", "model", "kappa", "positive equilibrium");
    map_flag(cmd, sink, "--p-over-delta", "model", "p_over_delta",
             "nicholson ratio p/delta");
    map_flag(cmd, sink, "--s", "model", "s", "pushed preset steepening");
    map_flag(cmd, sink, "--delay", "model", "h", "delay in normalized units");
}

void add_numerics_flags(CLI::App* cmd, std::vector<Override>* sink) {
    map_flag(cmd, sink, "--x-min", "numerics", "x_min", "left grid edge");
    map_flag(cmd, sink, "--x-max", "numerics", "x_max", "right grid edge");
    map_flag(cmd, sink, "--dx", "numerics", "dx", "target grid spacing");
    map_flag(cmd, sink, "--dt", "numerics", "dt", "target time step");
    map_flag(cmd, sink, "--t-end", "numerics", "t_end", "simulated span");
}

void add_set_flag(CLI::App* cmd, std::vector<Override>* sink) {
    cmd->add_option_function<std::vector<std::string>>(
        "--set",
        [sink](const std::vector<std::string>& items) {
            for (const std::string& item : items) {
                const auto eq = item.find('=');
                const auto dot = item.find('.');
                if (eq == std::string::npos || dot == std::string::npos ||
                    dot > eq)
                    throw CLI::ValidationError(
                        "--set expects section.key=value, got '" + item + "'");
                sink->push_back({item.substr(0, dot),
                                 item.substr(dot + 1, eq - dot - 1),
                                 item.substr(eq + 1)});
            }
        },
        "override any configuration key: section.key=value");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "wavefront-lab: speed selection and front stability experiments for\n"
        "the delayed reaction-diffusion equation u_t = u_xx - u + g(u(t-h))."};
    app.footer("exit codes:\n"
               "  0  run completed and every check passed\n"
               "  2  configuration or parameter error\n"
               "  3  numerical failure (blow-up, no convergence, mismatch)\n"
               "  4  run completed but a check failed");
    app.require_subcommand(0, 1);

    std::string config_path;
    bool print_schema_flag = false;
    std::vector<Override> overrides;

    app.add_option("--config", config_path,
                   "configuration file (flat sectioned key = value)");
    app.add_flag("--print-schema", print_schema_flag,
                 "print every configuration key with type, default, doc");
    map_flag(&app, &overrides, "--out", "output", "dir", "output directory");
    map_flag(&app, &overrides, "--workers", "sweep", "workers",
             "concurrent sweep points");
    map_flag(&app, &overrides, "--seed", "experiment", "seed",
             "seed recorded with the run");

    const auto common = [&](CLI::App* cmd) {
        cmd->fallthrough();
        add_model_flags(cmd, &overrides);
        add_numerics_flags(cmd, &overrides);
        add_set_flag(cmd, &overrides);
        return cmd;
    };

    CLI::App* roots = common(app.add_subcommand(
        "roots", "decay exponents of the front tail at a given speed"));
    map_flag(roots, &overrides, "--c", "experiment", "c", "frame speed");
    map_flag(roots, &overrides, "--gp0", "experiment", "gp0",
             "override g'(0); 0 takes it from the model");

    CLI::App* crit = common(app.add_subcommand(
        "critical-speed", "smallest speed with a real decay exponent"));
    map_flag(crit, &overrides, "--gp0", "experiment", "gp0",
             "override g'(0); 0 takes it from the model");

    CLI::App* sel = common(app.add_subcommand(
        "select-speed", "predicted spreading speed for a tail exponent"));
    map_flag(sel, &overrides, "--lambda", "experiment", "lambda",
             "initial tail decay exponent");
    map_flag(sel, &overrides, "--gp0", "experiment", "gp0",
             "override g'(0); 0 takes it from the model");

    CLI::App* sim = common(app.add_subcommand(
        "simulate", "time integration from configurable initial data"));
    map_flag(sim, &overrides, "--c", "experiment", "c", "frame speed");
    map_flag(sim, &overrides, "--frame", "numerics", "frame",
             "lab | comoving");
    map_flag(sim, &overrides, "--ic", "experiment", "ic",
             "exponential-tail | heaviside | constant");
    map_flag(sim, &overrides, "--lambda", "experiment", "lambda",
             "tail exponent of the initial data");
    map_flag(sim, &overrides, "--amplitude", "experiment", "amplitude",
             "tail amplitude of the initial data");
    map_flag(sim, &overrides, "--ic-level", "experiment", "ic_level",
             "plateau level; -1 means kappa");
    map_flag(sim, &overrides, "--x0", "experiment", "x0",
             "heaviside jump location");

    CLI::App* prof = common(app.add_subcommand(
        "profile", "relax and polish the traveling front at speed c"));
    map_flag(prof, &overrides, "--c", "experiment", "c", "wave speed");
    map_flag(prof, &overrides, "--relax-time", "experiment", "relax_time",
             "dynamical warm-up before the polish");

    CLI::App* ss = common(app.add_subcommand(
        "speed-selection", "measure the front speed against the prediction"));
    map_flag(ss, &overrides, "--lambda", "experiment", "lambda",
             "initial tail decay exponent");
    map_flag(ss, &overrides, "--ic", "experiment", "ic",
             "exponential-tail | heaviside");
    map_flag(ss, &overrides, "--amplitude", "experiment", "amplitude",
             "tail amplitude of the initial data");
    map_flag(ss, &overrides, "--expect", "experiment", "expect",
             "auto | selected | saturated");

    CLI::App* sr = common(app.add_subcommand(
        "stability-rate", "decay rate of a weighted perturbation norm"));
    map_flag(sr, &overrides, "--c", "experiment", "c", "wave speed");
    map_flag(sr, &overrides, "--q", "experiment", "q",
             "perturbation amplitude");
    map_flag(sr, &overrides, "--lambda", "experiment", "lambda",
             "weight exponent of the norm");
    map_flag(sr, &overrides, "--relax-time", "experiment", "relax_time",
             "dynamical warm-up before the polish");

    CLI::App* nc = common(app.add_subcommand(
        "nicholson-case", "non-monotone birth: slope bound, overshoot, rate"));
    map_flag(nc, &overrides, "--c", "experiment", "c",
             "wave speed; defaults to 1.2 times the critical speed");
    map_flag(nc, &overrides, "--q", "experiment", "q",
             "perturbation amplitude");

    CLI::App* ve = common(app.add_subcommand(
        "verify-envelope", "build and certify a comparison envelope"));
    map_flag(ve, &overrides, "--c", "experiment", "c", "wave speed");
    map_flag(ve, &overrides, "--envelope", "experiment", "envelope",
             "decay | shift");
    map_flag(ve, &overrides, "--lambda", "experiment", "lambda",
             "weight exponent; default midway between the two roots");
    map_flag(ve, &overrides, "--gamma", "experiment", "gamma",
             "decay exponent; -1 means half the admissible budget");
    map_flag(ve, &overrides, "--q", "experiment", "q", "envelope amplitude");
    map_flag(ve, &overrides, "--weight", "experiment", "weight",
             "eta | xi");

    CLI::App* ti = common(app.add_subcommand(
        "tail-invariance", "growth rate of the conserved tail amplitude"));
    map_flag(ti, &overrides, "--c", "experiment", "c",
             "speed paired with the tail exponent");
    map_flag(ti, &overrides, "--lambda", "experiment", "lambda",
             "tail exponent; default is the slow root at speed c");
    map_flag(ti, &overrides, "--amplitude", "experiment", "amplitude",
             "tail amplitude of the initial data");

    CLI::App* sw = common(app.add_subcommand(
        "sweep", "run the configured experiment over a parameter grid"));
    map_flag(sw, &overrides, "--kind", "experiment", "kind",
             "experiment to run at every grid point");
    map_flag(sw, &overrides, "--vary", "sweep", "vary",
             "grid: section.key = v1,v2 | a:step:b, ';' separated");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (print_schema_flag) {
        wavefront::print_schema(std::cout);
        return 0;
    }
    if (app.get_subcommands().empty()) {
        std::cout << app.help();
        return 2;
    }

    try {
        wavefront::Config cfg;
        if (!config_path.empty())
            cfg = wavefront::Config::parse_file(config_path);
        for (const Override& o : overrides) cfg.set(o.section, o.key, o.value);

        const std::string cmd = app.get_subcommands().front()->get_name();
        if (cmd != "sweep") cfg.set("experiment", "kind", cmd);

        const wavefront::ExperimentReport rep =
            cmd == "sweep" ? wavefront::run_sweep(cfg)
                           : wavefront::run_experiment(cfg);
        wavefront::write_report_files(rep, cfg);
        std::cout << wavefront::render_report(rep);
        return rep.passed() ? 0 : 4;
    } catch (const wavefront::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const wavefront::DomainError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const wavefront::ParameterOutOfBudget& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const wavefront::NoAdmissibleParams& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const wavefront::Error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
}
