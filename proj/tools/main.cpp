// cellflow: config-driven experiments for cellular stochastic flows with
// inertial drift, mass transport, and coalescing particles.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cellflow/commands.hpp"

namespace {

struct Shared {
    std::string config_path;
    cellflow::RunOptions run;
};

void add_common(CLI::App* sub, Shared& sh) {
    sub->add_option("--config", sh.config_path, "experiment configuration file")->required();
    sub->add_option("--out", sh.run.out_dir, "output directory (default: out)");
    sub->add_option("--threads", sh.run.threads, "worker threads (0: config value)");
    sub->add_flag_callback("--no-figures", [&sh] { sh.run.figures = false; },
                           "skip figure generation");
    sub->add_option("--seed-offset", sh.run.seed_offset, "offset added to every seed");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cellular stochastic flow laboratory"};
    app.require_subcommand(1);

    Shared sh;
    int (*entry)(const cellflow::ExperimentConfig&, const cellflow::RunOptions&) = nullptr;
    const std::pair<const char*, int (*)(const cellflow::ExperimentConfig&,
                                         const cellflow::RunOptions&)>
        cmds[] = {{"verify", cellflow::cmd_verify},     {"fields", cellflow::cmd_fields},
                  {"flow", cellflow::cmd_flow},         {"particles", cellflow::cmd_particles},
                  {"density", cellflow::cmd_density},   {"rates", cellflow::cmd_rates}};
    for (const auto& [name, fn] : cmds) {
        CLI::App* sub = app.add_subcommand(name);
        add_common(sub, sh);
        sub->callback([&entry, fn = fn] { entry = fn; });
    }

    CLI11_PARSE(app, argc, argv);

    try {
        const cellflow::ConfigFile cfg = cellflow::parse_config_file(sh.config_path);
        const cellflow::ExperimentConfig ec = cellflow::experiment_from_config(cfg);
        return entry(ec, sh.run);
    } catch (const cellflow::param_error& e) {
        std::cerr << "parameter error: " << e.what() << "\n";
        return 2;
    } catch (const cellflow::input_error& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const cellflow::numerical_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << "\n";
        return 3;
    }
}
