#include "steamnet/errors.hpp"
#include "steamnet/scenario.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

int report_run(const steamnet::RunReport& rep, const std::filesystem::path& out)
{
    std::cout << "steps: " << rep.steps.size() << "  violations: " << rep.violations
              << "  HL solves: " << rep.hl_solve_count << "  max |w|: " << rep.max_w_inf
              << " (bound " << rep.w_bound << ")  wall: " << rep.wall_ms << " ms\n"
              << "outputs written to " << out.string() << "\n";
    for (const auto& v : rep.violation_log)
        std::cerr << "violation: " << v << "\n";
    return rep.violations == 0 ? 0 : 2;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Hierarchical control of a steam generator ensemble"};
    app.require_subcommand(1);

    std::string id_config, id_out;
    auto* identify = app.add_subcommand("identify", "Identify closed-loop boiler models");
    identify->add_option("--config", id_config, "Scenario configuration (JSON)")->required()->check(CLI::ExistingFile);
    identify->add_option("--out", id_out, "Output directory")->required();

    std::string run_config, run_out = "out";
    bool use_default = false;
    auto* run = app.add_subcommand("run", "Identify models and run the closed-loop scenario");
    auto* cfg_opt = run->add_option("--config", run_config, "Scenario configuration (JSON)")->check(CLI::ExistingFile);
    auto* def_opt = run->add_flag("--default-scenario", use_default, "Run the built-in five-boiler scenario");
    cfg_opt->excludes(def_opt);
    run->add_option("--out", run_out, "Output directory")->capture_default_str();

    std::string validate_path;
    auto* validate = app.add_subcommand("validate-config", "Check a configuration file and exit");
    validate->add_option("path", validate_path, "Scenario configuration (JSON)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*identify) {
            const auto cfg = steamnet::load_config(id_config);
            const auto ident = steamnet::run_identification(cfg);
            steamnet::emit_identification(ident, id_out);
            for (std::size_t i = 0; i < ident.boilers.size(); ++i)
                std::cout << "boiler " << i + 1 << ": fit " << ident.boilers[i].fit_percent << "%, gain "
                          << ident.boilers[i].g << "\n";
            return 0;
        }
        if (*run) {
            if (!use_default && run_config.empty()) {
                std::cerr << "error: run needs --config <path> or --default-scenario\n";
                return 1;
            }
            const auto cfg = use_default ? steamnet::default_scenario() : steamnet::load_config(run_config);
            const auto rep = steamnet::run_scenario(cfg);
            steamnet::emit_outputs(rep, cfg, run_out);
            return report_run(rep, run_out);
        }
        if (*validate) {
            steamnet::load_config(validate_path);
            std::cout << validate_path << ": ok\n";
            return 0;
        }
    } catch (const steamnet::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
