// Command-line front end: validate and run scenario files.
// Exit codes: 0 success, 1 hypothesis-failure certificate, 2 errors.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hamcurv/hamcurv.hpp"

namespace {

int do_validate(const std::string& path, const std::vector<std::string>& overrides) {
    try {
        hamcurv::Scenario sc = hamcurv::Scenario::parse_file(path);
        for (const auto& ov : overrides) sc.apply_override(ov);
        auto diags = hamcurv::validate_scenario(sc);
        if (diags.empty()) {
            std::cout << "ok\n";
            return 0;
        }
        for (const auto& d : diags) std::cerr << d << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }
}

int do_run(const std::string& path, const std::vector<std::string>& overrides,
           const hamcurv::RunOptions& opt) {
    try {
        hamcurv::Scenario sc = hamcurv::Scenario::parse_file(path);
        for (const auto& ov : overrides) sc.apply_override(ov);
        hamcurv::RunResult res = hamcurv::run_scenario(sc, opt);
        for (const auto& l : res.log) std::cout << l << "\n";
        for (const auto& a : res.artifacts) std::cout << "wrote " << a << "\n";
        return res.exit_code;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Curvature and hyperbolicity toolkit for Hamiltonian systems"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::vector<std::string> overrides;
    hamcurv::RunOptions opt;

    CLI::App* validate = app.add_subcommand("validate", "Parse and statically check a scenario");
    validate->add_option("scenario", scenario_path, "Scenario file")->required();
    validate->add_option("--override", overrides, "Override section.key=value (repeatable)");

    CLI::App* run = app.add_subcommand("run", "Execute a scenario and write its artifacts");
    run->add_option("scenario", scenario_path, "Scenario file")->required();
    run->add_option("--override", overrides, "Override section.key=value (repeatable)");
    run->add_option("--out", opt.out_dir, "Output directory (default: current)");
    run->add_flag("--emit-plot-data", opt.emit_plot_data, "Also write (x, y) series files");
    run->add_option("--seed", opt.seed, "Seed recorded with the run and used for sampling");

    CLI11_PARSE(app, argc, argv);

    if (validate->parsed()) return do_validate(scenario_path, overrides);
    return do_run(scenario_path, overrides, opt);
}
