// Command-line front end: scenario selection, overrides, command dispatch.
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wkam/parallel.hpp"
#include "wkam/scenario.hpp"

using namespace wkam;

int main(int argc, char** argv) {
    CLI::App app{"weak-KAM laboratory: contact Hamilton-Jacobi solvers, min-plus "
                 "action kernels, Aubry sets, and Mather measures on flat tori"};
    app.require_subcommand(1);

    std::string config_path, builtin_key, out_dir;
    int threads = 0, resolution = 0;
    double tol = 0;
    std::vector<double> lambda_schedule;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "scenario JSON file");
        cmd->add_option("--builtin", builtin_key,
                        "built-in scenario key (pendulum, double-well, app1-cubic, "
                        "app2-paper, oscillating, pendulum2d)");
        cmd->add_option("--out", out_dir, "output directory (default: out)");
        cmd->add_option("--threads", threads, "worker threads (default: all cores)");
        cmd->add_option("--tol", tol, "solver residual tolerance override");
        cmd->add_option("--resolution", resolution, "grid nodes per axis override");
        cmd->add_option("--lambda-schedule", lambda_schedule,
                        "comma-separated descending lambda list")
            ->delimiter(',');
    };

    const std::vector<std::string> commands = {"critical", "solve",  "sweep",
                                               "barrier",  "aubry",  "mather",
                                               "represent", "verify", "example42"};
    for (const auto& c : commands) add_common(app.add_subcommand(c));

    CLI::App* export_cmd = app.add_subcommand("export-report",
                                              "bundle a run directory into report.json");
    std::string report_dir;
    export_cmd->add_option("dir", report_dir, "run directory (<out>/<scenario>)")
        ->required();

    CLI11_PARSE(app, argc, argv);
    set_parallel_threads(threads);

    try {
        if (export_cmd->parsed()) {
            const std::string bundle = export_report(report_dir);
            std::ofstream f(report_dir + "/report.json");
            f << bundle;
            std::printf("export-report: wrote %s/report.json (%zu bytes)\n",
                        report_dir.c_str(), bundle.size());
            return 0;
        }

        if (config_path.empty() == builtin_key.empty()) {
            std::fprintf(stderr, "error: give exactly one of --config or --builtin\n");
            return 1;
        }
        Scenario sc = config_path.empty() ? builtin_scenario(builtin_key, resolution)
                                          : load_scenario_json(config_path);
        if (resolution > 0 && sc.model.kind != ModelKind::Oscillating) {
            sc.resolution = resolution;
        }
        if (tol > 0) sc.solver.tol = tol;
        if (!lambda_schedule.empty()) sc.lambda_schedule = lambda_schedule;
        if (!out_dir.empty()) sc.out_dir = out_dir;

        for (const auto& c : commands)
            if (app.get_subcommand(c)->parsed()) return run_scenario(sc, c);
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
