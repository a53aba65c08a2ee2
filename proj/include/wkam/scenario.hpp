#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "wkam/kernel.hpp"
#include "wkam/mather.hpp"
#include "wkam/model.hpp"
#include "wkam/stationary.hpp"

namespace wkam {

struct KernelParams {
    double tau = 1.0 / 64.0;
    double t_max = 32.0;
    double window_t0 = 16.0;
    double window_t1 = 32.0;
    double velocity_box = 4.0;   // snapped to whole grid cells per step
    int p_samples = 201;         // per axis, for the Legendre transform
    double aubry_tol = 1e-4;
    // Viscosity-role tolerance for kernel-built functions; sits above the
    // slope wiggle that path-velocity granularity puts on S rows, far below
    // off-Aubry failure margins.
    double role_tol = 0.1;
};

// A fully specified experiment: model, grids, kernel window, solver knobs,
// lambda schedule. Built-ins: pendulum, double-well, app1-cubic, app2-paper,
// oscillating, pendulum2d.
struct Scenario {
    std::string name;
    ContactModel model;
    int dim = 1;
    int resolution = 256;
    double c_ref = std::numeric_limits<double>::quiet_NaN();  // analytic c when known
    double solver_momentum_box = 0;  // 0 = model box; else the PDE solves use this
    KernelParams kernel;
    SolverConfig solver;
    std::vector<double> lambda_schedule;
    double check_tol = 0.02;  // scheme tolerance for attached property checks
    double sandwich_R0 = 2.0;
    std::string out_dir = "out";
};

// resolution = 0 keeps the scenario default. The oscillating family is
// materialized here (its two branch targets are kernel-computed barriers of
// the double-well scenario at the same resolution).
Scenario builtin_scenario(const std::string& key, int resolution = 0);
bool is_builtin_scenario(const std::string& key);
std::vector<std::string> builtin_scenario_names();

// Strict parse: unknown keys anywhere are rejected with the offending path.
Scenario load_scenario_json(const std::string& path);

// Lazy shared computations for one scenario (grid, scheme constant, Legendre
// table, barrier bundle, sweep). Each is computed once per runtime.
class ScenarioRuntime {
public:
    explicit ScenarioRuntime(Scenario sc);

    const Scenario& scenario() const { return sc_; }
    const PeriodicGrid& grid() const { return grid_; }

    // model copy whose momentum box is the solver's sampling radius
    const ContactModel& solver_model();
    double scheme_c();                   // additive eigenvalue of the frozen scheme
    double kernel_c();                   // c_ref, or -LP objective when unknown
    const LagrangianTable& table();      // Legendre table of the frozen base
    const BarrierBundle& barrier();
    SweepReport& sweep();                // descending-lambda sweep at scheme_c
    CriticalValueEstimate& critical();   // two-estimator critical value

private:
    Scenario sc_;
    PeriodicGrid grid_;
    std::optional<ContactModel> solver_model_;
    std::optional<double> scheme_c_;
    std::optional<double> kernel_c_;
    std::optional<LagrangianTable> table_;
    std::optional<BarrierBundle> barrier_;
    std::optional<SweepReport> sweep_;
    std::optional<CriticalValueEstimate> critical_;
};

// Runs one command {critical, solve, sweep, barrier, aubry, mather,
// represent, verify, example42} against the scenario: writes artifacts under
// <out_dir>/<name>/<command>/, prints a one-line summary, and returns the
// process exit status: 0 ok, 1 error, 2 property-check failure.
int run_scenario(const Scenario& sc, const std::string& command);

// Machine-readable bundle of the numbers produced by previous commands in
// <out_dir>/<name>; deterministic serialization, "report_version": 1.
// Throws InputError listing missing artifacts.
std::string export_report(const std::string& run_dir);

}  // namespace wkam
