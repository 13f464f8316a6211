#include <array>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "loadid/cli.hpp"
#include "loadid/errors.hpp"

namespace {

using namespace loadid;

// Exit codes: 0 success, 2 validation/usage, 3 numeric failure, 4 I/O.
constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

struct ModelFlags {
    std::string file;
    std::optional<double> a, b, h2, tm;
    std::optional<double> x, xp, td0;
    double pz = 0.0, pi = 0.0, pp = 0.0, qz = 0.0, qi = 0.0, qp = 0.0;

    void attach(CLI::App* app) {
        app->add_option("--model", file, "Load model JSON ({motor, zip})");
        app->add_option("--a", a, "Transformed motor gain a (1/s)");
        app->add_option("--b", b, "Transformed motor decay b (1/s)");
        app->add_option("--h2", h2, "Inertia time constant (s)");
        app->add_option("--tm", tm, "Mechanical torque (p.u.)");
        app->add_option("--x", x, "Physical rotor open-circuit reactance (p.u.)");
        app->add_option("--xp", xp, "Physical rotor transient reactance (p.u.)");
        app->add_option("--td0", td0, "Physical open-circuit time constant (s)");
        app->add_option("--pz", pz, "ZIP active V^2 coefficient");
        app->add_option("--pi", pi, "ZIP active V coefficient");
        app->add_option("--pp", pp, "ZIP active constant term");
        app->add_option("--qz", qz, "ZIP reactive V^2 coefficient");
        app->add_option("--qi", qi, "ZIP reactive V coefficient");
        app->add_option("--qp", qp, "ZIP reactive constant term");
    }

    CompositeLoad resolve() const {
        if (!file.empty()) return read_model_json(file);
        CompositeLoad load;
        load.zip = ZIPParams{pz, pi, pp, qz, qi, qp};
        if (x && xp && td0 && h2 && tm) {
            load.motor = IMParamsPhysical{*x, *xp, *td0, *h2, *tm};
        } else if (a && b && h2 && tm) {
            load.motor = IMParamsTransformed{*a, *b, *h2, *tm};
        } else {
            throw ValidationError(
                "specify --model FILE, or --a --b --h2 --tm, or --x --xp --td0 --h2 --tm");
        }
        load.validate();
        return load;
    }
};

void attach_ambient(CLI::App* app, AmbientSpec& ambient) {
    app->add_option("--duration", ambient.duration, "Window length (s)");
    app->add_option("--dt", ambient.dt, "Sample period (s)");
    app->add_option("--v-mean", ambient.v_mean, "Mean voltage (p.u.)");
    app->add_option("--theta-mean", ambient.theta_mean, "Mean angle (rad)");
    app->add_option("--noise-std", ambient.noise_std,
                    "Pre-filter white-noise std of the V excitation (p.u.)");
    app->add_option("--cutoff", ambient.cutoff_hz, "Excitation low-pass cutoff (Hz)");
    app->add_option("--theta-noise-ratio", ambient.theta_noise_ratio,
                    "Angle noise std relative to voltage noise std");
}

void attach_policy(CLI::App* app, WindowPolicy& policy) {
    app->add_option("--warmup", policy.warmup_skip,
                    "Prediction warm-up discarded before the fit (s)");
    app->add_option("--fit-start", policy.fit_start, "Fit window start (s)");
    app->add_option("--fit-end", policy.fit_end, "Fit window end, exclusive (s)");
}

void attach_solver(CLI::App* app, SolverOptions& solver) {
    app->add_option("--max-iters", solver.max_iters, "Iteration cap per start");
    app->add_option("--gradient-step", solver.gradient_step,
                    "Finite-difference step in scaled coordinates");
    app->add_option("--tol-step", solver.tol_step,
                    "Convergence tolerance on the scaled step");
    app->add_option("--penalty", solver.penalty_value,
                    "Objective value for infeasible evaluations");
}

void attach_fault(CLI::App* app, FaultSpec& fault) {
    app->add_option("--t-fault", fault.t_fault, "Fault start (s)");
    app->add_option("--t-clear", fault.t_clear, "Fault clearing time (s)");
    app->add_option("--v-sag", fault.v_sag, "Voltage during the fault (p.u.)");
    app->add_option("--recovery-tau", fault.recovery_tau,
                    "Exponential recovery constant (s)");
}

IMParamsTransformed parse_params(const std::vector<double>& vals,
                                 const char* flag) {
    if (vals.size() != 4) {
        throw ValidationError(std::string(flag) + " needs 4 values: a b h2 tm");
    }
    return IMParamsTransformed{vals[0], vals[1], vals[2], vals[3]};
}

int run(int argc, char** argv) {
    CLI::App app{"Composite load identification from ambient measurements"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read options from an INI/TOML file");
    app.get_formatter()->column_width(34);

    SystemConfig cfg;
    app.add_option("--omega0", cfg.omega0, "Synchronous angular speed (rad/s)")
        ->capture_default_str();

    // simulate
    cli::SimulateCmd sim;
    ModelFlags sim_model;
    auto* c_sim = app.add_subcommand(
        "simulate", "Generate a synthetic measurement window plus truth file");
    c_sim->add_option("--out", sim.out_csv, "Output CSV path")->required();
    c_sim->add_option("--truth", sim.truth_json, "Truth JSON path");
    sim_model.attach(c_sim);
    attach_ambient(c_sim, sim.ambient);
    c_sim->add_option("--dl", sim.dl, "Disturbance level 1..3 (scales the excitation)");
    c_sim->add_option("--seed", sim.ambient.seed, "RNG seed")->required();
    auto* snr_opt = c_sim->add_option("--snr-db", sim.noise.target_snr_db,
                                      "Inject measurement error at this SNR");
    c_sim->add_option("--vtheta-extra-snr-db", sim.noise.v_theta_extra_snr_db,
                      "Extra SNR margin for the V and theta channels");
    c_sim->add_option("--offset-fraction", sim.noise.offset_fraction,
                      "Systematic offset as a fraction of each channel mean");
    c_sim->add_option("--noise-seed", sim.noise.seed,
                      "Separate seed for measurement error (default: --seed)");
    std::vector<double> error_std_flags;
    c_sim->add_option("--error-std", error_std_flags,
                      "Fixed absolute error stds: v theta p q")
        ->expected(4);

    // identify
    cli::IdentifyCmd ident;
    auto* c_id = app.add_subcommand(
        "identify", "Identify load parameters from a measurement CSV");
    c_id->add_option("--data", ident.data_csv, "Input CSV")->required();
    c_id->add_option("--out", ident.out_json, "Result JSON path");
    c_id->add_flag("!--no-filter", ident.apply_filter,
                   "Skip the 2 Hz low-pass preprocessing");
    c_id->add_option("--filter-cutoff", ident.cutoff_hz,
                     "Preprocessing low-pass cutoff (Hz)");
    c_id->add_option("--starts", ident.solver.n_starts,
                     "Number of optimization starts");
    attach_policy(c_id, ident.policy);
    attach_solver(c_id, ident.solver);
    c_id->add_flag("--literal-stability", ident.literal_stability,
                   "Use the a*v_min^2 > 2b form of the stability constraint");
    c_id->add_option("--seed", ident.solver.seed, "RNG seed")->required();

    // validate
    cli::ValidateCmd val;
    auto* c_val = app.add_subcommand(
        "validate", "Compare two load models under a synthetic fault");
    c_val->add_option("--actual", val.actual_model_json, "Actual model JSON")
        ->required();
    c_val->add_option("--identified", val.identified_model_json,
                      "Identified model JSON")
        ->required();
    c_val->add_option("--out", val.out_json, "Report JSON path");
    attach_fault(c_val, val.fault);
    attach_ambient(c_val, val.base);
    c_val->add_option("--seed", val.base.seed, "RNG seed")->required();

    // qconvex
    cli::QconvexCmd qc;
    auto* c_qc = app.add_subcommand(
        "qconvex", "Monte-Carlo quasi-convexity test of the objective");
    c_qc->add_option("--data", qc.data_csv, "Input CSV")->required();
    c_qc->add_option("--out", qc.out_json, "Report JSON path");
    c_qc->add_option("--pairs", qc.n_pairs, "Number of point pairs");
    attach_policy(c_qc, qc.policy);
    c_qc->add_flag("--literal-stability", qc.literal_stability,
                   "Use the a*v_min^2 > 2b stability form");
    c_qc->add_option("--seed", qc.seed, "RNG seed")->required();

    // reliability
    cli::ReliabilityCmd rel;
    auto* c_rel = app.add_subcommand(
        "reliability", "Multi-start reliability test of the optimizer");
    c_rel->add_option("--data", rel.data_csv, "Input CSV")->required();
    c_rel->add_option("--out", rel.out_json, "Report JSON path");
    c_rel->add_option("--starts", rel.n_starts, "Number of independent starts");
    attach_policy(c_rel, rel.policy);
    attach_solver(c_rel, rel.solver);
    c_rel->add_flag("--literal-stability", rel.literal_stability,
                    "Use the a*v_min^2 > 2b stability form");
    c_rel->add_option("--seed", rel.seed, "RNG seed")->required();

    // landscape
    cli::LandscapeCmd land;
    std::vector<double> center_vals, d1_vals, d2_vals;
    auto* c_land = app.add_subcommand(
        "landscape", "Export a 2-D log10(OF) slice as a CSV grid");
    c_land->add_option("--data", land.data_csv, "Input CSV")->required();
    c_land->add_option("--out", land.out_csv, "Output CSV grid")->required();
    c_land->add_option("--center", center_vals, "Slice center: a b h2 tm")
        ->expected(4);
    c_land->add_option("--center-file", land.center_file,
                       "Model or result JSON providing the center");
    c_land->add_option("--d1", d1_vals, "First anchor: a b h2 tm")->expected(4);
    c_land->add_option("--d2", d2_vals, "Second anchor: a b h2 tm")->expected(4);
    c_land->add_option("--k1", land.k1.k_min, "k1 grid minimum");
    c_land->add_option("--k1-max", land.k1.k_max, "k1 grid maximum");
    c_land->add_option("--k1-count", land.k1.count, "k1 grid points");
    c_land->add_option("--k2", land.k2.k_min, "k2 grid minimum");
    c_land->add_option("--k2-max", land.k2.k_max, "k2 grid maximum");
    c_land->add_option("--k2-count", land.k2.count, "k2 grid points");
    attach_policy(c_land, land.policy);
    c_land->add_flag("--literal-stability", land.literal_stability,
                     "Use the a*v_min^2 > 2b stability form");
    c_land->add_option("--seed", land.seed, "RNG seed for sampled anchors");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    if (c_sim->parsed()) {
        sim.cfg = cfg;
        sim.model = sim_model.resolve();
        sim.add_noise = snr_opt->count() > 0 || !error_std_flags.empty();
        if (c_sim->count("--noise-seed") == 0) sim.noise.seed = sim.ambient.seed;
        if (!error_std_flags.empty()) {
            sim.error_std = std::array<double, 4>{error_std_flags[0],
                                                  error_std_flags[1],
                                                  error_std_flags[2],
                                                  error_std_flags[3]};
        }
        cli::cmd_simulate(sim);
    } else if (c_id->parsed()) {
        ident.cfg = cfg;
        cli::cmd_identify(ident);
    } else if (c_val->parsed()) {
        val.cfg = cfg;
        cli::cmd_validate(val);
    } else if (c_qc->parsed()) {
        qc.cfg = cfg;
        cli::cmd_qconvex(qc);
    } else if (c_rel->parsed()) {
        rel.cfg = cfg;
        cli::cmd_reliability(rel);
    } else if (c_land->parsed()) {
        land.cfg = cfg;
        if (!center_vals.empty()) land.center = parse_params(center_vals, "--center");
        if (!d1_vals.empty()) land.d1 = parse_params(d1_vals, "--d1");
        if (!d2_vals.empty()) land.d2 = parse_params(d2_vals, "--d2");
        cli::cmd_landscape(land);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
