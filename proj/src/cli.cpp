#include "loadid/cli.hpp"

#include <chrono>
#include <iostream>

#include "loadid/errors.hpp"
#include "loadid/rng.hpp"

namespace loadid::cli {

double dl_noise_multiplier(int dl) {
    switch (dl) {
    case 1: return 1.0;
    case 2: return 2.4;
    case 3: return 4.8;
    default: throw ValidationError("disturbance level must be 1, 2 or 3");
    }
}

void cmd_simulate(const SimulateCmd& cmd) {
    cmd.model.validate();
    AmbientSpec ambient = cmd.ambient;
    ambient.noise_std *= dl_noise_multiplier(cmd.dl);
    ambient.validate();

    SystemConfig cfg = cmd.cfg;
    cfg.dt = ambient.dt;

    const VoltageTrajectory excitation = generate_ambient(ambient);
    const MeasurementSeries clean = simulate_composite(cmd.model, excitation, cfg);

    nlohmann::json truth{
        {"model", to_json(cmd.model)},
        {"ambient",
         {{"duration", ambient.duration},
          {"dt", ambient.dt},
          {"v_mean", ambient.v_mean},
          {"theta_mean", ambient.theta_mean},
          {"noise_std", ambient.noise_std},
          {"cutoff_hz", ambient.cutoff_hz},
          {"theta_noise_ratio", ambient.theta_noise_ratio},
          {"seed", ambient.seed}}},
        {"dl", cmd.dl},
        {"omega0", cfg.omega0},
    };
    // The transformed equivalent (qz absorbing 1/xp) is what identification
    // can recover; record it whenever the generator is physical.
    if (cmd.model.physical_mode()) {
        const auto& phys = std::get<IMParamsPhysical>(cmd.model.motor);
        CompositeLoad equivalent{transform_params(phys), cmd.model.zip};
        equivalent.zip.qz += 1.0 / phys.xp;
        truth["model_transformed"] = to_json(equivalent);
    } else {
        truth["model_transformed"] = to_json(cmd.model);
    }

    MeasurementSeries output = clean;
    if (cmd.add_noise) {
        const NoiseInjection inj =
            cmd.error_std.has_value()
                ? inject_noise_with_std(clean, *cmd.error_std,
                                        cmd.noise.offset_fraction, cmd.noise.seed)
                : inject_noise(clean, cmd.noise);
        output = inj.noisy;
        truth["noise"] = {{"target_snr_db", cmd.noise.target_snr_db},
                          {"offset_fraction", cmd.noise.offset_fraction},
                          {"seed", cmd.noise.seed},
                          {"realized_snr_db",
                           {{"v", inj.snr_v_db},
                            {"theta", inj.snr_theta_db},
                            {"p", inj.snr_p_db},
                            {"q", inj.snr_q_db},
                            {"pq_avg", inj.snr_pq_avg_db}}}};
    }

    write_series_csv(cmd.out_csv, output);
    if (!cmd.truth_json.empty()) write_json_file(cmd.truth_json, truth);

    std::cout << "wrote " << output.size() << " samples to " << cmd.out_csv.string();
    if (cmd.add_noise && truth.contains("noise")) {
        std::cout << " (realized P/Q SNR "
                  << truth["noise"]["realized_snr_db"]["pq_avg"].get<double>()
                  << " dB)";
    }
    std::cout << '\n';
}

IdentificationResult cmd_identify(const IdentifyCmd& cmd) {
    const auto t0 = std::chrono::steady_clock::now();

    const MeasurementSeries raw = read_series_csv(cmd.data_csv);
    const MeasurementSeries data =
        cmd.apply_filter ? lowpass_filter(raw, cmd.cutoff_hz) : raw;

    SystemConfig cfg = cmd.cfg;
    cfg.dt = data.grid_dt();

    FeasibleRegion region = feasible_region_from_data(data);
    region.literal_stability = cmd.literal_stability;

    IdentificationResult result =
        minimize(data, region, cmd.solver, cmd.policy, cfg);
    result.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();

    if (!cmd.out_json.empty()) write_json_file(cmd.out_json, to_json(result));
    if (!cmd.quiet) {
        std::cout << "d_opt = [" << result.d_opt.a << ", " << result.d_opt.b
                  << ", " << result.d_opt.h2 << ", " << result.d_opt.tm
                  << "], OF = " << result.of_opt << ", " << result.starts.size()
                  << " starts, " << result.elapsed_seconds << " s\n";
    }
    return result;
}

ValidationReport cmd_validate(const ValidateCmd& cmd) {
    const CompositeLoad actual = read_model_json(cmd.actual_model_json);
    const CompositeLoad identified = read_model_json(cmd.identified_model_json);
    const ValidationReport report =
        validate_identified(actual, identified, cmd.fault, cmd.base, cmd.cfg);
    if (!cmd.out_json.empty()) write_json_file(cmd.out_json, to_json(report));
    std::cout << "FD = " << report.fd << " (P: " << report.fd_p
              << ", Q: " << report.fd_q << ")\n";
    return report;
}

namespace {

/// Identify-style preprocessing shared by the analysis commands.
MeasurementSeries load_window(const std::filesystem::path& csv, bool filter,
                              double cutoff_hz) {
    const MeasurementSeries raw = read_series_csv(csv);
    return filter ? lowpass_filter(raw, cutoff_hz) : raw;
}

} // namespace

QConvexReport cmd_qconvex(const QconvexCmd& cmd) {
    if (cmd.n_pairs == 0) throw ValidationError("--pairs must be >= 1");
    const MeasurementSeries data = load_window(cmd.data_csv, true, 2.0);
    SystemConfig cfg = cmd.cfg;
    cfg.dt = data.grid_dt();
    FeasibleRegion region = feasible_region_from_data(data);
    region.literal_stability = cmd.literal_stability;

    const QConvexReport report = quasiconvexity_test(
        data, region, cmd.n_pairs, cmd.seed, cmd.policy, cfg);
    if (!cmd.out_json.empty()) write_json_file(cmd.out_json, to_json(report));
    std::cout << "quasi-convexity SP = " << report.sp_percent() << "% over "
              << report.n_pairs << " pairs (" << report.n_resampled
              << " resampled)\n";
    return report;
}

ReliabilityReport cmd_reliability(const ReliabilityCmd& cmd) {
    if (cmd.n_starts == 0) throw ValidationError("--starts must be >= 1");
    const MeasurementSeries data = load_window(cmd.data_csv, true, 2.0);
    SystemConfig cfg = cmd.cfg;
    cfg.dt = data.grid_dt();
    FeasibleRegion region = feasible_region_from_data(data);
    region.literal_stability = cmd.literal_stability;

    const ReliabilityReport report = reliability_test(
        data, region, cmd.n_starts, cmd.seed, cmd.policy, cfg, cmd.solver);
    if (!cmd.out_json.empty()) write_json_file(cmd.out_json, to_json(report));
    std::cout << "reliability SP = " << report.sp_percent << "% over "
              << report.n_starts << " starts (signed-sum metric: "
              << report.sp_signed_percent << "%)\n";
    return report;
}

LandscapeGrid cmd_landscape(const LandscapeCmd& cmd) {
    const MeasurementSeries data = load_window(cmd.data_csv, true, 2.0);
    SystemConfig cfg = cmd.cfg;
    cfg.dt = data.grid_dt();
    FeasibleRegion region = feasible_region_from_data(data);
    region.literal_stability = cmd.literal_stability;

    IMParamsTransformed center;
    if (cmd.center.has_value()) {
        center = *cmd.center;
    } else if (!cmd.center_file.empty()) {
        const CompositeLoad model = read_model_json(cmd.center_file);
        if (model.physical_mode()) {
            center = transform_params(std::get<IMParamsPhysical>(model.motor));
        } else {
            center = std::get<IMParamsTransformed>(model.motor);
        }
    } else {
        throw ValidationError("landscape needs --center or --center-file");
    }

    const IMParamsTransformed d1 =
        cmd.d1.has_value() ? *cmd.d1
                           : sample_feasible(region, derive_seed(cmd.seed, 101));
    const IMParamsTransformed d2 =
        cmd.d2.has_value() ? *cmd.d2
                           : sample_feasible(region, derive_seed(cmd.seed, 102));

    const LandscapeGrid grid = landscape_slice(data, center, d1, d2, cmd.k1,
                                               cmd.k2, region, cmd.policy, cfg);
    write_landscape_csv(cmd.out_csv, grid);
    std::cout << "wrote " << grid.k1.count << "x" << grid.k2.count
              << " landscape grid to " << cmd.out_csv.string() << '\n';
    return grid;
}

} // namespace loadid::cli
