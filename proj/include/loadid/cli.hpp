#pragma once

#include <array>
#include <filesystem>
#include <optional>

#include "loadid/analysis.hpp"
#include "loadid/io.hpp"

namespace loadid::cli {

/// Disturbance-level multipliers applied to AmbientSpec::noise_std.
double dl_noise_multiplier(int dl);

struct SimulateCmd {
    std::filesystem::path out_csv;
    std::filesystem::path truth_json; ///< optional; empty = skip
    /// Generating load. Physical-mode motors are simulated with the original
    /// equations; the truth file records both forms in that case.
    CompositeLoad model;
    AmbientSpec ambient;
    int dl = 1;
    bool add_noise = false;
    NoiseSpec noise;
    /// Fixed absolute error stds (v, theta, p, q); overrides SNR targeting.
    std::optional<std::array<double, 4>> error_std;
    SystemConfig cfg;
};

/// Writes the measurement CSV plus a truth JSON recording the generating
/// load, the generator settings, and the realized SNRs.
void cmd_simulate(const SimulateCmd& cmd);

struct IdentifyCmd {
    std::filesystem::path data_csv;
    std::filesystem::path out_json; ///< optional; empty = skip
    bool apply_filter = true;
    double cutoff_hz = 2.0;
    WindowPolicy policy;
    SolverOptions solver;
    bool literal_stability = false;
    SystemConfig cfg;
    bool quiet = false;
};

/// Low-pass preprocesses (unless disabled), derives the feasible region from
/// the data, runs the multi-start minimization, and writes the result with
/// per-start diagnostics and wall-clock timing.
IdentificationResult cmd_identify(const IdentifyCmd& cmd);

struct ValidateCmd {
    std::filesystem::path actual_model_json;
    std::filesystem::path identified_model_json;
    std::filesystem::path out_json; ///< optional
    FaultSpec fault;
    AmbientSpec base;
    SystemConfig cfg;
};

ValidationReport cmd_validate(const ValidateCmd& cmd);

struct QconvexCmd {
    std::filesystem::path data_csv;
    std::filesystem::path out_json; ///< optional
    std::size_t n_pairs = 1000;
    std::uint64_t seed = 0;
    WindowPolicy policy;
    bool literal_stability = false;
    SystemConfig cfg;
};

QConvexReport cmd_qconvex(const QconvexCmd& cmd);

struct ReliabilityCmd {
    std::filesystem::path data_csv;
    std::filesystem::path out_json; ///< optional
    std::size_t n_starts = 100;
    std::uint64_t seed = 0;
    WindowPolicy policy;
    SolverOptions solver;
    bool literal_stability = false;
    SystemConfig cfg;
};

ReliabilityReport cmd_reliability(const ReliabilityCmd& cmd);

struct LandscapeCmd {
    std::filesystem::path data_csv;
    std::filesystem::path out_csv;
    /// Slice center; when unset it is read from center_file (an
    /// identification result or model JSON).
    std::optional<IMParamsTransformed> center;
    std::filesystem::path center_file;
    /// Slice anchors; unset anchors are sampled from the feasible region.
    std::optional<IMParamsTransformed> d1;
    std::optional<IMParamsTransformed> d2;
    GridAxis k1;
    GridAxis k2;
    std::uint64_t seed = 0;
    WindowPolicy policy;
    bool literal_stability = false;
    SystemConfig cfg;
};

LandscapeGrid cmd_landscape(const LandscapeCmd& cmd);

} // namespace loadid::cli
