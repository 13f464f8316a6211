#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "loadid/analysis.hpp"
#include "loadid/types.hpp"
#include "loadid/upper_stage.hpp"

namespace loadid {

/// CSV contract: header "t,v,theta,p,q", one row per sample, decimal point,
/// comma separator, values at 17 significant digits so that
/// parse(serialize(x)) == x bitwise for finite doubles.
void write_series_csv(const std::filesystem::path& path,
                      const MeasurementSeries& series);

/// Parses and validates a measurement CSV. Schema errors name the offending
/// column or row. Throws IoError / ValidationError.
MeasurementSeries read_series_csv(const std::filesystem::path& path);

// JSON field names: motor objects use {a, b, h2, tm} (transformed) or
// {x, xp, td0, h2, tm} (physical); static objects use {pz, pi, pp, qz, qi,
// qp}.
nlohmann::json to_json(const IMParamsTransformed& d);
nlohmann::json to_json(const IMParamsPhysical& phys);
nlohmann::json to_json(const ZIPParams& zip);
nlohmann::json to_json(const CompositeLoad& load);
nlohmann::json to_json(const IdentificationResult& result);
nlohmann::json to_json(const QConvexReport& report);
nlohmann::json to_json(const ReliabilityReport& report);
nlohmann::json to_json(const ValidationReport& report);
nlohmann::json to_json(const BatchStats& stats);

IMParamsTransformed transformed_from_json(const nlohmann::json& j);
IMParamsPhysical physical_from_json(const nlohmann::json& j);
ZIPParams zip_from_json(const nlohmann::json& j);
/// Accepts {"motor": {...}, "zip": {...}}; the motor object may be
/// transformed or physical, detected by its keys.
CompositeLoad load_from_json(const nlohmann::json& j);

/// Reads a JSON file that either is a model object or contains one under
/// "model" (truth files and identification results both qualify).
CompositeLoad read_model_json(const std::filesystem::path& path);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path,
                     const nlohmann::json& j);

/// Landscape CSV: one '#' header line carrying the anchors and grid spec,
/// then k1.count rows of k2.count comma-separated log10(OF) values.
void write_landscape_csv(const std::filesystem::path& path,
                         const LandscapeGrid& grid);

} // namespace loadid
