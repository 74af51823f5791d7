#pragma once

#include "remkit/harness.hpp"
#include "remkit/scene.hpp"

#include <json.hpp>

#include <filesystem>
#include <vector>

namespace remkit {

// Relative file references inside documents (pattern or delta CSVs) resolve
// against `base_dir`. Malformed documents raise ValidationError.

nlohmann::json to_json(const GeoPoint& p);
GeoPoint geo_point_from_json(const nlohmann::json& j);

nlohmann::json to_json(const CorrelationModel& m);
CorrelationModel correlation_from_json(const nlohmann::json& j);

nlohmann::json to_json(const CorrelationTable& t);

/// Named patterns ("isotropic", "half_wave_dipole") serialize as strings,
/// others inline as {"az_deg", "el_deg", "gain_dbi"}. A string that is not a
/// known name is read as a pattern CSV path.
nlohmann::json to_json(const AntennaPattern& p);
AntennaPattern pattern_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});

nlohmann::json to_json(const CalibratedDelta& d);
/// Accepts an inline table, {"bin_deg", "sectors": [...]}, or {"csv": path}.
CalibratedDelta delta_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});

nlohmann::json to_json(const PropagationConfig& c);
/// Missing keys keep the values already in `into`.
void apply_json(PropagationConfig& into, const nlohmann::json& j, const std::filesystem::path& base_dir = {});

nlohmann::json to_json(const SceneSpec& s);
SceneSpec scene_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});

/// Each entry: {"kind", "center", "altitudes_m" or "altitude_m", "spacing_m", ...shape fields}.
/// A multi-altitude entry yields one trajectory per altitude.
std::vector<Trajectory> trajectories_from_json(const nlohmann::json& j);

nlohmann::json to_json(const EvalConfig& c);
void apply_json(EvalConfig& into, const nlohmann::json& j, const std::filesystem::path& base_dir = {});

nlohmann::json to_json(const EvaluationReport& r);

nlohmann::json read_json_file(const std::filesystem::path& path);

} // namespace remkit
