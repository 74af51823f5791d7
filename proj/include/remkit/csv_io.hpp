#pragma once

#include "remkit/propagation.hpp"
#include "remkit/shadow_stats.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace remkit {

inline constexpr const char* kMeasurementHeader = "seq,lat_deg,lon_deg,alt_m,rsrp_dbm";
inline constexpr const char* kPatternHeader = "az_deg,el_deg,gain_dbi";
inline constexpr const char* kDeltaHeader = "az_deg,el_deg,delta_db,support";

/// Shortest decimal text that round-trips to the same double.
std::string format_number(double x);

/// Throws ParseError (with 1-based line number) on malformed rows and
/// RangeError on out-of-range coordinates. Blank lines are skipped.
std::vector<Measurement> read_measurements(std::istream& in);
std::vector<Measurement> read_measurements(const std::filesystem::path& path);
void write_measurements(std::ostream& out, std::span<const Measurement> rows);
void write_measurements(const std::filesystem::path& path, std::span<const Measurement> rows);

/// Long-format pattern, one row per (az, el) node; every combination of the
/// listed azimuths and elevations must be present exactly once.
AntennaPattern read_pattern(std::istream& in);
AntennaPattern read_pattern(const std::filesystem::path& path);
void write_pattern(std::ostream& out, const AntennaPattern& pattern);

CalibratedDelta read_delta(std::istream& in, int min_support = 25);
CalibratedDelta read_delta(const std::filesystem::path& path, int min_support = 25);
void write_delta(std::ostream& out, const CalibratedDelta& delta);
void write_delta(const std::filesystem::path& path, const CalibratedDelta& delta);

/// Plain comma-separated matrix, one row per line, no header.
void write_matrix(std::ostream& out, const Eigen::MatrixXd& m);
void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m);

} // namespace remkit
