#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "foxh/analysis.hpp"
#include "foxh/gfhp.hpp"

namespace foxh {

inline constexpr const char* kSchemaVersion = "1.0";

struct ProcessBlock {
  WrightParams params;
  std::optional<ClassTag> class_tag;
  FactorDecomposition decomp;
  double hurst = 0.5;
};

struct RunConfig {
  ProcessBlock process;
  TimeGrid grid;
  std::size_t n_paths = 1000;
  std::uint64_t seed = 0;
  SimMode mode = SimMode::Scale;
  Generator generator = Generator::Circulant;
  std::string out_dir = ".";
  std::vector<std::string> formats{"csv"};
};

/// Structural parsing only; throws Error(SchemaError) for malformed input,
/// unknown schema major versions, or an invalid grid/ensemble block.
RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& config);

/// Domain validation: admissibility of the parameters, decomposition moments
/// and H. Throws the corresponding domain Error.
GfhpConfig build_config(const ProcessBlock& process);

nlohmann::json to_json(const WrightParams& params);
nlohmann::json to_json(const FactorDecomposition& decomp);
nlohmann::json to_json(const DerivedConstants& constants);
nlohmann::json to_json(const MomentMatchReport& report);
nlohmann::json to_json(const BermanReport& report);
nlohmann::json to_json(const MsdReport& report);
nlohmann::json to_json(const LocalTimeEstimate& est);

/// Shortest round-trip decimal form ('.' separator, locale independent).
std::string format_double(double value);

/// Parses a decimal number; nullopt unless the whole field is consumed.
std::optional<double> parse_double(std::string_view text);

/// CSV with header "t,path_0,...,path_{n-1}", one row per grid time, LF endings.
void write_trajectory_csv(std::ostream& out, const TrajectorySet& trajs);

/// Sidecar describing a trajectory file.
nlohmann::json trajectory_sidecar(const RunConfig& config, const TrajectorySet& trajs);

struct TrajectoryFile {
  RunConfig config;
  TrajectorySet trajs;
};

/// Reads `csv` and its sidecar (same stem, .json). Throws Error(SchemaError)
/// on any layout violation.
TrajectoryFile read_trajectory_file(const std::filesystem::path& csv);

std::filesystem::path sidecar_path(const std::filesystem::path& csv);

/// Log-log MSD plot with the fitted slope annotated.
std::string msd_svg(const MsdReport& report, double hurst);

}  // namespace foxh
