#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "transit_access/common.h"
#include "transit_access/delay.h"
#include "transit_access/gtfs.h"
#include "transit_access/indices.h"
#include "transit_access/lucky_catch.h"
#include "transit_access/router.h"
#include "transit_access/street.h"

namespace transit_access {

enum class DesertMetric { radius, network };

struct StudyConfig {
  std::filesystem::path base_dir;  // relative paths resolve against this
  std::vector<std::filesystem::path> gtfs_dirs;
  std::map<std::string, std::filesystem::path> observations;  // by date
  std::filesystem::path street_nodes;
  std::filesystem::path street_edges;
  std::filesystem::path cells;
  std::filesystem::path schools;
  std::filesystem::path output_dir;
  std::vector<Date> days;
  std::vector<double> thresholds_min = {60, 90, 120};
  MatrixSpec matrix;
  AccessParams access;
  MatchOptions match;
  SynthesisOptions synthesis;
  PercentileDirection percentile_direction = PercentileDirection::attains;
  std::size_t bootstrap_iterations = 1000;
  std::uint64_t seed = 42;
  BootstrapDesign bootstrap_design = BootstrapDesign::cells;
  DesertMetric desert_metric = DesertMetric::radius;
  DesertRadii desert;
  double grid_size_m = 250;
};

// Reads a JSON study configuration. Throws ConfigError on unknown keys,
// bad values or violated invariants.
StudyConfig load_config(const std::filesystem::path& path);
// Canonical JSON text of the parsed configuration file.
std::string canonical_config(const std::filesystem::path& path);
void validate_config(const StudyConfig& config);

struct ConfigOverrides {
  std::optional<Percentile> percentile;
  std::optional<std::uint64_t> seed;
  bool strict_window_exclusion = false;
  std::optional<FillUnobserved> fill_unobserved;
  std::optional<DesertMetric> desert_metric;
  std::optional<PercentileDirection> percentile_direction;
};
void apply_overrides(StudyConfig& config, const ConfigOverrides& overrides);

struct StageTiming {
  std::string stage;
  double seconds = 0;
};

struct RunManifest {
  std::string config_hash;
  std::map<std::string, std::string> input_digests;  // path -> sha256
  std::vector<StageTiming> timings;
  std::vector<std::string> warnings;
  std::map<std::string, std::string> output_digests;
};

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

// Inputs and intermediate products of one study, loaded on first use.
class Study {
 public:
  Study(StudyConfig config, std::string config_hash);
  ~Study();

  const StudyConfig& config() const { return config_; }
  Diagnostics& diagnostics() { return diagnostics_; }
  RunManifest& manifest() { return manifest_; }

  const TimetableFeed& scheduled_feed();
  const StreetGraph& streets();
  const std::vector<Cell>& cells();
  const std::vector<School>& schools();
  const AccessTables& access_tables();
  std::vector<std::string> cell_ids();
  std::vector<std::string> school_ids();

  std::filesystem::path out(const std::filesystem::path& relative) const;
  std::filesystem::path actual_feed_dir(Date day) const;
  std::filesystem::path matrix_path(Date day, bool actual) const;
  std::filesystem::path events_path(Date day) const;

  // Records a written file in the manifest.
  void wrote(const std::filesystem::path& path);
  void record_inputs();
  void write_manifest();

 private:
  struct Cache;
  StudyConfig config_;
  Diagnostics diagnostics_;
  RunManifest manifest_;
  std::unique_ptr<Cache> cache_;
};

// Writes out/actual/<day>/ (GTFS) and out/delay_stats_<day>.csv. Throws
// InputError if the synthesized feed fails validation.
SynthesisResult cmd_build_actual(Study& study, Date day);
// Writes out/matrix/scheduled_<day>.csv, and for the actual variant also
// out/matrix/actual_<day>.csv and out/lucky_catch/events_<day>.csv.
void cmd_matrix(Study& study, Date day, bool actual);
// Reads the matrices of every configured day and writes out/indices/.
void cmd_indices(Study& study);
void cmd_geojson(Study& study);
void cmd_report(Study& study);
void cmd_all(Study& study);

// Pure helpers shared by the commands.
bool is_pt_desert(Study& study, const Cell& cell);
std::string cells_geojson(const std::vector<Cell>& cells,
                          const std::vector<CellIndexRow>& median_rows,
                          const std::vector<bool>& pt_desert,
                          double grid_size_m);

}  // namespace transit_access
