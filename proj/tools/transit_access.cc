#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "transit_access/pipeline.h"

using namespace transit_access;

namespace {

constexpr int kOk = 0;
constexpr int kInternal = 1;
constexpr int kBadInput = 2;

struct Options {
  std::string config;
  std::string day;
  std::string variant;
  std::string percentile;
  std::optional<std::uint64_t> seed;
  bool strict = false;
  std::string fill;
  std::string desert;
  std::string direction;
};

ConfigOverrides overrides(const Options& o) {
  ConfigOverrides x;
  if (!o.percentile.empty()) x.percentile = parse_percentile(o.percentile);
  x.seed = o.seed;
  x.strict_window_exclusion = o.strict;
  if (o.fill == "scheduled") x.fill_unobserved = FillUnobserved::scheduled;
  if (o.fill == "route-median") x.fill_unobserved = FillUnobserved::route_median;
  if (o.desert == "radius") x.desert_metric = DesertMetric::radius;
  if (o.desert == "network") x.desert_metric = DesertMetric::network;
  if (!o.direction.empty()) x.percentile_direction = parse_percentile_direction(o.direction);
  return x;
}

std::vector<Date> selected_days(const Options& o, const StudyConfig& config) {
  if (o.day.empty()) return config.days;
  auto d = parse_date(o.day);
  if (!d) throw ConfigError("bad --day " + o.day);
  return {*d};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"School accessibility under scheduled and actual transit operations"};
  app.require_subcommand(1);
  Options o;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "Study configuration (JSON)")->required();
    sub->add_option("--percentile", o.percentile, "Representative travel time")
        ->check(CLI::IsMember({"p25", "p50"}));
    sub->add_option("--seed", o.seed, "Bootstrap seed");
    sub->add_flag("--strict-window-exclusion", o.strict,
                  "Any infeasible window makes the pair unreachable");
    sub->add_option("--fill-unobserved", o.fill, "Timing of unobserved trips")
        ->check(CLI::IsMember({"scheduled", "route-median"}));
    sub->add_option("--desert-metric", o.desert, "PT desert distance")
        ->check(CLI::IsMember({"radius", "network"}));
    sub->add_option("--percentile-direction", o.direction,
                    "District percentile definition")
        ->check(CLI::IsMember({"attains", "below"}));
  };
  auto* build = app.add_subcommand("build-actual", "Synthesize actual-operations GTFS");
  auto* matrix = app.add_subcommand("matrix", "Round-trip travel-time matrices");
  auto* indices = app.add_subcommand("indices", "ECO, OGL, TOGL, district and Gini tables");
  auto* geojson = app.add_subcommand("geojson", "Cell polygons with index properties");
  auto* report = app.add_subcommand("report", "Markdown summary");
  auto* all = app.add_subcommand("all", "Every stage in order");
  for (auto* sub : {build, matrix, indices, geojson, report, all}) common(sub);
  for (auto* sub : {build, matrix}) {
    sub->add_option("--day", o.day, "Single day (YYYY-MM-DD); default all days");
  }
  matrix->add_option("--variant", o.variant, "scheduled or actual; default both")
      ->check(CLI::IsMember({"scheduled", "actual"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kBadInput;
  }

  try {
    auto config = load_config(o.config);
    apply_overrides(config, overrides(o));
    Study study(config, sha256_hex(canonical_config(o.config)));
    study.record_inputs();
    if (*build) {
      for (Date d : selected_days(o, config)) cmd_build_actual(study, d);
    } else if (*matrix) {
      for (Date d : selected_days(o, config)) cmd_matrix(study, d, o.variant != "scheduled");
    } else if (*indices) {
      cmd_indices(study);
    } else if (*geojson) {
      cmd_geojson(study);
    } else if (*report) {
      cmd_report(study);
    } else if (*all) {
      cmd_all(study);
    }
    for (const auto& w : study.diagnostics().warnings) std::cerr << "warning: " << w << '\n';
    study.write_manifest();
    return kOk;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadInput;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kBadInput;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternal;
  }
}
