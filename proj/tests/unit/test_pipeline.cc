#include <gtest/gtest.h>

#include <cstdlib>
#include <sys/wait.h>

#include "fixtures.h"
#include "json.hpp"
#include "transit_access/csv.h"
#include "transit_access/pipeline.h"

using namespace transit_access;
using namespace transit_access::testing;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Toyville config with absolute input paths and output under `dir`.
json toyville_json(const fs::path& out) {
  auto j = json::parse(read_text(toyville_dir() / "config.json"));
  auto abs = [](const std::string& p) { return (toyville_dir() / p).string(); };
  for (auto& g : j["gtfs"]) g = abs(g);
  for (auto& [day, p] : j["observations"].items()) p = abs(p);
  j["streets"]["nodes"] = abs(j["streets"]["nodes"]);
  j["streets"]["edges"] = abs(j["streets"]["edges"]);
  j["cells"] = abs(j["cells"]);
  j["schools"] = abs(j["schools"]);
  j["output_dir"] = out.string();
  return j;
}

fs::path write_config(const TempDir& dir, const json& j, const std::string& name = "config.json") {
  auto p = dir / name;
  write_text(p, j.dump(2));
  return p;
}

int cli(const std::string& args) {
  std::string cmd = std::string(TA_CLI) + " " + args + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::string> tree(const fs::path& root) {
  std::vector<std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files.push_back(fs::relative(e.path(), root).generic_string());
  }
  std::sort(files.begin(), files.end());
  return files;
}

// One full run of the toyville study shared by the tests below.
class ToyvilleRun : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir("run");
    auto config = write_config(*dir_, toyville_json(out()));
    status_ = cli("all --config " + config.string());
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }
  static fs::path out() { return dir_->path() / "out"; }

  static TempDir* dir_;
  static int status_;
};

TempDir* ToyvilleRun::dir_ = nullptr;
int ToyvilleRun::status_ = -1;

const std::vector<std::string> kDays{"2025-12-22", "2025-12-23", "2025-12-24", "2025-12-25",
                                     "2025-12-26"};

}  // namespace

TEST(Config, LoadsToyville) {
  auto c = load_config(toyville_dir() / "config.json");
  EXPECT_EQ(c.days.size(), 5u);
  EXPECT_EQ(c.matrix.morning.size(), 5u);
  EXPECT_EQ(c.matrix.evening.size(), 8u);
  EXPECT_EQ(c.matrix.routing.outbound_deadline, hm(8, 40));
  EXPECT_EQ(c.output_dir, toyville_dir() / "out");
  EXPECT_EQ(c.bootstrap_iterations, 1000u);
}

TEST(Config, Rejections) {
  TempDir dir("config");
  auto base = toyville_json(dir / "out");
  auto rejects = [&](json j) {
    auto p = write_config(dir, j);
    EXPECT_THROW(load_config(p), ConfigError) << j.dump();
  };
  auto j = base;
  j["colour"] = "blue";
  rejects(j);
  j = base;
  j["routing"]["slack"] = 5;
  rejects(j);
  j = base;
  j["windows"]["morning"]["shares"] = {0.2, 0.2, 0.2, 0.2, 0.1};
  rejects(j);
  j = base;
  j["percentile"] = "p90";
  rejects(j);
  j = base;
  j["days"] = json::array();
  rejects(j);
  j = base;
  j["thresholds_min"] = {60, -5};
  rejects(j);
  j = base;
  j["routing"]["deadline"] = "8h40";
  rejects(j);
  write_text(dir / "broken.json", "{\"days\": [");
  EXPECT_THROW(load_config(dir / "broken.json"), ConfigError);
  EXPECT_NO_THROW(load_config(write_config(dir, base)));
}

TEST(Config, Overrides) {
  auto c = load_config(toyville_dir() / "config.json");
  ConfigOverrides o;
  o.percentile = Percentile::p50;
  o.seed = 7;
  o.strict_window_exclusion = true;
  apply_overrides(c, o);
  EXPECT_EQ(c.matrix.percentile, Percentile::p50);
  EXPECT_EQ(c.seed, 7u);
  EXPECT_TRUE(c.matrix.strict_window_exclusion);
}

TEST(Cli, ExitCodes) {
  TempDir dir("cli");
  EXPECT_EQ(cli(""), 2);
  EXPECT_EQ(cli("matrix --bogus"), 2);
  EXPECT_EQ(cli("indices"), 2);  // --config is required
  EXPECT_EQ(cli("matrix --config " + (dir / "none.json").string()), 2);

  auto j = toyville_json(dir / "out");
  j["observations"]["2025-12-22"] = (dir / "missing.csv").string();
  auto p = write_config(dir, j);
  EXPECT_EQ(cli("build-actual --day 2025-12-22 --config " + p.string()), 2);
  EXPECT_EQ(cli("matrix --percentile p90 --config " + p.string()), 2);
  EXPECT_EQ(cli("--help"), 0);
}

TEST_F(ToyvilleRun, Succeeds) {
  ASSERT_EQ(status_, 0);
  for (const auto& f : {"access_tables.csv", "delay_stats.csv", "indices/cell_indices.csv",
                        "indices/cell_indices_median.csv", "indices/districts.csv",
                        "indices/gini.csv", "indices/binned.csv",
                        "indices/lucky_catch_summary.csv", "geojson/cells.geojson",
                        "report.md", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(out() / f)) << f;
  }
  for (const auto& d : kDays) {
    EXPECT_TRUE(fs::exists(out() / "actual" / d / "stop_times.txt"));
    EXPECT_TRUE(fs::exists(out() / "lucky_catch" / ("events_" + d + ".csv")));
  }
}

TEST_F(ToyvilleRun, MatricesMatchReferenceEnumeration) {
  ASSERT_EQ(status_, 0);
  auto expected = toyville_dir() / "expected" / "matrix";
  for (const auto& d : kDays) {
    for (const std::string v : {"scheduled_", "actual_"}) {
      auto name = v + d + ".csv";
      EXPECT_EQ(read_text(out() / "matrix" / name), read_text(expected / name)) << name;
    }
  }
}

TEST_F(ToyvilleRun, MedianIndicesMatchReference) {
  ASSERT_EQ(status_, 0);
  auto got = read_index_csv(out() / "indices/cell_indices_median.csv");
  auto want = read_index_csv(toyville_dir() / "expected" / "cell_indices_median.csv");
  ASSERT_EQ(got.size(), want.size());
  ASSERT_EQ(got.size(), 60u);
  for (std::size_t i = 0; i < got.size(); ++i) {
    EXPECT_EQ(got[i].cell, want[i].cell);
    EXPECT_EQ(got[i].threshold, want[i].threshold);
    EXPECT_NEAR(got[i].eco_scheduled, want[i].eco_scheduled, 1e-12) << got[i].cell;
    EXPECT_NEAR(got[i].eco_actual, want[i].eco_actual, 1e-12) << got[i].cell;
    EXPECT_NEAR(got[i].ogl, want[i].ogl, 1e-12) << got[i].cell;
    EXPECT_NEAR(got[i].togl, want[i].togl, 1e-9) << got[i].cell;
  }
}

TEST_F(ToyvilleRun, ThresholdMonotonicityAndDistricts) {
  ASSERT_EQ(status_, 0);
  auto rows = read_index_csv(out() / "indices/cell_indices.csv");
  std::map<std::pair<std::string, std::string>, std::map<double, double>> eco;
  for (const auto& r : rows) eco[{r.cell, r.day}][r.threshold] = r.eco_scheduled;
  EXPECT_EQ(eco.size(), 100u);
  for (const auto& [key, by_t] : eco) {
    EXPECT_LE(by_t.at(3600), by_t.at(5400));
    EXPECT_LE(by_t.at(5400), by_t.at(7200));
  }
  auto t = CsvTable::read(out() / "indices/districts.csv");
  ASSERT_EQ(t.rows().size(), 6u);
  for (const auto& row : t.rows()) {
    double p50 = *parse_double(t.get(row, t.require_column("p50_eco")));
    double p75 = *parse_double(t.get(row, t.require_column("p75_eco")));
    EXPECT_LE(p75, p50);
  }
}

TEST_F(ToyvilleRun, GeojsonPolygons) {
  ASSERT_EQ(status_, 0);
  auto g = json::parse(read_text(out() / "geojson/cells.geojson"));
  EXPECT_EQ(g["type"], "FeatureCollection");
  ASSERT_EQ(g["features"].size(), 20u);
  for (const auto& f : g["features"]) {
    const auto& ring = f["geometry"]["coordinates"][0];
    ASSERT_EQ(ring.size(), 5u);
    EXPECT_EQ(ring.front(), ring.back());
    EXPECT_TRUE(f["properties"].contains("eco_sched_60"));
    EXPECT_TRUE(f["properties"].contains("togl_120"));
    EXPECT_TRUE(f["properties"]["pt_desert"].is_boolean());
  }
}

TEST_F(ToyvilleRun, ReportAndManifest) {
  ASSERT_EQ(status_, 0);
  auto r = read_text(out() / "report.md");
  for (const char* heading :
       {"# Accessibility report", "## ECO population distribution", "## PT Deserts",
        "## District ECO percentiles", "## Gini index of ECO", "## Lucky Catch",
        "## OGL range"}) {
    EXPECT_NE(r.find(heading), std::string::npos) << heading;
  }
  auto m = json::parse(read_text(out() / "manifest.json"));
  EXPECT_EQ(m["config_hash"].get<std::string>().size(), 64u);
  EXPECT_FALSE(m["inputs"].empty());
  EXPECT_TRUE(m["outputs"].contains("report.md"));
  EXPECT_EQ(m["outputs"]["report.md"], sha256_file(out() / "report.md"));
}

TEST_F(ToyvilleRun, RerunIsByteIdentical) {
  ASSERT_EQ(status_, 0);
  TempDir again("rerun");
  auto config = write_config(again, toyville_json(again / "out"));
  ASSERT_EQ(cli("all --config " + config.string()), 0);
  auto files = tree(out());
  ASSERT_EQ(files, tree(again / "out"));
  for (const auto& f : files) {
    if (f == "manifest.json") continue;
    EXPECT_EQ(read_text(out() / f), read_text(again / "out" / f)) << f;
  }
}

TEST(Pipeline, MedianNeverBelowQuartile) {
  TempDir dir("pct");
  auto j = toyville_json(dir / "p25");
  auto p25 = write_config(dir, j, "p25.json");
  j["output_dir"] = (dir / "p50").string();
  auto p50 = write_config(dir, j, "p50.json");
  ASSERT_EQ(cli("matrix --variant scheduled --day 2025-12-22 --config " + p25.string()), 0);
  ASSERT_EQ(cli("matrix --variant scheduled --day 2025-12-22 --percentile p50 --config " +
                p50.string()),
            0);
  auto a = read_matrix_csv(dir / "p25/matrix/scheduled_2025-12-22.csv");
  auto b = read_matrix_csv(dir / "p50/matrix/scheduled_2025-12-22.csv");
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t w = 0; w < a[i].outbound.size(); ++w) {
      if (a[i].outbound[w].duration && b[i].outbound[w].duration) {
        EXPECT_LE(*a[i].outbound[w].duration, *b[i].outbound[w].duration);
      }
    }
    EXPECT_EQ(a[i].t_ik.has_value(), b[i].t_ik.has_value());
  }
  EXPECT_FALSE(fs::exists(dir / "p25/matrix/actual_2025-12-22.csv"));
}

TEST(Pipeline, ZeroDelayDayLeavesIndicesUnchanged) {
  TempDir dir("zero");
  auto j = toyville_json(dir / "out");
  write_text(dir / "empty.csv",
             "poll_time,vehicle_id,route_id,prev_stop_id,next_stop_id,prev_departure,delay_s\n");
  j["observations"] = {{"2025-12-22", (dir / "empty.csv").string()}};
  j["days"] = {"2025-12-22"};
  auto config = write_config(dir, j);
  ASSERT_EQ(cli("all --config " + config.string()), 0);
  auto s = read_matrix_csv(dir / "out/matrix/scheduled_2025-12-22.csv");
  auto a = read_matrix_csv(dir / "out/matrix/actual_2025-12-22.csv");
  ASSERT_EQ(s.size(), a.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_EQ(s[i].t_ik, a[i].t_ik);
    EXPECT_EQ(s[i].outbound, a[i].outbound);
    EXPECT_EQ(s[i].inbound, a[i].inbound);
  }
  for (const auto& r : read_index_csv(dir / "out/indices/cell_indices.csv")) {
    EXPECT_EQ(r.ogl, 0.0);
    EXPECT_EQ(r.eco_actual, r.eco_scheduled);
  }
  EXPECT_EQ(read_text(dir / "out/lucky_catch/events_2025-12-22.csv").find('\n') + 1,
            read_text(dir / "out/lucky_catch/events_2025-12-22.csv").size());
}
