#pragma once

#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "transit_access/indices.h"
#include "transit_access/router.h"

namespace transit_access {

enum class CatchKind { new_transfer, alternative_route, reduced_wait };
std::string_view to_string(CatchKind k);

struct LuckyCatchEvent {
  std::string cell;
  std::string school;
  std::string day;
  Direction direction = Direction::outbound;
  std::size_t window = 0;  // 0-based within the direction's window set
  Seconds minute = 0;
  Itinerary scheduled;
  Itinerary actual;
  Seconds saved = 0;
  CatchKind kind = CatchKind::reduced_wait;
};

// Structural comparison of two itineraries for the same departure minute.
// A two-ride actual itinerary whose connection misses under the scheduled
// timetable (connector departs before feeder arrival + walk + slack) is a
// new transfer; otherwise a changed route set is an alternative route.
CatchKind classify(const Itinerary& scheduled, const Itinerary& actual,
                   const TransitNetwork& scheduled_network,
                   Seconds transfer_slack);

struct CatchInputs {
  const TransitNetwork& scheduled_network;
  const AccessIndex& scheduled_access;
  const TransitNetwork& actual_network;
  const AccessIndex& actual_access;
  const MatrixSpec& spec;
};

// Events for one OD pair: every departure minute where both variants are
// feasible and the actual duration is shorter.
std::vector<LuckyCatchEvent> detect(const CatchInputs& in,
                                    const std::string& cell,
                                    const std::string& school,
                                    const OdProfiles& scheduled,
                                    const OdProfiles& actual,
                                    const std::string& day);

// All OD pairs of two matrices built over the same cells and schools.
std::vector<LuckyCatchEvent> detect_all(const CatchInputs& in,
                                        const MatrixResult& scheduled,
                                        const MatrixResult& actual,
                                        const std::string& day);

struct CatchSummaryRow {
  std::string district;
  std::size_t new_transfer = 0;
  std::size_t alternative_route = 0;
  std::size_t reduced_wait = 0;
  std::size_t positive_ogl_cells = 0;
  double max_positive_ogl = 0;
};

// One row per district with at least one event, sorted by district.
// `index_rows` (typically median rows) supply the OGL gains.
std::vector<CatchSummaryRow> summarize(std::span<const LuckyCatchEvent> events,
                                       std::span<const Cell> cells,
                                       std::span<const CellIndexRow> index_rows);

void write_events_csv(std::span<const LuckyCatchEvent> events, std::ostream& out);
void write_catch_summary_csv(std::span<const CatchSummaryRow> rows,
                             std::ostream& out);

}  // namespace transit_access
