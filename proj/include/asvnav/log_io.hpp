#pragma once

#include <string>

#include "asvnav/planner.hpp"

namespace asv {

// Trajectory CSV layout: one '#' metadata comment line, then a header whose
// first token is the schema tag (that column carries the step index), then
// one row per record. Numbers use %.9g.
void write_log(const TrajectoryLog& log, const std::string& path);
TrajectoryLog read_log(const std::string& path);

// Side-by-side comparison CSV: per-run summary comment lines followed by
// step-aligned position/clearance columns for each run.
void write_comparison(const ComparisonReport& report, const std::vector<TrajectoryLog>& logs,
                      const std::string& path);

}  // namespace asv
