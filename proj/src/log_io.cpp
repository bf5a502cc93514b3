#include "asvnav/log_io.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace asv {

namespace {

constexpr const char* kSchemaTag = "asvlog_v1";
constexpr const char* kCompTag = "asvcmp_v1";

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, sep)) out.push_back(tok);
  if (!line.empty() && line.back() == sep) out.push_back("");
  return out;
}

}  // namespace

void write_log(const TrajectoryLog& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open log file for writing: " + path);

  const std::size_t n_o = log.records.empty() ? 0 : log.records.front().h_obstacles.size();
  const std::size_t n_b = log.records.empty() ? 0 : log.records.front().h_borders.size();

  char meta[256];
  std::snprintf(meta, sizeof(meta),
                "# scenario_hash=%016" PRIx64 " variant=%s outcome=%s steps=%d arrival_time=%s",
                log.scenario_hash, log.variant.c_str(), to_string(log.outcome), log.steps,
                std::isnan(log.arrival_time) ? "nan" : fmt(log.arrival_time).c_str());
  out << meta << "\n";

  out << kSchemaTag
      << ",t,x,y,psi,u,v,r,tau_x,tau_y,tau_n,omega_wx,omega_wy,omega_rx,omega_ry,"
         "stage_cost,objective,kkt,outer_iters,status";
  for (std::size_t i = 0; i < n_o; ++i) out << ",h_o" << i;
  for (std::size_t i = 0; i < n_b; ++i) out << ",h_b" << i;
  out << "\n";

  for (const auto& r : log.records) {
    const Vec6 x = r.state.flat();
    out << r.step << ',' << fmt(r.t);
    for (int i = 0; i < 6; ++i) out << ',' << fmt(x[i]);
    for (int i = 0; i < 3; ++i) out << ',' << fmt(r.tau[i]);
    out << ',' << fmt(r.omega_worst[0]) << ',' << fmt(r.omega_worst[1]);
    out << ',' << fmt(r.omega_realized[0]) << ',' << fmt(r.omega_realized[1]);
    out << ',' << fmt(r.stage_cost) << ',' << fmt(r.objective) << ',' << fmt(r.kkt_residual);
    out << ',' << r.outer_iterations << ',' << r.status;
    for (double h : r.h_obstacles) out << ',' << fmt(h);
    for (double h : r.h_borders) out << ',' << fmt(h);
    out << "\n";
  }
  if (!out) throw IoError("failed while writing log file: " + path);
}

TrajectoryLog read_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open log file: " + path);

  TrajectoryLog log;
  std::string line;

  // metadata comment(s)
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] != '#') break;
    std::stringstream ss(line.substr(1));
    std::string kv;
    while (ss >> kv) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = kv.substr(0, eq);
      const std::string val = kv.substr(eq + 1);
      if (key == "scenario_hash") {
        log.scenario_hash = std::strtoull(val.c_str(), nullptr, 16);
      } else if (key == "variant") {
        log.variant = val;
      } else if (key == "outcome") {
        if (val == "arrived") log.outcome = RunOutcome::arrived;
        else if (val == "aborted") log.outcome = RunOutcome::aborted;
        else log.outcome = RunOutcome::step_cap;
      } else if (key == "steps") {
        log.steps = std::atoi(val.c_str());
      } else if (key == "arrival_time") {
        log.arrival_time = val == "nan" ? std::numeric_limits<double>::quiet_NaN()
                                        : std::atof(val.c_str());
      }
    }
  }

  // header line is in `line` now
  const auto header = split(line, ',');
  if (header.empty() || header.front() != kSchemaTag) {
    throw IoError("log file " + path + " does not start with the expected schema tag");
  }
  std::size_t n_o = 0, n_b = 0;
  for (const auto& col : header) {
    if (col.rfind("h_o", 0) == 0) ++n_o;
    if (col.rfind("h_b", 0) == 0) ++n_b;
  }
  const std::size_t expect = 20 + n_o + n_b;
  if (header.size() != expect) {
    throw IoError("log file " + path + " has an unexpected column count");
  }

  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto tok = split(line, ',');
    if (tok.size() != expect) {
      throw IoError("log file " + path + " has a malformed row: " + line);
    }
    LogRecord r;
    int c = 0;
    r.step = std::atoi(tok[c++].c_str());
    r.t = std::atof(tok[c++].c_str());
    Vec6 x;
    for (int i = 0; i < 6; ++i) x[i] = std::atof(tok[c++].c_str());
    r.state = State::from_flat(x);
    for (int i = 0; i < 3; ++i) r.tau[i] = std::atof(tok[c++].c_str());
    r.omega_worst[0] = std::atof(tok[c++].c_str());
    r.omega_worst[1] = std::atof(tok[c++].c_str());
    r.omega_realized[0] = std::atof(tok[c++].c_str());
    r.omega_realized[1] = std::atof(tok[c++].c_str());
    r.stage_cost = std::atof(tok[c++].c_str());
    r.objective = std::atof(tok[c++].c_str());
    r.kkt_residual = std::atof(tok[c++].c_str());
    r.outer_iterations = std::atoi(tok[c++].c_str());
    r.status = tok[c++];
    for (std::size_t i = 0; i < n_o; ++i) r.h_obstacles.push_back(std::atof(tok[c++].c_str()));
    for (std::size_t i = 0; i < n_b; ++i) r.h_borders.push_back(std::atof(tok[c++].c_str()));
    log.records.push_back(std::move(r));
  }
  return log;
}

void write_comparison(const ComparisonReport& report, const std::vector<TrajectoryLog>& logs,
                      const std::string& path) {
  if (report.runs.size() != logs.size()) {
    throw DimensionError("write_comparison: report and log counts differ");
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot open comparison file for writing: " + path);

  char meta[128];
  std::snprintf(meta, sizeof(meta), "# comparison scenario_hash=%016" PRIx64 " runs=%zu",
                report.scenario_hash, report.runs.size());
  out << meta << "\n";
  for (const auto& run : report.runs) {
    out << "# variant=" << run.variant << " outcome=" << to_string(run.outcome)
        << " steps=" << run.steps << " arrival_time="
        << (std::isnan(run.arrival_time) ? "nan" : fmt(run.arrival_time))
        << " min_h_obstacle=" << fmt(run.min_h_obstacle)
        << " min_h_border=" << fmt(run.min_h_border)
        << " total_stage_cost=" << fmt(run.total_stage_cost) << "\n";
  }

  out << kCompTag;
  for (const auto& run : report.runs) {
    out << ",x_" << run.variant << ",y_" << run.variant << ",min_h_" << run.variant;
  }
  out << "\n";

  std::size_t rows = 0;
  for (const auto& log : logs) rows = std::max(rows, log.records.size());
  for (std::size_t i = 0; i < rows; ++i) {
    out << i;
    for (const auto& log : logs) {
      if (i < log.records.size()) {
        const auto& r = log.records[i];
        double min_h = std::numeric_limits<double>::infinity();
        for (double h : r.h_obstacles) min_h = std::min(min_h, h);
        for (double h : r.h_borders) min_h = std::min(min_h, h);
        out << ',' << fmt(r.state.eta.x) << ',' << fmt(r.state.eta.y) << ','
            << (std::isinf(min_h) ? "inf" : fmt(min_h));
      } else {
        out << ",,,";
      }
    }
    out << "\n";
  }
  if (!out) throw IoError("failed while writing comparison file: " + path);
}

}  // namespace asv
