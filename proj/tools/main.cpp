#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "asvnav/log_io.hpp"
#include "asvnav/planner.hpp"
#include "asvnav/scenario.hpp"

namespace {

using namespace asv;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitAborted = 2;
constexpr int kExitSafety = 3;
constexpr int kExitUsage = 64;

double min_barrier(const TrajectoryLog& log) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& r : log.records) {
    for (double h : r.h_obstacles) m = std::min(m, h);
    for (double h : r.h_borders) m = std::min(m, h);
  }
  return m;
}

void print_summary(const TrajectoryLog& log) {
  const auto& last = log.records.back();
  std::printf("variant=%s outcome=%s steps=%d", log.variant.c_str(), to_string(log.outcome),
              log.steps);
  if (log.outcome == RunOutcome::arrived) std::printf(" arrival_time=%.9gs", log.arrival_time);
  std::printf(" final=(%.9g, %.9g) min_h=%.9g\n", last.state.eta.x, last.state.eta.y,
              min_barrier(log));
}

int run_one(const ScenarioConfig& cfg, ControllerVariant variant, const std::string& output) {
  const auto t0 = std::chrono::steady_clock::now();
  const TrajectoryLog log = run_closed_loop(cfg, variant);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_log(log, output);
  print_summary(log);
  std::printf("wrote %s (%.1fs)\n", output.c_str(), secs);

  if (log.outcome == RunOutcome::aborted) return kExitAborted;
  if (variant != ControllerVariant::mpc_nominal && min_barrier(log) < -1e-5) {
    std::fprintf(stderr, "safety violation: barrier dipped to %.9g during a robust run\n",
                 min_barrier(log));
    return kExitSafety;
  }
  return kExitOk;
}

// ---- figure emission ------------------------------------------------------

void write_plot_prelude(std::ofstream& py) {
  py << "#!/usr/bin/env python3\n"
     << "import csv\n"
     << "import math\n"
     << "import sys\n"
     << "import matplotlib\n"
     << "matplotlib.use('Agg')\n"
     << "import matplotlib.pyplot as plt\n\n"
     << "def read_rows(path):\n"
     << "    with open(path) as fh:\n"
     << "        rows = [r for r in csv.reader(fh) if r and not r[0].startswith('#')]\n"
     << "    header, data = rows[0], rows[1:]\n"
     << "    def col(name):\n"
     << "        i = header.index(name)\n"
     << "        return [float(r[i]) if r[i] not in ('', 'nan', 'inf') else math.nan for r in data]\n"
     << "    return header, data, col\n\n";
}

void emit_geometry(std::ofstream& py, const ScenarioConfig& cfg) {
  py << "obstacles = [";
  for (const auto& o : cfg.obstacles) {
    py << "(" << o.x << ", " << o.y << ", " << o.radius << ", " << o.radius + cfg.vessel.r_a
       << "), ";
  }
  py << "]\n";
  py << "borders = [";
  for (const auto& b : cfg.borders) py << "(" << b.a << ", " << b.b << ", " << b.c << "), ";
  py << "]\n";
  py << "goal = (" << cfg.goal[0] << ", " << cfg.goal[1] << ")\n\n";
}

void figure_trajectories(const ScenarioConfig& cfg, const std::vector<TrajectoryLog>& logs,
                         const std::string& dir) {
  const std::string csv_path = dir + "/fig_trajectories.csv";
  write_comparison(compare_runs(logs), logs, csv_path);

  std::ofstream py(dir + "/plot_trajectories.py");
  write_plot_prelude(py);
  emit_geometry(py, cfg);
  py << "header, data, col = read_rows('fig_trajectories.csv')\n"
     << "fig, ax = plt.subplots(figsize=(10, 3.2))\n"
     << "for name in [c[2:] for c in header if c.startswith('x_')]:\n"
     << "    ax.plot(col('x_' + name), col('y_' + name), label=name)\n"
     << "for (ox, oy, r, ri) in obstacles:\n"
     << "    ax.add_patch(plt.Circle((ox, oy), r, color='0.4'))\n"
     << "    ax.add_patch(plt.Circle((ox, oy), ri, fill=False, ls='--', color='0.4'))\n"
     << "for (a, b, c) in borders:\n"
     << "    if abs(b) > 1e-9:\n"
     << "        ax.axhline(-c / b, color='k')\n"
     << "ax.plot(*goal, 'r*', ms=12)\n"
     << "ax.set_aspect('equal'); ax.legend(); ax.set_xlabel('x [m]'); ax.set_ylabel('y [m]')\n"
     << "plt.tight_layout(); plt.savefig('fig_trajectories.png', dpi=160)\n"
     << "print('wrote fig_trajectories.png')\n";
  std::printf("wrote %s and plot_trajectories.py\n", csv_path.c_str());
}

void figure_barriers(const std::vector<TrajectoryLog>& logs, const std::string& dir) {
  // long-format CSV: variant, t, barrier name, value
  const std::string csv_path = dir + "/fig_barriers.csv";
  std::ofstream out(csv_path);
  out << "variant,t,barrier,h\n";
  for (const auto& log : logs) {
    for (const auto& r : log.records) {
      for (std::size_t i = 0; i < r.h_obstacles.size(); ++i) {
        out << log.variant << ',' << r.t << ",h_o" << i << ',' << r.h_obstacles[i] << "\n";
      }
      for (std::size_t i = 0; i < r.h_borders.size(); ++i) {
        out << log.variant << ',' << r.t << ",h_b" << i << ',' << r.h_borders[i] << "\n";
      }
    }
  }
  out.close();

  std::ofstream py(dir + "/plot_barriers.py");
  py << "#!/usr/bin/env python3\n"
     << "import csv\n"
     << "from collections import defaultdict\n"
     << "import matplotlib\n"
     << "matplotlib.use('Agg')\n"
     << "import matplotlib.pyplot as plt\n\n"
     << "series = defaultdict(lambda: ([], []))\n"
     << "with open('fig_barriers.csv') as fh:\n"
     << "    for row in csv.DictReader(fh):\n"
     << "        key = (row['variant'], row['barrier'])\n"
     << "        series[key][0].append(float(row['t']))\n"
     << "        series[key][1].append(float(row['h']))\n"
     << "variants = sorted({k[0] for k in series})\n"
     << "fig, axes = plt.subplots(len(variants), 1, figsize=(9, 3 * len(variants)), squeeze=False)\n"
     << "for ax, variant in zip(axes[:, 0], variants):\n"
     << "    for (v, name), (t, h) in sorted(series.items()):\n"
     << "        if v == variant:\n"
     << "            ax.plot(t, h, label=name)\n"
     << "    ax.axhline(0.0, color='k', lw=0.8)\n"
     << "    ax.set_title(variant); ax.set_xlabel('t [s]'); ax.set_ylabel('h'); ax.legend()\n"
     << "plt.tight_layout(); plt.savefig('fig_barriers.png', dpi=160)\n"
     << "print('wrote fig_barriers.png')\n";
  std::printf("wrote %s and plot_barriers.py\n", csv_path.c_str());
}

void figure_border_comparison(const std::vector<TrajectoryLog>& logs, const std::string& dir) {
  const std::string csv_path = dir + "/fig_border_comparison.csv";
  std::ofstream out(csv_path);
  out << "variant,t,min_border_h\n";
  for (const auto& log : logs) {
    for (const auto& r : log.records) {
      double mh = std::numeric_limits<double>::infinity();
      for (double h : r.h_borders) mh = std::min(mh, h);
      out << log.variant << ',' << r.t << ',' << mh << "\n";
    }
  }
  out.close();

  std::ofstream py(dir + "/plot_border_comparison.py");
  py << "#!/usr/bin/env python3\n"
     << "import csv\n"
     << "from collections import defaultdict\n"
     << "import matplotlib\n"
     << "matplotlib.use('Agg')\n"
     << "import matplotlib.pyplot as plt\n\n"
     << "series = defaultdict(lambda: ([], []))\n"
     << "with open('fig_border_comparison.csv') as fh:\n"
     << "    for row in csv.DictReader(fh):\n"
     << "        series[row['variant']][0].append(float(row['t']))\n"
     << "        series[row['variant']][1].append(float(row['min_border_h']))\n"
     << "fig, ax = plt.subplots(figsize=(9, 3))\n"
     << "for variant, (t, h) in sorted(series.items()):\n"
     << "    ax.plot(t, h, label=variant)\n"
     << "ax.axhline(0.0, color='k', lw=0.8)\n"
     << "ax.set_xlabel('t [s]'); ax.set_ylabel('min border h'); ax.legend()\n"
     << "plt.tight_layout(); plt.savefig('fig_border_comparison.png', dpi=160)\n"
     << "print('wrote fig_border_comparison.png')\n";
  std::printf("wrote %s and plot_border_comparison.py\n", csv_path.c_str());
}

void figure_disturbance(const TrajectoryLog& log, const std::string& dir) {
  const std::string csv_path = dir + "/fig_disturbance.csv";
  std::ofstream out(csv_path);
  out << "t,tau_x,tau_y,tau_n,omega_wx,omega_wy,omega_rx,omega_ry\n";
  for (const auto& r : log.records) {
    out << r.t << ',' << r.tau[0] << ',' << r.tau[1] << ',' << r.tau[2] << ','
        << r.omega_worst[0] << ',' << r.omega_worst[1] << ',' << r.omega_realized[0] << ','
        << r.omega_realized[1] << "\n";
  }
  out.close();

  std::ofstream py(dir + "/plot_disturbance.py");
  write_plot_prelude(py);
  py << "header, data, col = read_rows('fig_disturbance.csv')\n"
     << "fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(9, 6), sharex=True)\n"
     << "for name in ('tau_x', 'tau_y', 'tau_n'):\n"
     << "    ax1.plot(col('t'), col(name), label=name)\n"
     << "ax1.set_ylabel('input'); ax1.legend()\n"
     << "ax2.plot(col('t'), col('omega_wx'), label='assumed wx')\n"
     << "ax2.plot(col('t'), col('omega_wy'), label='assumed wy')\n"
     << "ax2.plot(col('t'), col('omega_rx'), label='realized wx')\n"
     << "ax2.plot(col('t'), col('omega_ry'), label='realized wy')\n"
     << "ax2.set_xlabel('t [s]'); ax2.set_ylabel('disturbance'); ax2.legend()\n"
     << "plt.tight_layout(); plt.savefig('fig_disturbance.png', dpi=160)\n"
     << "print('wrote fig_disturbance.png')\n";
  // header of fig_disturbance.csv has no schema tag; adjust reader usage
  std::printf("wrote %s and plot_disturbance.py\n", csv_path.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed-loop simulator for robust barrier-constrained vessel control"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string controller_name;
  std::string output;
  std::string output_dir = ".";
  std::string kind;
  std::vector<std::string> controller_list;
  double flow_scale_override = -1.0;

  CLI::App* run_cmd = app.add_subcommand("run", "Simulate one controller on a scenario");
  run_cmd->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
  run_cmd->add_option("--controller", controller_name,
                      "rmpc_cbf | mpc_nominal | rmpc_hard_border (default: scenario setting)");
  run_cmd->add_option("--output", output, "Trajectory CSV path (default run_<variant>.csv)");
  run_cmd->add_option("--flow-scale", flow_scale_override, "Override the scenario flow scale");

  CLI::App* compare_cmd =
      app.add_subcommand("compare", "Run several controllers and write a comparison CSV");
  compare_cmd->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
  compare_cmd->add_option("--controllers", controller_list,
                          "Controllers to run (default: all three)");
  compare_cmd->add_option("--output", output, "Comparison CSV path (default compare.csv)");
  compare_cmd->add_option("--logs-dir", output_dir, "Directory for individual run logs");

  CLI::App* validate_cmd = app.add_subcommand("validate", "Check a scenario file");
  validate_cmd->add_option("--scenario", scenario_path, "Scenario JSON file")->required();

  CLI::App* figure_cmd =
      app.add_subcommand("figure", "Emit plot data (CSV) and a matplotlib script");
  figure_cmd->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
  figure_cmd
      ->add_option("--kind", kind,
                   "trajectories | barriers | border-comparison | disturbance")
      ->required();
  figure_cmd->add_option("--output-dir", output_dir, "Directory for CSV + script");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kExitUsage;
  }

  try {
    ScenarioConfig cfg = load_scenario(scenario_path);
    if (flow_scale_override >= 0.0) cfg.flow_scale = flow_scale_override;

    if (app.got_subcommand(run_cmd)) {
      ControllerVariant variant = cfg.controller;
      if (!controller_name.empty()) {
        const auto v = variant_from_string(controller_name);
        if (!v) {
          std::fprintf(stderr, "unknown controller '%s'\n", controller_name.c_str());
          return kExitUsage;
        }
        variant = *v;
      }
      if (output.empty()) output = std::string("run_") + to_string(variant) + ".csv";
      return run_one(cfg, variant, output);
    }

    if (app.got_subcommand(compare_cmd)) {
      if (controller_list.empty()) {
        controller_list = {"rmpc_cbf", "mpc_nominal", "rmpc_hard_border"};
      }
      if (output.empty()) output = "compare.csv";
      std::vector<TrajectoryLog> logs;
      for (const auto& name : controller_list) {
        const auto v = variant_from_string(name);
        if (!v) {
          std::fprintf(stderr, "unknown controller '%s'\n", name.c_str());
          return kExitUsage;
        }
        logs.push_back(run_closed_loop(cfg, *v));
        print_summary(logs.back());
        write_log(logs.back(), output_dir + "/run_" + name + ".csv");
      }
      write_comparison(compare_runs(logs), logs, output);
      std::printf("wrote %s\n", output.c_str());
      return kExitOk;
    }

    if (app.got_subcommand(validate_cmd)) {
      std::printf("scenario '%s' OK, hash=%016" PRIx64 "\n", cfg.name.c_str(), cfg.hash());
      return kExitOk;
    }

    if (app.got_subcommand(figure_cmd)) {
      std::filesystem::create_directories(output_dir);
      if (kind == "trajectories" || kind == "barriers") {
        std::vector<TrajectoryLog> logs;
        logs.push_back(run_closed_loop(cfg, ControllerVariant::rmpc_cbf));
        logs.push_back(run_closed_loop(cfg, ControllerVariant::mpc_nominal));
        if (kind == "trajectories") {
          figure_trajectories(cfg, logs, output_dir);
        } else {
          figure_barriers(logs, output_dir);
        }
      } else if (kind == "border-comparison") {
        std::vector<TrajectoryLog> logs;
        logs.push_back(run_closed_loop(cfg, ControllerVariant::rmpc_cbf));
        logs.push_back(run_closed_loop(cfg, ControllerVariant::rmpc_hard_border));
        figure_border_comparison(logs, output_dir);
      } else if (kind == "disturbance") {
        figure_disturbance(run_closed_loop(cfg, ControllerVariant::rmpc_cbf), output_dir);
      } else {
        std::fprintf(stderr, "unknown figure kind '%s'\n", kind.c_str());
        return kExitUsage;
      }
      return kExitOk;
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  }
  return kExitUsage;
}
