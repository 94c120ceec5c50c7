#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ilcsim/harness.hpp"
#include "ilcsim/measurement.hpp"
#include "ilcsim/units.hpp"

namespace {

using namespace ilcsim;
using nlohmann::json;

Scenario load_with_overrides(const std::string& path, int64_t seed_override) {
  Scenario s = load_scenario(path);
  if (seed_override >= 0) s.seed = static_cast<uint64_t>(seed_override);
  return s;
}

int verdict_code(LoopVerdict v) { return v == LoopVerdict::converged ? 0 : 2; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ilcsim: dual-loop iterative learning control simulation harness"};
  app.require_subcommand(1);

  std::string scenario_path, out_dir = "run", format = "json";
  int64_t seed_override = -1;
  app.add_option("--format", format, "Output format for query commands: csv|json")
      ->check(CLI::IsMember({"csv", "json"}));

  auto add_common = [&](CLI::App* cmd, bool needs_scenario = true) {
    if (needs_scenario)
      cmd->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
    cmd->add_option("--out", out_dir, "Output directory");
    cmd->add_option("--seed", seed_override, "Override the scenario seed");
  };

  CLI::App* kin = app.add_subcommand("kinematic", "Run the kinematic ILC calibration stage");
  add_common(kin);
  CLI::App* ident = app.add_subcommand("identify", "Identify per-joint FIR models");
  add_common(ident);
  CLI::App* dyn = app.add_subcommand("dynamic", "Run the dynamic ILC tracking stage");
  add_common(dyn);
  CLI::App* pipe = app.add_subcommand("pipeline", "Run all stages end to end");
  add_common(pipe);

  CLI::App* seg = app.add_subcommand("segment", "Extract a tooltip from a point-cloud CSV");
  std::string cloud_path;
  std::vector<double> hint{0.0, 0.0, 1.0}, truth_tip;
  double mad_k = 3.0;
  int min_points = 50;
  seg->add_option("--cloud", cloud_path, "Point cloud CSV (x,y,z per row, meters)")->required();
  seg->add_option("--hint", hint, "Tip-direction hint (3 components)")->expected(3);
  seg->add_option("--mad", mad_k, "Outlier threshold in MADs");
  seg->add_option("--min-points", min_points, "Minimum cloud/inlier size");
  seg->add_option("--truth-tip", truth_tip, "Known tip for error reporting")->expected(3);

  CLI::App* plot = app.add_subcommand("plot", "Render SVG figures from a run directory");
  plot->add_option("--out", out_dir, "Run directory to read and write plots into");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(kin)) {
      const Scenario s = load_with_overrides(scenario_path, seed_override);
      const KinematicIlcResult res = run_kinematic_stage(s, out_dir);
      std::printf("kinematic: %s after %zu iterations, final RMS %.1f um\n",
                  to_string(res.verdict), res.iterations.size(), m_to_um(res.final_rms));
      return verdict_code(res.verdict);
    }
    if (app.got_subcommand(ident)) {
      const Scenario s = load_with_overrides(scenario_path, seed_override);
      const auto firs = run_identify_stage(s, out_dir);
      for (size_t j = 0; j < firs.size(); ++j)
        std::printf("identify: joint%zu crop %d, DC gain %.4f%s\n", j + 1, firs[j].crop_length,
                    firs[j].dc_gain(), firs[j].settled ? "" : " (warning: not settled)");
      return 0;
    }
    if (app.got_subcommand(dyn)) {
      const Scenario s = load_with_overrides(scenario_path, seed_override);
      const auto results = run_dynamic_stage(s, out_dir);
      int code = 0;
      for (size_t j = 0; j < results.size(); ++j) {
        std::printf("dynamic: joint%zu %s, max error %.3g -> %.3g\n", j + 1,
                    to_string(results[j].verdict), results[j].initial_max_error,
                    results[j].final_max_error);
        code = std::max(code, verdict_code(results[j].verdict));
      }
      return code;
    }
    if (app.got_subcommand(pipe)) {
      const Scenario s = load_with_overrides(scenario_path, seed_override);
      const PipelineOutcome outcome = run_pipeline(s, out_dir);
      std::printf("pipeline: kinematic %s (RMS %.1f -> %.1f um in %d iterations)\n",
                  to_string(outcome.kinematic_verdict),
                  m_to_um(outcome.kinematic_initial_rms), m_to_um(outcome.kinematic_final_rms),
                  outcome.kinematic_iterations);
      for (size_t j = 0; j < outcome.dynamic_verdicts.size(); ++j)
        std::printf("pipeline: dynamic joint%zu %s\n", j + 1,
                    to_string(outcome.dynamic_verdicts[j]));
      std::printf("pipeline: tooltip deviation max %.1f um, rms %.1f um\n",
                  m_to_um(outcome.tooltip_deviation_max),
                  m_to_um(outcome.tooltip_deviation_rms));
      std::printf("pipeline: %s\n", outcome.converged ? "converged" : "not converged");
      return outcome.exit_code();
    }
    if (app.got_subcommand(seg)) {
      const ToolPointCloud cloud = load_cloud_csv(cloud_path);
      SegmentationConfig config;
      config.mad_threshold = mad_k;
      config.min_points = min_points;
      config.tip_direction_hint = Eigen::Vector3d(hint[0], hint[1], hint[2]).normalized();
      const TooltipEstimate est = extract_tooltip(cloud, config);
      if (format == "csv") {
        std::printf("tip_x_m,tip_y_m,tip_z_m,axis_x,axis_y,axis_z,radius_m,inliers,removed\n");
        std::printf("%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%d,%d\n", est.tip.x(),
                    est.tip.y(), est.tip.z(), est.axis.x(), est.axis.y(), est.axis.z(),
                    est.cylinder.radius, est.inliers, est.removed);
      } else {
        json j;
        j["tip_m"] = {est.tip.x(), est.tip.y(), est.tip.z()};
        j["axis"] = {est.axis.x(), est.axis.y(), est.axis.z()};
        j["radius_m"] = est.cylinder.radius;
        j["inliers"] = est.inliers;
        j["removed"] = est.removed;
        if (truth_tip.size() == 3) {
          const Eigen::Vector3d truth(truth_tip[0], truth_tip[1], truth_tip[2]);
          j["tip_error_um"] = m_to_um((est.tip - truth).norm());
        }
        std::printf("%s\n", j.dump(2).c_str());
      }
      return 0;
    }
    if (app.got_subcommand(plot)) {
      for (const auto& p : write_plots(out_dir)) std::printf("wrote %s\n", p.c_str());
      return 0;
    }
  } catch (const std::exception& e) {
    const auto subs = app.get_subcommands();
    std::fprintf(stderr, "error [%s]: %s\n",
                 subs.empty() ? "ilcsim" : subs.front()->get_name().c_str(), e.what());
    return 1;
  }
  return 1;
}
