#include "ilcsim/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "ilcsim/csv.hpp"
#include "ilcsim/errors.hpp"
#include "ilcsim/rng.hpp"
#include "ilcsim/svg_plot.hpp"
#include "ilcsim/units.hpp"

namespace ilcsim {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void write_json(const json& j, const fs::path& path) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json read_json(const std::string& stage, const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw StageDependencyError(stage, path.string());
  json j;
  in >> j;
  return j;
}

}  // namespace

KinematicIlcResult run_kinematic_stage(const Scenario& scenario, const std::string& out_dir) {
  scenario.validate();
  const fs::path dir = fs::path(out_dir) / "kinematic";
  fs::create_directories(dir);

  const RobotModel true_model =
      perturb_model(scenario.nominal, scenario.perturbation, scenario.perturbation_seed);
  KinematicIlcResult result =
      run_kinematic_ilc(scenario.nominal, true_model, scenario.registration.build(),
                        scenario.noise, scenario.seed, scenario.grid, scenario.kinematic);

  CsvWriter csv((dir / "iterations.csv").string());
  csv.header({"iteration", "rotation_index", "insertion_index", "rotation_deg", "insertion_mm",
              "meas_x_m", "meas_y_m", "meas_z_m", "err_x_um", "err_y_um", "err_z_um",
              "err_norm_um"});
  for (const auto& it : result.iterations) {
    for (const auto& n : it.nodes) {
      csv.row({static_cast<double>(it.iteration), static_cast<double>(n.rotation_index),
               static_cast<double>(n.insertion_index),
               scenario.grid.rotation_deg(n.rotation_index),
               scenario.grid.insertion_mm(n.insertion_index), n.measured.x(), n.measured.y(),
               n.measured.z(), m_to_um(n.error.x()), m_to_um(n.error.y()), m_to_um(n.error.z()),
               m_to_um(n.error.norm())});
    }
  }

  json grid_json;
  grid_json["grid"] = {{"rotation_range_deg", scenario.grid.rotation_range_deg},
                       {"rotation_step_deg", scenario.grid.rotation_step_deg},
                       {"insertion_range_mm", scenario.grid.insertion_range_mm},
                       {"insertion_step_mm", scenario.grid.insertion_step_mm}};
  grid_json["references_m"] = json::array();
  for (const auto& r : result.grid.references)
    grid_json["references_m"].push_back(json::array({r.x(), r.y(), r.z()}));
  grid_json["nodes"] = json::array();
  for (int r = 0; r < scenario.grid.rotation_count(); ++r) {
    for (int i = 0; i < scenario.grid.insertion_count(); ++i) {
      const JointVector& q = result.grid.joints[r][i];
      grid_json["nodes"].push_back({{"rotation_index", r},
                                    {"insertion_index", i},
                                    {"q", json::array({q.q1, q.q2, q.q3, q.q4})}});
    }
  }
  write_json(grid_json, dir / "correction_grid.json");

  json summary;
  summary["verdict"] = to_string(result.verdict);
  summary["iterations"] = static_cast<int>(result.iterations.size());
  summary["rms_um"] = json::array();
  summary["max_um"] = json::array();
  for (const auto& it : result.iterations) {
    summary["rms_um"].push_back(m_to_um(it.rms_error));
    summary["max_um"].push_back(m_to_um(it.max_error));
  }
  summary["final_rms_um"] = m_to_um(result.final_rms);
  summary["contraction_max"] = result.contraction_max;
  summary["alpha"] = scenario.kinematic.alpha;
  summary["seed"] = scenario.seed;
  summary["perturbation_seed"] = scenario.perturbation_seed;
  write_json(summary, dir / "summary.json");
  return result;
}

std::vector<FirModel> run_identify_stage(const Scenario& scenario, const std::string& out_dir) {
  scenario.validate();
  const fs::path dir = fs::path(out_dir) / "identify";
  fs::create_directories(dir);

  std::vector<FirModel> firs;
  json summary;
  summary["joints"] = json::array();
  for (size_t j = 0; j < scenario.plants.size(); ++j) {
    const uint64_t seed = Rng::derive({scenario.seed, 0x6964656eULL, static_cast<uint64_t>(j)});
    const StepResponse g = measure_step_response(
        scenario.plants[j], scenario.identification.amplitudes[j],
        scenario.identification.duration_samples, seed);

    const std::string joint_tag = "joint" + std::to_string(j + 1);
    CsvWriter csv((dir / ("step_" + joint_tag + ".csv")).string());
    csv.header({"n", "t_s", "g"});
    for (size_t k = 0; k < g.g.size(); ++k)
      csv.row({static_cast<double>(k), k * g.sample_time, g.g[k]});

    const int crop = scenario.identification.crop > 0 ? scenario.identification.crop
                                                      : auto_crop_length(g);
    const FirModel fir = identify_fir(g, crop, scenario.identification.window);

    json fj;
    fj["joint"] = static_cast<int>(j + 1);
    fj["sample_time_s"] = fir.sample_time;
    fj["crop"] = fir.crop_length;
    fj["window_applied"] = fir.window_applied;
    fj["settled"] = fir.settled;
    fj["h"] = fir.h;
    write_json(fj, dir / ("fir_" + joint_tag + ".json"));

    summary["joints"].push_back({{"joint", static_cast<int>(j + 1)},
                                 {"crop", fir.crop_length},
                                 {"dc_gain", fir.dc_gain()},
                                 {"settled", fir.settled}});
    firs.push_back(fir);
  }
  write_json(summary, dir / "summary.json");
  return firs;
}

CorrectionGrid load_correction_grid(const std::string& out_dir) {
  const fs::path path = fs::path(out_dir) / "kinematic" / "correction_grid.json";
  const json j = read_json("dynamic", path);

  CorrectionGrid grid;
  grid.grid.rotation_range_deg = j["grid"]["rotation_range_deg"].get<double>();
  grid.grid.rotation_step_deg = j["grid"]["rotation_step_deg"].get<double>();
  grid.grid.insertion_range_mm = j["grid"]["insertion_range_mm"].get<double>();
  grid.grid.insertion_step_mm = j["grid"]["insertion_step_mm"].get<double>();
  grid.grid.validate();

  for (const auto& r : j["references_m"])
    grid.references.emplace_back(r[0].get<double>(), r[1].get<double>(), r[2].get<double>());
  grid.joints.assign(grid.grid.rotation_count(),
                     std::vector<JointVector>(grid.grid.insertion_count()));
  for (const auto& node : j["nodes"]) {
    const int r = node["rotation_index"].get<int>();
    const int i = node["insertion_index"].get<int>();
    const auto& q = node["q"];
    grid.joints.at(r).at(i) = JointVector{q[0].get<double>(), q[1].get<double>(),
                                          q[2].get<double>(), q[3].get<double>()};
  }
  return grid;
}

std::vector<FirModel> load_fir_models(const std::string& out_dir) {
  std::vector<FirModel> firs;
  for (int j = 1; j <= 4; ++j) {
    const fs::path path =
        fs::path(out_dir) / "identify" / ("fir_joint" + std::to_string(j) + ".json");
    const json fj = read_json("dynamic", path);
    FirModel fir;
    fir.sample_time = fj["sample_time_s"].get<double>();
    fir.crop_length = fj["crop"].get<int>();
    fir.window_applied = fj["window_applied"].get<bool>();
    fir.settled = fj["settled"].get<bool>();
    fir.h = fj["h"].get<std::vector<double>>();
    firs.push_back(std::move(fir));
  }
  return firs;
}

std::vector<DynamicJointResult> run_dynamic_stage(const Scenario& scenario,
                                                  const std::string& out_dir) {
  scenario.validate();
  const fs::path dir = fs::path(out_dir) / "dynamic";
  fs::create_directories(dir);

  const CorrectionGrid grid = load_correction_grid(out_dir);
  const std::vector<FirModel> firs = load_fir_models(out_dir);
  const InterpolationTable table = InterpolationTable::from_grid(grid);
  const ProfileResult profile = generate_profile(scenario.profile, table);

  CsvWriter pcsv((dir / "profile.csv").string());
  pcsv.header({"t_s", "rotation_deg", "insertion_mm", "q1", "q2", "q3", "q4"});
  for (size_t k = 0; k < profile.time_s.size(); ++k)
    pcsv.row({profile.time_s[k], profile.rotation_deg[k], profile.insertion_mm[k],
              profile.joints[0].samples[k], profile.joints[1].samples[k],
              profile.joints[2].samples[k], profile.joints[3].samples[k]});

  DynamicIlcConfig config;
  config.q = QFilter::lowpass(scenario.dynamic.q_cutoff, scenario.dynamic.q_taps);
  config.max_iterations = scenario.dynamic.max_iterations;
  config.thresholds = scenario.dynamic.thresholds;
  config.min_reduction = scenario.dynamic.min_reduction;
  config.saturation_fraction_limit = scenario.dynamic.saturation_fraction_limit;
  config.seed = Rng::derive({scenario.seed, 0x64796e61ULL});

  std::vector<LearningFilter> filters;
  filters.reserve(firs.size());
  for (const auto& fir : firs) filters.push_back(build_learning_filter(fir));

  const std::vector<JointTrajectory> refs(profile.joints.begin(), profile.joints.end());
  const std::vector<DynamicJointResult> results =
      run_dynamic_ilc(scenario.plants, refs, filters, firs, config);

  json summary;
  summary["joints"] = json::array();
  for (size_t j = 0; j < results.size(); ++j) {
    const auto& res = results[j];
    for (const auto& it : res.iterations) {
      CsvWriter csv((dir / ("joint" + std::to_string(j + 1) + "_iter" +
                            std::to_string(it.iteration) + ".csv"))
                        .string());
      csv.header({"k", "t_s", "ref", "u", "y", "err", "path_err", "sat"});
      for (size_t k = 0; k < it.u.size(); ++k)
        csv.row({static_cast<double>(k), profile.time_s[k], refs[j].samples[k], it.u[k],
                 it.y[k], it.tracking.trajectory_error[k], it.tracking.path_error[k],
                 static_cast<double>(it.tracking.saturated.empty() ? 0
                                                                   : it.tracking.saturated[k])});
    }
    summary["joints"].push_back({{"joint", static_cast<int>(j + 1)},
                                 {"verdict", to_string(res.verdict)},
                                 {"iterations", static_cast<int>(res.iterations.size())},
                                 {"initial_max_error", res.initial_max_error},
                                 {"final_max_error", res.final_max_error},
                                 {"convergence_value", res.convergence_value},
                                 {"reference_rate_feasible", res.reference_rate_feasible},
                                 {"threshold", scenario.dynamic.thresholds[j]}});
  }
  write_json(summary, dir / "summary.json");
  return results;
}

PipelineOutcome run_pipeline(const Scenario& scenario, const std::string& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(out_dir);

  const KinematicIlcResult kin = run_kinematic_stage(scenario, out_dir);
  run_identify_stage(scenario, out_dir);
  const std::vector<DynamicJointResult> dyn = run_dynamic_stage(scenario, out_dir);

  PipelineOutcome outcome;
  outcome.kinematic_verdict = kin.verdict;
  outcome.kinematic_initial_rms = kin.iterations.empty() ? 0.0 : kin.iterations.front().rms_error;
  outcome.kinematic_final_rms = kin.final_rms;
  outcome.kinematic_iterations = static_cast<int>(kin.iterations.size());
  outcome.contraction_max = kin.contraction_max;

  bool dynamic_ok = true;
  for (const auto& res : dyn) {
    outcome.dynamic_verdicts.push_back(res.verdict);
    dynamic_ok = dynamic_ok && res.verdict == LoopVerdict::converged;
  }
  outcome.converged = kin.verdict == LoopVerdict::converged && dynamic_ok;

  // End-to-end stationarity: true-model FK along the interpolated profile
  // against the per-depth references (kinematic content only; dynamics are
  // reported separately above).
  const RobotModel true_model =
      perturb_model(scenario.nominal, scenario.perturbation, scenario.perturbation_seed);
  const InterpolationTable table = InterpolationTable::from_grid(kin.grid);
  const ProfileResult profile = generate_profile(scenario.profile, table);
  double dev_max = 0.0, dev_sq = 0.0;
  for (size_t k = 0; k < profile.time_s.size(); ++k) {
    const JointVector q{profile.joints[0].samples[k], profile.joints[1].samples[k],
                        profile.joints[2].samples[k], profile.joints[3].samples[k]};
    const TaskPoint tip = forward_kinematics(true_model, q);
    // Reference interpolated linearly across the per-depth anchors.
    const double d = profile.insertion_mm[k] / scenario.grid.insertion_step_mm;
    const int i0 = std::min(static_cast<int>(d), scenario.grid.insertion_count() - 2);
    const double f = d - i0;
    const Eigen::Vector3d ref =
        (1.0 - f) * kin.grid.references[i0] + f * kin.grid.references[i0 + 1];
    const double dev = (tip - ref).norm();
    dev_max = std::max(dev_max, dev);
    dev_sq += dev * dev;
  }
  outcome.tooltip_deviation_max = dev_max;
  outcome.tooltip_deviation_rms =
      profile.time_s.empty() ? 0.0 : std::sqrt(dev_sq / profile.time_s.size());

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  json summary;
  summary["scenario"] = scenario.name;
  summary["seed"] = scenario.seed;
  summary["kinematic"] = {{"verdict", to_string(kin.verdict)},
                          {"iterations", outcome.kinematic_iterations},
                          {"initial_rms_um", m_to_um(outcome.kinematic_initial_rms)},
                          {"final_rms_um", m_to_um(outcome.kinematic_final_rms)},
                          {"contraction_max", kin.contraction_max}};
  summary["dynamic"] = json::array();
  for (size_t j = 0; j < dyn.size(); ++j)
    summary["dynamic"].push_back({{"joint", static_cast<int>(j + 1)},
                                  {"verdict", to_string(dyn[j].verdict)},
                                  {"initial_max_error", dyn[j].initial_max_error},
                                  {"final_max_error", dyn[j].final_max_error},
                                  {"convergence_value", dyn[j].convergence_value}});
  summary["tooltip_deviation_um"] = {{"max", m_to_um(dev_max)},
                                     {"rms", m_to_um(outcome.tooltip_deviation_rms)}};
  // Every persisted artifact, as paths relative to the run directory.
  std::vector<std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(out_dir)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension();
    if (ext != ".csv" && ext != ".json") continue;
    if (entry.path().filename() == "run_summary.json") continue;
    files.push_back(fs::relative(entry.path(), out_dir).generic_string());
  }
  std::sort(files.begin(), files.end());
  summary["files"] = files;
  summary["converged"] = outcome.converged;
  summary["wall_clock_s"] = wall;  // excluded from determinism comparisons
  write_json(summary, fs::path(out_dir) / "run_summary.json");
  return outcome;
}

std::vector<std::string> write_plots(const std::string& out_dir) {
  const fs::path dir = fs::path(out_dir) / "plots";
  fs::create_directories(dir);
  std::vector<std::string> written;

  // RMS vs iteration from the kinematic records.
  const fs::path iter_csv = fs::path(out_dir) / "kinematic" / "iterations.csv";
  if (!fs::exists(iter_csv)) throw StageDependencyError("plot", iter_csv.string());
  const auto rows = read_csv(iter_csv.string());

  int max_iter = 0, max_ins = 0;
  for (const auto& r : rows) {
    max_iter = std::max(max_iter, static_cast<int>(r[0]));
    max_ins = std::max(max_ins, static_cast<int>(r[2]));
  }
  std::vector<double> rms_sq(max_iter + 1, 0.0);
  std::vector<int> counts(max_iter + 1, 0);
  for (const auto& r : rows) {
    const int it = static_cast<int>(r[0]);
    rms_sq[it] += r[11] * r[11];
    counts[it] += 1;
  }
  std::vector<double> xs, ys;
  for (int it = 1; it <= max_iter; ++it) {
    if (counts[it] == 0) continue;
    xs.push_back(it);
    ys.push_back(std::sqrt(rms_sq[it] / counts[it]));
  }
  SvgPlot rms_plot("Tooltip RMS error per iteration", "iteration", "RMS error [um]");
  rms_plot.set_log_y(true);
  rms_plot.add_series("rms", xs, ys);
  rms_plot.add_hline(30.0, "30 um");
  const std::string rms_path = (dir / "rms_vs_iteration.svg").string();
  rms_plot.write(rms_path);
  written.push_back(rms_path);

  // Tooltip path in the x-y plane at the deepest node, first vs last iteration.
  SvgPlot path_plot("Tooltip deviation at full insertion", "x error [um]", "y error [um]");
  for (const int it : {1, max_iter}) {
    std::vector<double> px, py;
    for (const auto& r : rows)
      if (static_cast<int>(r[0]) == it && static_cast<int>(r[2]) == max_ins) {
        px.push_back(r[8]);
        py.push_back(r[9]);
      }
    path_plot.add_series(it == 1 ? "before" : "after", px, py);
    if (max_iter == 1) break;
  }
  const std::string path_path = (dir / "tooltip_path.svg").string();
  path_plot.write(path_path);
  written.push_back(path_path);

  // Per-joint tracking error, first vs last dynamic iteration.
  for (int j = 1; j <= 4; ++j) {
    const std::string tag = "joint" + std::to_string(j);
    int last = 0;
    for (int m = 1; m <= 64; ++m)
      if (fs::exists(fs::path(out_dir) / "dynamic" / (tag + "_iter" + std::to_string(m) + ".csv")))
        last = m;
    if (last == 0) continue;
    SvgPlot jp("Tracking error, " + tag, "t [s]",
               j == 3 ? "error [um]" : "error [deg]");
    for (const int m : {1, last}) {
      const auto jr = read_csv((fs::path(out_dir) / "dynamic" /
                                (tag + "_iter" + std::to_string(m) + ".csv"))
                                   .string());
      std::vector<double> ts, es;
      for (const auto& r : jr) {
        ts.push_back(r[1]);
        es.push_back(j == 3 ? m_to_um(r[5]) : rad2deg(r[5]));
      }
      jp.add_series("iteration " + std::to_string(m), ts, es);
      if (last == 1) break;
    }
    const std::string jpath = (dir / (tag + "_tracking.svg")).string();
    jp.write(jpath);
    written.push_back(jpath);
  }
  return written;
}

}  // namespace ilcsim
