#include "ilcsim/scenario.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "ilcsim/units.hpp"

namespace ilcsim {

using nlohmann::json;
namespace fs = std::filesystem;

// robot_model.cpp
RobotModel robot_from_json(const json& j);
json robot_to_json(const RobotModel& m);

FrameRegistration RegistrationSpec::build() const {
  FrameRegistration reg;
  reg.rotation = (Eigen::AngleAxisd(rpy[2], Eigen::Vector3d::UnitZ()) *
                  Eigen::AngleAxisd(rpy[1], Eigen::Vector3d::UnitY()) *
                  Eigen::AngleAxisd(rpy[0], Eigen::Vector3d::UnitX()))
                     .toRotationMatrix();
  reg.translation = translation;
  return reg;
}

void Scenario::validate() const {
  nominal.validate();
  perturbation.validate();
  noise.validate();
  grid.validate();
  registration.build().validate();
  if (plants.size() != 4) throw std::invalid_argument("scenario needs 4 joint plants");
  for (const auto& p : plants) p.validate();
  if (identification.amplitudes.size() != 4)
    throw std::invalid_argument("scenario needs 4 identification amplitudes");
  if (!dynamic.thresholds.empty() && dynamic.thresholds.size() != 4)
    throw std::invalid_argument("dynamic thresholds must cover 4 joints");
  if (!(kinematic.alpha > 0.0) || kinematic.alpha > 1.0)
    throw std::invalid_argument("kinematic alpha must lie in (0, 1]");
}

namespace {

Eigen::Vector3d vec3(const json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}
json arr(const Eigen::Vector3d& v) { return json::array({v[0], v[1], v[2]}); }

JointPlant plant_from_json(const json& j) {
  JointPlant p;
  p.name = j.value("name", "");
  p.num = j.at("num").get<std::vector<double>>();
  p.den = j.at("den").get<std::vector<double>>();
  p.sample_time = j.at("sample_time_s").get<double>();
  p.delay = j.value("delay_samples", 0);
  if (j.contains("pos_limits")) {
    p.saturation.pos_lower = j["pos_limits"].at(0).get<double>();
    p.saturation.pos_upper = j["pos_limits"].at(1).get<double>();
  }
  if (j.contains("rate_limit")) p.saturation.rate_limit = j["rate_limit"].get<double>();
  p.noise_sigma = j.value("noise_sigma", 0.0);
  p.validate();
  return p;
}

json plant_to_json(const JointPlant& p) {
  json j;
  j["name"] = p.name;
  j["num"] = p.num;
  j["den"] = p.den;
  j["sample_time_s"] = p.sample_time;
  j["delay_samples"] = p.delay;
  if (std::isfinite(p.saturation.pos_lower) || std::isfinite(p.saturation.pos_upper))
    j["pos_limits"] = json::array({p.saturation.pos_lower, p.saturation.pos_upper});
  if (std::isfinite(p.saturation.rate_limit)) j["rate_limit"] = p.saturation.rate_limit;
  j["noise_sigma"] = p.noise_sigma;
  return j;
}

}  // namespace

Scenario scenario_from_json(const json& j, const fs::path& base_dir) {
  Scenario s;
  s.name = j.value("name", "scenario");
  s.seed = j.value("seed", 1ULL);

  if (j.contains("robot_file")) {
    const fs::path ref = j["robot_file"].get<std::string>();
    s.nominal = load_robot((ref.is_absolute() ? ref : base_dir / ref).string());
  } else {
    s.nominal = robot_from_json(j.at("robot"));
  }

  if (j.contains("perturbation")) {
    const json& p = j["perturbation"];
    auto range = [&](const char* key, double& lo, double& hi) {
      if (!p.contains(key)) return;
      lo = p[key].at(0).get<double>();
      hi = p[key].at(1).get<double>();
    };
    range("tip_offset_m", s.perturbation.tip_offset_min, s.perturbation.tip_offset_max);
    range("axis_tilt_rad", s.perturbation.axis_tilt_min, s.perturbation.axis_tilt_max);
    range("bend_per_m", s.perturbation.bend_min, s.perturbation.bend_max);
    s.perturbation.dh_angle_max = p.value("dh_angle_rad", 0.0);
    s.perturbation.dh_translation_max = p.value("dh_translation_m", 0.0);
    s.perturbation_seed = p.value("seed", 1ULL);
  }

  if (j.contains("registration")) {
    s.registration.rpy = vec3(j["registration"].at("rpy_rad"));
    s.registration.translation = vec3(j["registration"].at("translation_m"));
  }
  if (j.contains("noise")) {
    s.noise.sigma = j["noise"].value("sigma_m", 0.0);
    s.noise.quantization = j["noise"].value("quantization_m", 0.0);
  }
  if (j.contains("grid")) {
    const json& g = j["grid"];
    s.grid.rotation_range_deg = g.value("rotation_range_deg", 200.0);
    s.grid.rotation_step_deg = g.value("rotation_step_deg", 10.0);
    s.grid.insertion_range_mm = g.value("insertion_range_mm", 2.0);
    s.grid.insertion_step_mm = g.value("insertion_step_mm", 0.5);
  }
  if (j.contains("kinematic")) {
    const json& k = j["kinematic"];
    s.kinematic.alpha = k.value("alpha", 0.7);
    s.kinematic.measurement_averaging = k.value("measurement_averaging", 1);
    s.kinematic.error_sanity_bound = k.value("error_sanity_bound_m", 5e-3);
    if (k.contains("stop")) {
      s.kinematic.stop.rms_threshold = k["stop"].value("rms_threshold_m", 30e-6);
      s.kinematic.stop.stall = k["stop"].value("stall_m", 2e-6);
      s.kinematic.stop.max_iterations = k["stop"].value("max_iterations", 10);
    }
    if (k.contains("ik")) {
      s.kinematic.ik.tolerance = k["ik"].value("tolerance_m", 1e-7);
      s.kinematic.ik.max_iterations = k["ik"].value("max_iterations", 50);
    }
  }
  for (const auto& p : j.at("plants")) s.plants.push_back(plant_from_json(p));
  if (j.contains("identification")) {
    const json& c = j["identification"];
    s.identification.amplitudes = c.at("amplitudes").get<std::vector<double>>();
    s.identification.duration_samples = c.value("duration_samples", 1500);
    s.identification.crop = c.value("crop", 0);
    const std::string w = c.value("window", "blackman-harris");
    if (w == "none")
      s.identification.window = FirWindow::none;
    else if (w == "blackman-harris")
      s.identification.window = FirWindow::blackman_harris;
    else
      throw std::invalid_argument("unknown window: " + w);
  }
  if (j.contains("dynamic")) {
    const json& d = j["dynamic"];
    s.dynamic.q_cutoff = d.value("q_cutoff", 0.2);
    s.dynamic.q_taps = d.value("q_taps", 51);
    s.dynamic.max_iterations = d.value("max_iterations", 6);
    if (d.contains("thresholds")) s.dynamic.thresholds = d["thresholds"].get<std::vector<double>>();
    s.dynamic.min_reduction = d.value("min_reduction", 10.0);
    s.dynamic.saturation_fraction_limit = d.value("saturation_fraction_limit", 0.2);
  }
  if (j.contains("profile")) {
    const json& p = j["profile"];
    s.profile.rotation_amplitude_deg = p.value("rotation_amplitude_deg", 100.0);
    s.profile.rotation_frequency_hz = p.value("rotation_frequency_hz", 2.0);
    s.profile.insertion_speed_mm_s = p.value("insertion_speed_mm_s", 0.5);
    s.profile.insertion_depth_mm = p.value("insertion_depth_mm", 2.0);
    s.profile.sample_time = p.value("sample_time_s", 1e-3);
    s.profile.ramp_time_s = p.value("ramp_time_s", 0.5);
  }
  s.validate();
  return s;
}

json scenario_to_json(const Scenario& s, const std::string& robot_file_ref) {
  json j;
  j["name"] = s.name;
  j["seed"] = s.seed;
  if (robot_file_ref.empty())
    j["robot"] = robot_to_json(s.nominal);
  else
    j["robot_file"] = robot_file_ref;
  j["perturbation"] = {
      {"tip_offset_m", json::array({s.perturbation.tip_offset_min, s.perturbation.tip_offset_max})},
      {"axis_tilt_rad", json::array({s.perturbation.axis_tilt_min, s.perturbation.axis_tilt_max})},
      {"bend_per_m", json::array({s.perturbation.bend_min, s.perturbation.bend_max})},
      {"dh_angle_rad", s.perturbation.dh_angle_max},
      {"dh_translation_m", s.perturbation.dh_translation_max},
      {"seed", s.perturbation_seed}};
  j["registration"] = {{"rpy_rad", arr(s.registration.rpy)},
                       {"translation_m", arr(s.registration.translation)}};
  j["noise"] = {{"sigma_m", s.noise.sigma}, {"quantization_m", s.noise.quantization}};
  j["grid"] = {{"rotation_range_deg", s.grid.rotation_range_deg},
               {"rotation_step_deg", s.grid.rotation_step_deg},
               {"insertion_range_mm", s.grid.insertion_range_mm},
               {"insertion_step_mm", s.grid.insertion_step_mm}};
  j["kinematic"] = {{"alpha", s.kinematic.alpha},
                    {"measurement_averaging", s.kinematic.measurement_averaging},
                    {"error_sanity_bound_m", s.kinematic.error_sanity_bound},
                    {"stop",
                     {{"rms_threshold_m", s.kinematic.stop.rms_threshold},
                      {"stall_m", s.kinematic.stop.stall},
                      {"max_iterations", s.kinematic.stop.max_iterations}}},
                    {"ik",
                     {{"tolerance_m", s.kinematic.ik.tolerance},
                      {"max_iterations", s.kinematic.ik.max_iterations}}}};
  j["plants"] = json::array();
  for (const auto& p : s.plants) j["plants"].push_back(plant_to_json(p));
  j["identification"] = {
      {"amplitudes", s.identification.amplitudes},
      {"duration_samples", s.identification.duration_samples},
      {"crop", s.identification.crop},
      {"window", s.identification.window == FirWindow::none ? "none" : "blackman-harris"}};
  j["dynamic"] = {{"q_cutoff", s.dynamic.q_cutoff},
                  {"q_taps", s.dynamic.q_taps},
                  {"max_iterations", s.dynamic.max_iterations},
                  {"thresholds", s.dynamic.thresholds},
                  {"min_reduction", s.dynamic.min_reduction},
                  {"saturation_fraction_limit", s.dynamic.saturation_fraction_limit}};
  j["profile"] = {{"rotation_amplitude_deg", s.profile.rotation_amplitude_deg},
                  {"rotation_frequency_hz", s.profile.rotation_frequency_hz},
                  {"insertion_speed_mm_s", s.profile.insertion_speed_mm_s},
                  {"insertion_depth_mm", s.profile.insertion_depth_mm},
                  {"sample_time_s", s.profile.sample_time},
                  {"ramp_time_s", s.profile.ramp_time_s}};
  return j;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file: " + path);
  json j;
  in >> j;
  return scenario_from_json(j, fs::path(path).parent_path());
}

void save_scenario(const Scenario& scenario, const std::string& path,
                   const std::string& robot_file_ref) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write scenario file: " + path);
  out << scenario_to_json(scenario, robot_file_ref).dump(2) << '\n';
}

Scenario make_paper_repro_scenario() {
  Scenario s;
  s.name = "paper-repro";
  s.seed = 20260808;
  s.nominal = make_default_rcm_robot();

  s.perturbation.tip_offset_min = 0.4e-3;
  s.perturbation.tip_offset_max = 0.4e-3;
  s.perturbation.axis_tilt_min = deg2rad(1.0);
  s.perturbation.axis_tilt_max = deg2rad(1.0);
  s.perturbation_seed = 44;

  s.registration.rpy = {0.1, -0.2, 0.3};
  s.registration.translation = {0.01, 0.02, -0.005};
  s.noise.sigma = 5e-6;

  s.kinematic.alpha = 0.7;

  s.plants = make_default_joint_plants();
  s.identification.amplitudes = {0.01, 0.01, 0.001, 0.01};
  s.identification.duration_samples = 1500;
  return s;
}

}  // namespace ilcsim
