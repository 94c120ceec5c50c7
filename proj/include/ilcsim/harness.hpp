#pragma once

#include <string>
#include <vector>

#include "ilcsim/dynamic_ilc.hpp"
#include "ilcsim/kinematic_ilc.hpp"
#include "ilcsim/scenario.hpp"

namespace ilcsim {

// Pipeline stages. Each stage reads upstream artifacts from `out_dir` and
// persists its own outputs under a stage-named subdirectory; re-running a
// stage with identical inputs reproduces its outputs byte for byte. Missing
// upstream artifacts raise StageDependencyError.

KinematicIlcResult run_kinematic_stage(const Scenario& scenario, const std::string& out_dir);

std::vector<FirModel> run_identify_stage(const Scenario& scenario, const std::string& out_dir);

std::vector<DynamicJointResult> run_dynamic_stage(const Scenario& scenario,
                                                  const std::string& out_dir);

struct PipelineOutcome {
  LoopVerdict kinematic_verdict = LoopVerdict::max_iterations;
  std::vector<LoopVerdict> dynamic_verdicts;
  double kinematic_initial_rms = 0.0;  // meters
  double kinematic_final_rms = 0.0;
  int kinematic_iterations = 0;
  double contraction_max = 0.0;
  double tooltip_deviation_max = 0.0;  // meters, true-model FK along the profile
  double tooltip_deviation_rms = 0.0;
  bool converged = false;

  int exit_code() const { return converged ? 0 : 2; }
};

PipelineOutcome run_pipeline(const Scenario& scenario, const std::string& out_dir);

// Loaders for persisted stage artifacts (throw StageDependencyError).
CorrectionGrid load_correction_grid(const std::string& out_dir);
std::vector<FirModel> load_fir_models(const std::string& out_dir);

// Renders the convergence and tracking figures from a run directory into
// out_dir/plots/*.svg; returns the written paths.
std::vector<std::string> write_plots(const std::string& out_dir);

}  // namespace ilcsim
