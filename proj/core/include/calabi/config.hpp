#pragma once

#include "calabi/common.hpp"

#include <cstdint>
#include <string>
#include <vector>

// Line-oriented `key = value` run configuration with [sections]; parse
// errors carry line numbers.

namespace calabi::pipeline {

struct RunConfig {
  // manifold
  std::vector<double> radii = {1.0, 2.0};
  std::vector<double> weights;       // empty -> height_action_weights(radii)
  std::vector<int> fixed_signs;      // empty -> (+,...,+,-)

  // chart
  double chart_radius = 0.0;         // 0 -> default

  // lemma
  double rho3 = 0.5;
  double margin = 1.25;
  bool epsilon_paper = true;         // eps = |int F~ omega^n| / 2
  double epsilon_value = 0.0;
  int max_halvings = 12;

  // integrator
  int rk_steps = 200;
  int sigma_steps = 128;

  // quadrature
  int ball_per_axis = 24;
  int sphere_azimuth = 48;
  int sphere_height = 24;
  int t_nodes = 16;
  int segment_nodes = 5;
  int loop_samples = 256;

  // run
  std::uint64_t seed = 12345;
  std::string out_dir;
  bool trajectories = false;

  void validate() const;
};

RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& path);
std::string config_echo(const RunConfig& cfg);  // canonical key=value form

}  // namespace calabi::pipeline
