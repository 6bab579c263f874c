#pragma once

#include "calabi/config.hpp"
#include "calabi/cutoff.hpp"
#include "calabi/manifolds.hpp"
#include "calabi/report.hpp"

#include <functional>
#include <string>
#include <vector>

// End-to-end construction on sphere products: normalize the moment map,
// linearize at the fixed point, contract the loop, run the cutoff lemma,
// assemble h_t = g_t^{-1} o f_t, and verify every identity the
// construction promises, producing a machine-checkable report.

namespace calabi::pipeline {

struct Flag {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;  // value within threshold (direction depends on the check)
};

struct CalabiReport {
  // target and Calabi values
  double target = 0.0;  // int_X F~ omega^n (quadrature)
  double target_error = 0.0;
  double target_closed_form = 0.0;  // -Vol(X) F(z0) with the analytic mean
  double cal_g = 0.0;
  double cal_g_error = 0.0;
  double cal_h = 0.0;  // target - cal_g
  double cal_h_direct = 0.0;
  double cal_h_direct_error = 0.0;
  double epsilon = 0.0;

  long maslov_index = 0;
  double maslov_residual = 0.0;
  std::vector<long> weights;

  // residuals
  double homotopy_boundary = 0.0;
  double loop_closure = 0.0;       // h_0 / h_1 tracer residual on X
  double g_closure = 0.0;
  double g_interp = 0.0;
  double g_support = 0.0;
  double h_b1_sup = 0.0;
  double h_b1_scale = 0.0;  // max |F~| on the chart ball
  double chart_pullback = 0.0;
  double equivariance = 0.0;
  double quadratic_form_residual = 0.0;
  double pde_residual = 0.0;
  double weight_fit_residual = 0.0;

  // lemma details
  cutoff::BallTriple balls;
  double bbar_radius = 0.0;  // removed ball
  double certified_K = 0.0;
  double certified_bound = 0.0;
  int halvings_used = 0;
  std::vector<cutoff::ScalingRow> lemma_history;

  // Hofer numbers
  double hofer_estimate = 0.0;
  double support_volume = 0.0;
  bool hofer_certified_ok = false;   // Vol(supp) * estimate >= |Cal| - err
  bool hofer_sharp_holds = false;    // estimate >= |Cal| (reported, not asserted)

  // action-Maslov
  double action_maslov_I = 0.0;
  bool action_maslov_flag = false;

  std::vector<Flag> flags;
  bool pass = false;
  std::string config_echo;
  std::string ledger;

  report::Json to_json() const;
};

CalabiReport run_theorem(const RunConfig& cfg);

// max over tracers of ||h_1(x) - x|| and ||h_0(x) - x||
double verify_loop(const std::function<Vec(double, const Vec&)>& h,
                   const std::vector<Vec>& tracers);

struct ActionMaslovOutcome {
  double F_at_s = 0.0;
  double mean = 0.0;
  double vol = 0.0;
  double I = 0.0;
  bool noncontractible = false;
};
ActionMaslovOutcome run_action_maslov(const RunConfig& cfg);

// exit codes pinned for the CLI
inline constexpr int kExitPass = 0;
inline constexpr int kExitHypothesis = 2;
inline constexpr int kExitTolerance = 3;
inline constexpr int kExitConfig = 4;

std::string ledger_fingerprint();

}  // namespace calabi::pipeline
