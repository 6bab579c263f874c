#pragma once

#include "calabi/common.hpp"
#include "calabi/hamflow.hpp"
#include "calabi/nullhomotopy.hpp"
#include "calabi/symplin.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

// The cutoff construction: nested balls, the radial bump, the compactly
// supported loop g_{s,t} obtained by flowing the cut-off quadratic
// Hamiltonians in s, recovery of the generating Hamiltonian G_{1,t}, the
// Calabi estimate with certified bound, and the radius-shrinking driver.

namespace calabi::cutoff {

struct BallTriple {
  double rho1 = 0.0;
  double rho2 = 0.0;
  double rho3 = 0.0;
  double kappa = 1.0;  // max_t ||A_t||_op over the sample grid
};

// rho2 = rho3/margin, rho1 = rho2/(kappa*margin); certifies kappa*rho1 < rho2.
BallTriple choose_balls(const symplin::MatrixLoop& A, double rho3, double margin = 1.25);

// Radial bump: 1 on [0,rho2], 0 on [rho3,inf), quintic smoothstep between
// (C^2 matching at both ends).
struct CutoffProfile {
  double rho2 = 0.0;
  double rho3 = 0.0;
  double operator()(double r) const;
  double deriv(double r) const;
};
CutoffProfile cutoff_profile(double rho2, double rho3);

// Cut-off Hamiltonian vector field X_{a H_{s,t}} at a single point
// (a = profile, H = <x, Q_{s,t} x>).
Vec cutoff_vector_field(const nullhomotopy::BasedHomotopy& A, const CutoffProfile& prof,
                        double s, double t, const Vec& x);

// g_{s,t}(x): integrate the field above in sigma from 0 to s (RK4).
Vec cutoff_flow(const nullhomotopy::BasedHomotopy& A, const CutoffProfile& prof,
                double s, double t, const Vec& x, int sigma_steps = 128);
// inverse flow, sigma from s down to 0
Vec cutoff_flow_inverse(const nullhomotopy::BasedHomotopy& A, const CutoffProfile& prof,
                        double s, double t, const Vec& y, int sigma_steps = 128);

// G_{s,t}(x): generating Hamiltonian (time variable t) of the partial
// loop g_{s,.}, recovered by the segment line integral, normalized
// G(0) = 0. Single-point precise path.
double lemma_generator(const nullhomotopy::BasedHomotopy& A, const CutoffProfile& prof,
                       double s, double t, const Vec& x, int sigma_steps = 256,
                       int segment_nodes = 12, double h_t = hamflow::kStepT);

// Batched engines for one fixed t: full-interval sweeps of the cutoff
// dynamics with precomputed stage tables, threaded over columns, plus the
// generator sampler split into the exact linear-core part and the
// numerically recovered shell part.
class LoopEngines {
 public:
  LoopEngines(const nullhomotopy::BasedHomotopy& A, const CutoffProfile& prof,
              const BallTriple& balls, double t, int sigma_steps, int segment_nodes = 5,
              double h_t = hamflow::kStepT);
  ~LoopEngines();
  LoopEngines(LoopEngines&&) noexcept;

  void forward(Mat& X) const;   // columns -> g_t(columns)
  void backward(Mat& X) const;  // columns -> g_t^{-1}(columns)
  // G_{1,t} at each point (points may lie anywhere; outside B3 gives 0)
  std::vector<double> generator_values(const std::vector<Vec>& pts) const;

  double t() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct CalOptions {
  int t_nodes = 16;
  int per_axis = 24;
  int sigma_steps = 128;
  int segment_nodes = 5;
  double h_t = hamflow::kStepT;
  bool refine = true;  // half-resolution companion run for the error bound
};

struct CalEstimate {
  double value = 0.0;
  double error_bound = 0.0;
};

// Cal(g) = int_0^1 int_{B3} G_{1,t} omega0^n dt on the enclosing-cube
// midpoint grid with ball indicator.
CalEstimate calabi_of_cutoff_loop(const nullhomotopy::BasedHomotopy& A, const CutoffProfile& prof,
                                  const BallTriple& balls, const CalOptions& opts);

// K = max over an (s,t) grid of sup_{B3} |d_t H_{s,t}| = rho3^2 max ||d_t Q||_2.
double time_derivative_bound(const nullhomotopy::BasedHomotopy& A, double rho3,
                             int grid = 33, double h_t = hamflow::kStepT);

struct ScalingRow {
  double rho3 = 0.0;
  double cal_abs = 0.0;
  double err_bound = 0.0;
  double certified_bound = 0.0;  // K * Vol(B3)
};

struct LemmaOptions {
  double margin = 1.25;
  CalOptions cal;
  int loop_samples = 256;
  int tracer_count = 24;
  int tracer_t_samples = 9;
  int containment_retries = 4;
  int max_halvings = 12;
  std::uint64_t seed = 12345;
};

struct LemmaLoopResult {
  BallTriple balls;
  double epsilon = 0.0;
  CalEstimate cal;
  double certified_K = 0.0;
  double certified_bound = 0.0;   // K * Vol(B3)
  double closure_residual = 0.0;  // ||g_{s,0}(x)-x||, ||g_{s,1}(x)-x|| over tracers
  double interp_residual = 0.0;   // ||g_t x - A_t x|| on B1 tracers
  double support_residual = 0.0;  // ||g_t x - x|| outside B3 (exact zero expected)
  double witness_residual = 0.0;  // homotopy witness endpoint identities over s
  double g_origin_residual = 0.0; // |G_{1,t}(0)|
  double containment_max_radius = 0.0;  // max |orbit| from the B1 sphere
  int halvings_used = 0;
  int sigma_steps_used = 0;
  bool passed = false;
  std::vector<ScalingRow> history;

  // loop evaluator, inverse, and generator sampler (single-point paths)
  std::function<Vec(double t, const Vec& x)> g;
  std::function<Vec(double t, const Vec& y)> g_inv;
  std::function<double(double t, const Vec& x)> G;
};

// Lemma driver: requires Maslov index 0, certifies orbit containment,
// estimates Cal(g), and halves rho3 (max_halvings budget) until
// |Cal| + error < eps.
LemmaLoopResult lemma_loop(const symplin::MatrixLoop& A,
                           const nullhomotopy::BasedHomotopy& homotopy, double rho3_init,
                           double eps, const LemmaOptions& opts = {});

// One construction per radius; sigma steps scale with the radius.
std::vector<ScalingRow> scaling_study(const symplin::MatrixLoop& A,
                                      const nullhomotopy::BasedHomotopy& homotopy,
                                      const std::vector<double>& radii,
                                      const LemmaOptions& opts = {});

std::string scaling_to_csv(const std::vector<ScalingRow>& rows);

struct PdeSample {
  double s = 0.0;
  Vec x;
  double lhs = 0.0;       // d_s G_{s,t}(x)
  double rhs = 0.0;       // a d_t H_{s,t}(x) - {G_{s,t}, a H_{s,t}}(x)
  double residual = 0.0;
};

struct PdeReport {
  std::vector<PdeSample> samples;
  double max_residual = 0.0;
};

// Evaluates both sides of d_s G = a d_t H - {G, a H} by independent
// numerical differentiation at the given samples. Report only.
PdeReport pde_crosscheck(const nullhomotopy::BasedHomotopy& A, const CutoffProfile& prof,
                         const std::vector<double>& s_grid, double t,
                         const std::vector<Vec>& x_samples, int sigma_steps = 256);

}  // namespace calabi::cutoff
