#pragma once

#include "calabi/common.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

// Time-dependent Hamiltonian dynamics on chart domains of R^{2n}:
// vector fields and RK4 flows under the convention ledger, recovery of
// generating Hamiltonians from flows, Poisson brackets, volume quadrature
// against omega^n, Calabi integrals, and Hofer-length estimates.

namespace calabi::hamflow {

inline constexpr double kTolFlow = 1e-5;   // tolerance for numerically integrated flows
inline constexpr double kStepX = 1e-5;     // central-difference step for gradients/Jacobians
inline constexpr double kStepT = 1e-4;     // central-difference step for time derivatives
inline constexpr int kDefaultRkSteps = 200;  // RK4 steps per unit time

// A time-dependent Hamiltonian on a chart of R^{2n}. The gradient is
// analytic when provided, otherwise central finite differences with
// step h_x.
struct ScalarField {
  std::function<double(double t, const Vec& x)> value;
  std::function<Vec(double t, const Vec& x)> gradient;  // optional
  double support_radius = std::numeric_limits<double>::infinity();
  double h_x = kStepX;

  double operator()(double t, const Vec& x) const { return value(t, x); }
  Vec grad(double t, const Vec& x) const;
};

ScalarField quadratic_field(const Mat& Q);  // H(x) = <x, Qx>, time-independent

// X_H = -J grad H; for H = <x,Qx> this is -2JQx.
Vec hamiltonian_vector_field(const ScalarField& H, double t, const Vec& x);

// Classical RK4 with N uniform steps. Throws domain_escape (with the exit
// time in the message) if the trajectory leaves the ball of radius
// `domain_radius`.
Vec flow(const ScalarField& H, const Vec& x0, double t0, double t1, int rk_steps = kDefaultRkSteps,
         double domain_radius = std::numeric_limits<double>::infinity());

// A numerically integrated symplectic flow; invertible by reverse
// integration.
struct FlowMap {
  ScalarField H;
  double t0 = 0.0;
  double t1 = 1.0;
  int rk_steps = kDefaultRkSteps;
  double domain_radius = std::numeric_limits<double>::infinity();

  Vec operator()(const Vec& x) const { return flow(H, x, t0, t1, rk_steps, domain_radius); }
  Vec inverse(const Vec& y) const { return flow(H, y, t1, t0, rk_steps, domain_radius); }
  Mat jacobian_fd(const Vec& x, double h = kStepX) const;
};

// {F1, F2} = dF1(X_{F2}) = grad F1 . (-J grad F2).
double poisson_bracket(const ScalarField& F1, const ScalarField& F2, double t, const Vec& x);

// A one-parameter family of diffeomorphisms g_t with its inverse,
// differentiable in t by central differences.
struct FlowFamily {
  std::function<Vec(double t, const Vec& x)> forward;
  std::function<Vec(double t, const Vec& y)> inverse;
  double h_t = kStepT;
};

// G_t(x) = int_0^1 omega0(Y_t(sigma x), x) dsigma with
// Y_t = (d_t g_t) o g_t^{-1}; the unique primitive of iota_Y omega0 with
// G_t(0) = 0. `segment_nodes` Gauss-Legendre nodes on [0,1].
double recover_generating_hamiltonian(const FlowFamily& g, double t, const Vec& x,
                                      int segment_nodes = 12);

// Same line integral along the two-leg polyline 0 -> waypoint -> x;
// closedness of iota_Y omega0 makes it path independent, which callers
// use as the non-closedness check.
double recover_along_polyline(const FlowFamily& g, double t, const Vec& waypoint, const Vec& x,
                              int segment_nodes = 12);

// Quadrature specification for integrals against omega^n. Ball regions
// use a tensor midpoint grid on the enclosing cube with the ball
// indicator; sphere products use per-factor azimuth x height grids
// (exact for low-degree zonal integrands). The quasi-random alternative
// is seeded and deterministic.
struct Quadrature {
  enum class Region { ball, sphere_product };
  enum class Rule { midpoint, quasirandom };

  Region region = Region::ball;
  Rule rule = Rule::midpoint;
  int dim = 4;          // ambient dimension 2n (ball)
  double radius = 1.0;  // ball radius
  int per_axis = 24;

  std::vector<double> sphere_radii;  // per factor
  int azimuth = 48;
  int height = 24;

  std::uint64_t seed = 12345;
  std::size_t qr_samples = 1u << 18;

  std::string describe() const;
};

struct IntegralResult {
  double value = 0.0;        // against omega^n (n! ledger factor included)
  double error_bound = 0.0;  // from the built-in refinement step
  double boundary_max = 0.0; // max |field| seen near the region boundary
};

// Spatial integral of a fixed-time field against omega^n.
IntegralResult integrate(const std::function<double(const Vec&)>& field, const Quadrature& quad);

struct CalabiResult {
  double value = 0.0;
  double error_bound = 0.0;
};

// Cal(H) = int_0^1 integrate(H(t, .)) dt, composite midpoint in t.
CalabiResult calabi(const ScalarField& H, const Quadrature& quad, int t_samples = 16);

struct HoferEstimate {
  double value = 0.0;  // int_0^1 (max H - min H) dt on the sampling grid
  std::string grid;
};

// Grid-sampled oscillation integral; a lower bound of the true Hofer
// length of the generated path up to grid error.
HoferEstimate hofer_length_estimate(const ScalarField& H, const Quadrature& quad,
                                    int t_samples = 16);

// omega^n volume of the quadrature region (n! ledger factor included).
double region_volume(const Quadrature& quad);

}  // namespace calabi::hamflow
