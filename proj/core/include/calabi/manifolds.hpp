#pragma once

#include "calabi/common.hpp"
#include "calabi/hamflow.hpp"
#include "calabi/symplin.hpp"

#include <functional>
#include <string>
#include <vector>

// Concrete geometry for products of round spheres with height moment
// maps: the circle action, the explicit equivariant Darboux chart at a
// pole fixed point, volume and mean-value quadrature, projective-space
// linearizations, and the action-Maslov scalar.

namespace calabi::manifolds {

// S^2(r_1) x ... x S^2(r_m) with moment map F = sum_j 2 pi c_j z_j and a
// distinguished pole fixed point (one sign per factor, +1 north / -1
// south). Points are concatenated Cartesian triples.
struct SphereProduct {
  std::vector<double> radii;
  std::vector<double> weights;    // c_j
  std::vector<int> fixed_signs;   // +1 or -1 per factor

  int m() const { return static_cast<int>(radii.size()); }
  void validate() const;
  Vec fixed_point() const;
  bool on_product(const Vec& p, double tol = 1e-9) const;

  // per-factor rotation rate c_j / r_j in turns per unit time
  double rate(int j) const { return weights[j] / radii[j]; }
};

// weights of the Example-2.3 family: c_j = r_j for j < m, c_m = (m-1) r_m
std::vector<double> height_action_weights(const std::vector<double>& radii);

// F(p) = sum_j 2 pi c_j z_j
double moment(const SphereProduct& X, const Vec& p);

// integral against omega^m (the m! ledger factor included)
hamflow::IntegralResult mean_integral(const SphereProduct& X, int azimuth = 48, int height = 24);
hamflow::IntegralResult integrate_function(const SphereProduct& X,
                                           const std::function<double(const Vec&)>& f,
                                           int azimuth = 48, int height = 24);
double volume(const SphereProduct& X);  // closed form m! prod 4 pi r_j^2

// The Hamiltonian circle action: rotates factor j about its vertical axis
// by 2 pi rate_j t, with the sense calibrated once against the hamflow
// flow of the moment map (convention-robust). Throws "not a loop" when a
// rate is not an integer.
Vec sphere_action(const SphereProduct& X, const Vec& p, double t);

// Chart between a neighborhood of the fixed point and a ball around 0 in
// R^{2m}, symplectic for the product area form, in which the action is
// linear.
struct ChartSpec {
  std::function<Vec(const Vec&)> forward;   // manifold point -> chart coords
  std::function<Vec(const Vec&)> inverse;
  Vec base_point;
  double radius = 0.0;
  bool clamped = false;     // true when the requested radius was reduced
  int n = 0;                // half-dimension = m
};

// Polar-coordinate chart at the pole fixed point; requested_radius 0
// picks the default; too-large requests are clamped with a note.
ChartSpec darboux_chart(const SphereProduct& X, double requested_radius = 0.0);

// Ambient symplectic pairing of the product area form at p (matrix acting
// on ambient R^{3m} tangent vectors).
Mat product_form_matrix(const SphereProduct& X, const Vec& p);

// max over sample points of || D^T Omega D - J || for the numerical chart
// Jacobian D (pullback fidelity)
double chart_pullback_residual(const SphereProduct& X, const ChartSpec& chart, int points,
                               std::uint64_t seed);

// t -> finite-difference differential at 0 of chart o f_t o chart^{-1}
symplin::MatrixLoop linearized_loop(const SphereProduct& X, const ChartSpec& chart, int K = 256);

// sup over chart-ball samples of ||(chart o f_t o chart^{-1})(w) - L_t w||
double equivariance_residual(const SphereProduct& X, const ChartSpec& chart,
                             const symplin::MatrixLoop& lin, int points, std::uint64_t seed);

struct CpnReport {
  symplin::MatrixLoop loop;
  long maslov_index = 0;
  double maslov_residual = 0.0;
};

// Linearization of the weighted projective action at [1:0:...:0] in the
// affine chart; requires balanced nonzero weights.
CpnReport cpn_linearization(const symplin::WeightVector& a, int K = 256);

// Mean bookkeeping after cutting a ball: mean_before must be 0; the new
// mean is -ball_integral.
double blowup_mean(double mean_before, double ball_integral, double tol = 1e-12);

struct ActionMaslov {
  double I = 0.0;
  bool noncontractible = false;  // |I| above tolerance at a Maslov-zero fixed point
};

// I = -(F(s) - mean/Vol): the symplectic action of the constant orbit for
// the mean-normalized Hamiltonian; the Maslov term vanishes at a
// Maslov-zero fixed point.
ActionMaslov action_maslov(double F_at_s, double mean_F, double Vol, double tol = 1e-9);

}  // namespace calabi::manifolds
