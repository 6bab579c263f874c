#include "calabi/manifolds.hpp"

#include <cmath>
#include <numbers>

namespace calabi::manifolds {

namespace {
constexpr double kPi = std::numbers::pi;

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}
}  // namespace

void SphereProduct::validate() const {
  if (radii.empty() || radii.size() != weights.size() || radii.size() != fixed_signs.size())
    throw Error(Error::Kind::precondition, "SphereProduct: radii/weights/signs size mismatch");
  for (double r : radii)
    if (!(r > 0.0)) throw Error(Error::Kind::precondition, "SphereProduct: radii must be positive");
  for (int s : fixed_signs)
    if (s != 1 && s != -1)
      throw Error(Error::Kind::precondition, "SphereProduct: fixed point signs must be +-1");
}

Vec SphereProduct::fixed_point() const {
  Vec p = Vec::Zero(3 * m());
  for (int j = 0; j < m(); ++j) p(3 * j + 2) = fixed_signs[j] * radii[j];
  return p;
}

bool SphereProduct::on_product(const Vec& p, double tol) const {
  if (p.size() != 3 * m()) return false;
  for (int j = 0; j < m(); ++j) {
    const double rr = p.segment<3>(3 * j).squaredNorm();
    if (std::abs(rr - radii[j] * radii[j]) > tol * std::max(1.0, radii[j] * radii[j])) return false;
  }
  return true;
}

std::vector<double> height_action_weights(const std::vector<double>& radii) {
  std::vector<double> w = radii;
  if (!w.empty()) w.back() *= static_cast<double>(radii.size()) - 1.0;
  return w;
}

double moment(const SphereProduct& X, const Vec& p) {
  if (!X.on_product(p, 1e-6))
    throw Error(Error::Kind::precondition, "moment: point is not on the sphere product");
  double F = 0.0;
  for (int j = 0; j < X.m(); ++j) F += 2.0 * kPi * X.weights[j] * p(3 * j + 2);
  return F;
}

hamflow::IntegralResult integrate_function(const SphereProduct& X,
                                           const std::function<double(const Vec&)>& f,
                                           int azimuth, int height) {
  hamflow::Quadrature quad;
  quad.region = hamflow::Quadrature::Region::sphere_product;
  quad.sphere_radii = X.radii;
  quad.azimuth = azimuth;
  quad.height = height;
  return hamflow::integrate(f, quad);
}

hamflow::IntegralResult mean_integral(const SphereProduct& X, int azimuth, int height) {
  return integrate_function(X, [&X](const Vec& p) {
    double F = 0.0;
    for (int j = 0; j < X.m(); ++j) F += 2.0 * kPi * X.weights[j] * p(3 * j + 2);
    return F;
  }, azimuth, height);
}

double volume(const SphereProduct& X) {
  double vol = factorial(X.m());
  for (double r : X.radii) vol *= 4.0 * kPi * r * r;
  return vol;
}

namespace {

// Rotation sense per factor under the ledger, calibrated once by flowing
// the moment map in a symplectic factor chart (q,p) = (theta, r z) and
// comparing senses. The product area form is pinned as r dtheta ^ dz on
// every factor, for which the calibration yields +1.
int calibrate_sense(double r, double c) {
  hamflow::ScalarField H;
  H.value = [c, r](double, const Vec& qp) { return 2.0 * kPi * c * qp(1) / r; };
  const Vec start = Vec::Zero(2);  // equator point, theta = 0
  const double dt = 1e-3;
  const Vec moved = hamflow::flow(H, start, 0.0, dt, 8);
  const double dtheta = moved(0);
  const double expected = 2.0 * kPi * (c / r) * dt;
  return (dtheta * expected >= 0.0) ? 1 : -1;
}

void rotate_factor(Vec& p, int j, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  const double x = p(3 * j), y = p(3 * j + 1);
  p(3 * j) = c * x - s * y;
  p(3 * j + 1) = s * x + c * y;
}

}  // namespace

Vec sphere_action(const SphereProduct& X, const Vec& p, double t) {
  if (!X.on_product(p, 1e-6))
    throw Error(Error::Kind::precondition, "sphere_action: point is not on the sphere product");
  Vec out = p;
  for (int j = 0; j < X.m(); ++j) {
    const double rate = X.rate(j);
    if (std::abs(rate - std::lround(rate)) > 1e-9)
      throw Error(Error::Kind::precondition,
                  "sphere_action: not a loop (factor rate is not an integer)");
    static thread_local std::vector<std::pair<std::pair<double, double>, int>> cache;
    int sense = 0;
    for (const auto& e : cache)
      if (e.first.first == X.radii[j] && e.first.second == X.weights[j]) sense = e.second;
    if (sense == 0) {
      sense = calibrate_sense(X.radii[j], X.weights[j]);
      cache.push_back({{X.radii[j], X.weights[j]}, sense});
    }
    rotate_factor(out, j, 2.0 * kPi * rate * t * sense);
  }
  return out;
}

Mat product_form_matrix(const SphereProduct& X, const Vec& p) {
  const int m = X.m();
  Mat Omega = Mat::Zero(3 * m, 3 * m);
  for (int j = 0; j < m; ++j) {
    const Eigen::Vector3d nrm = p.segment<3>(3 * j) / X.radii[j];
    // omega(xi, eta) = n . (xi x eta)
    Mat blk(3, 3);
    blk << 0.0, -nrm(2), nrm(1),
           nrm(2), 0.0, -nrm(0),
           -nrm(1), nrm(0), 0.0;
    Omega.block<3, 3>(3 * j, 3 * j) = blk.transpose();
  }
  return Omega;
}

ChartSpec darboux_chart(const SphereProduct& X, double requested_radius) {
  X.validate();
  const int m = X.m();
  double rmin = X.radii[0];
  for (double r : X.radii) rmin = std::min(rmin, r);
  const double hard_limit = 1.8 * rmin;  // polar radius degenerates at 2r
  ChartSpec chart;
  chart.n = m;
  chart.base_point = X.fixed_point();
  chart.radius = requested_radius > 0.0 ? requested_radius : 0.75 * std::sqrt(2.0) * rmin;
  if (chart.radius > hard_limit) {
    chart.radius = hard_limit;
    chart.clamped = true;
  }
  const auto radii = X.radii;
  const auto signs = X.fixed_signs;

  chart.forward = [radii, signs, m](const Vec& p) {
    Vec w(2 * m);
    for (int j = 0; j < m; ++j) {
      const double r = radii[j];
      const double z = p(3 * j + 2);
      const double theta = std::atan2(p(3 * j + 1), p(3 * j));
      double rho2, sigma;
      if (signs[j] > 0) {
        rho2 = 2.0 * r * (r - z);
        sigma = theta;
      } else {
        rho2 = 2.0 * r * (r + z);
        sigma = -theta;
      }
      const double rho = std::sqrt(std::max(0.0, rho2));
      w(j) = rho * std::cos(sigma);
      w(m + j) = rho * std::sin(sigma);
    }
    return w;
  };

  chart.inverse = [radii, signs, m](const Vec& w) {
    Vec p(3 * m);
    for (int j = 0; j < m; ++j) {
      const double r = radii[j];
      const double rho2 = w(j) * w(j) + w(m + j) * w(m + j);
      double z, theta;
      if (signs[j] > 0) {
        z = r - rho2 / (2.0 * r);
        theta = std::atan2(w(m + j), w(j));
      } else {
        z = rho2 / (2.0 * r) - r;
        theta = -std::atan2(w(m + j), w(j));
      }
      z = std::clamp(z, -r, r);
      const double horiz = std::sqrt(std::max(0.0, r * r - z * z));
      p(3 * j) = horiz * std::cos(theta);
      p(3 * j + 1) = horiz * std::sin(theta);
      p(3 * j + 2) = z;
    }
    return p;
  };
  return chart;
}

double chart_pullback_residual(const SphereProduct& X, const ChartSpec& chart, int points,
                               std::uint64_t seed) {
  Rng rng(seed);
  const int d = 2 * chart.n;
  const Mat J = standard_J(chart.n);
  const double h = 1e-5;
  double worst = 0.0;
  for (int k = 0; k < points; ++k) {
    Vec w(d);
    double nrm2 = 2.0;
    while (nrm2 > 1.0) {
      for (int i = 0; i < d; ++i) w(i) = rng.uniform(-1.0, 1.0);
      nrm2 = w.squaredNorm();
    }
    w *= 0.8 * chart.radius;
    Mat D(3 * X.m(), d);
    Vec wp = w, wm = w;
    for (int c = 0; c < d; ++c) {
      wp(c) = w(c) + h;
      wm(c) = w(c) - h;
      D.col(c) = (chart.inverse(wp) - chart.inverse(wm)) / (2.0 * h);
      wp(c) = w(c);
      wm(c) = w(c);
    }
    const Mat Omega = product_form_matrix(X, chart.inverse(w));
    worst = std::max(worst, ((D.transpose() * Omega * D) - J).cwiseAbs().maxCoeff());
  }
  return worst;
}

symplin::MatrixLoop linearized_loop(const SphereProduct& X, const ChartSpec& chart, int K) {
  const Vec base = chart.base_point;
  const Vec moved = sphere_action(X, base, 0.37);
  if ((moved - base).norm() > 1e-9)
    throw Error(Error::Kind::precondition,
                "linearized_loop: chart base point is not fixed by the action");
  const int d = 2 * chart.n;
  const double h = 1e-5;
  auto conjugated = [&X, &chart](double t, const Vec& w) {
    return chart.forward(sphere_action(X, chart.inverse(w), t));
  };
  symplin::MatrixLoop loop;
  loop.n = chart.n;
  loop.t.resize(K + 1);
  loop.samples.resize(K + 1);
  for (int k = 0; k <= K; ++k) {
    const double t = static_cast<double>(k) / K;
    loop.t[k] = t;
    Mat M(d, d);
    Vec e = Vec::Zero(d);
    for (int c = 0; c < d; ++c) {
      e(c) = h;
      M.col(c) = (conjugated(t, e) - conjugated(t, Vec(-e))) / (2.0 * h);
      e(c) = 0.0;
    }
    loop.samples[k] = M;
  }
  auto Xcopy = X;
  auto chcopy = chart;
  loop.eval = [Xcopy, chcopy, h, d](double t) {
    Mat M(d, d);
    Vec e = Vec::Zero(d);
    for (int c = 0; c < d; ++c) {
      e(c) = h;
      M.col(c) = (chcopy.forward(sphere_action(Xcopy, chcopy.inverse(e), t)) -
                  chcopy.forward(sphere_action(Xcopy, chcopy.inverse(Vec(-e)), t))) /
                 (2.0 * h);
      e(c) = 0.0;
    }
    return M;
  };
  return loop;
}

double equivariance_residual(const SphereProduct& X, const ChartSpec& chart,
                             const symplin::MatrixLoop& lin, int points, std::uint64_t seed) {
  Rng rng(seed);
  const int d = 2 * chart.n;
  double worst = 0.0;
  for (int k = 0; k < points; ++k) {
    Vec w(d);
    double nrm2 = 2.0;
    while (nrm2 > 1.0) {
      for (int i = 0; i < d; ++i) w(i) = rng.uniform(-1.0, 1.0);
      nrm2 = w.squaredNorm();
    }
    w *= 0.7 * chart.radius;
    for (double t : {0.15, 0.4, 0.85}) {
      const Vec lhs = chart.forward(sphere_action(X, chart.inverse(w), t));
      const Mat L = lin.eval ? lin.eval(t) : lin.samples[static_cast<std::size_t>(
                                                 std::lround(t * (lin.sample_count() - 1)))];
      worst = std::max(worst, (lhs - L * w).norm());
    }
  }
  return worst;
}

CpnReport cpn_linearization(const symplin::WeightVector& a, int K) {
  bool all_zero = true;
  for (long v : a.a)
    if (v != 0) all_zero = false;
  if (!a.balanced() || all_zero)
    throw Error(Error::Kind::unbalanced_weights,
                "cpn_linearization: weights must be balanced and nonzero");
  CpnReport rep;
  rep.loop = symplin::rotation_loop(a, K);
  const auto det = symplin::maslov_index_detailed(rep.loop);
  rep.maslov_index = det.index;
  rep.maslov_residual = det.residual;
  return rep;
}

double blowup_mean(double mean_before, double ball_integral, double tol) {
  if (std::abs(mean_before) > tol)
    throw Error(Error::Kind::unsupported,
                "blowup_mean: only the mean-zero normalization is supported");
  return -ball_integral;
}

ActionMaslov action_maslov(double F_at_s, double mean_F, double Vol, double tol) {
  if (!(Vol > 0.0)) throw Error(Error::Kind::precondition, "action_maslov: Vol must be positive");
  ActionMaslov am;
  am.I = -(F_at_s - mean_F / Vol);
  am.noncontractible = std::abs(am.I) > tol;
  return am;
}

}  // namespace calabi::manifolds
