#include "calabi/hamflow.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace calabi::hamflow {

namespace {
constexpr double kPi = std::numbers::pi;

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// Gauss-Legendre nodes and weights on [a, b] (Newton on the recurrence).
void gauss_legendre(int n, double a, double b, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      const double z_prev = z;
      z = z - p0 / pp;
      if (std::abs(z - z_prev) < 1e-15) break;
    }
    const double xm = 0.5 * (b + a), xl = 0.5 * (b - a);
    x[i] = xm - xl * z;
    x[n - 1 - i] = xm + xl * z;
    w[i] = 2.0 * xl / ((1.0 - z * z) * pp * pp);
    w[n - 1 - i] = w[i];
  }
}

}  // namespace

Vec ScalarField::grad(double t, const Vec& x) const {
  if (gradient) return gradient(t, x);
  Vec g(x.size());
  Vec xp = x, xm = x;
  for (int k = 0; k < x.size(); ++k) {
    xp(k) = x(k) + h_x;
    xm(k) = x(k) - h_x;
    g(k) = (value(t, xp) - value(t, xm)) / (2.0 * h_x);
    xp(k) = x(k);
    xm(k) = x(k);
  }
  return g;
}

ScalarField quadratic_field(const Mat& Q) {
  ScalarField f;
  f.value = [Q](double, const Vec& x) { return x.dot(Q * x); };
  f.gradient = [Q](double, const Vec& x) { return Vec(2.0 * (Q * x)); };
  return f;
}

Vec hamiltonian_vector_field(const ScalarField& H, double t, const Vec& x) {
  Vec g = H.grad(t, x);
  Vec out;
  apply_J(g, out);
  return -out;
}

Vec flow(const ScalarField& H, const Vec& x0, double t0, double t1, int rk_steps,
         double domain_radius) {
  if (rk_steps < 1) throw Error(Error::Kind::precondition, "flow: rk_steps must be >= 1");
  const double h = (t1 - t0) / rk_steps;
  Vec x = x0;
  Vec k1, k2, k3, k4;
  for (int i = 0; i < rk_steps; ++i) {
    const double t = t0 + i * h;
    k1 = hamiltonian_vector_field(H, t, x);
    k2 = hamiltonian_vector_field(H, t + 0.5 * h, Vec(x + 0.5 * h * k1));
    k3 = hamiltonian_vector_field(H, t + 0.5 * h, Vec(x + 0.5 * h * k2));
    k4 = hamiltonian_vector_field(H, t + h, Vec(x + h * k3));
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (x.norm() > domain_radius) {
      std::ostringstream os;
      os << "flow: trajectory exited the domain at t = " << format_double(t + h);
      throw Error(Error::Kind::domain_escape, os.str());
    }
  }
  return x;
}

Mat FlowMap::jacobian_fd(const Vec& x, double h) const {
  const int d = static_cast<int>(x.size());
  Mat Jac(d, d);
  Vec xp = x, xm = x;
  for (int k = 0; k < d; ++k) {
    xp(k) = x(k) + h;
    xm(k) = x(k) - h;
    Jac.col(k) = ((*this)(xp) - (*this)(xm)) / (2.0 * h);
    xp(k) = x(k);
    xm(k) = x(k);
  }
  return Jac;
}

double poisson_bracket(const ScalarField& F1, const ScalarField& F2, double t, const Vec& x) {
  const Vec g1 = F1.grad(t, x);
  Vec Jg2;
  apply_J(F2.grad(t, x), Jg2);
  return g1.dot(-Jg2);
}

namespace {

Vec flow_time_derivative(const FlowFamily& g, double t, const Vec& base_point) {
  return (g.forward(t + g.h_t, base_point) - g.forward(t - g.h_t, base_point)) / (2.0 * g.h_t);
}

double segment_integral(const FlowFamily& g, double t, const Vec& from, const Vec& to,
                        int segment_nodes) {
  std::vector<double> nodes, weights;
  gauss_legendre(segment_nodes, 0.0, 1.0, nodes, weights);
  const Vec dir = to - from;
  std::vector<double> terms(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Vec z = from + nodes[i] * dir;
    const Vec y = flow_time_derivative(g, t, g.inverse(t, z));
    terms[i] = weights[i] * omega0(y, dir);
  }
  return pairwise_sum(terms);
}

}  // namespace

double recover_generating_hamiltonian(const FlowFamily& g, double t, const Vec& x,
                                      int segment_nodes) {
  return segment_integral(g, t, Vec::Zero(x.size()), x, segment_nodes);
}

double recover_along_polyline(const FlowFamily& g, double t, const Vec& waypoint, const Vec& x,
                              int segment_nodes) {
  return segment_integral(g, t, Vec::Zero(x.size()), waypoint, segment_nodes) +
         segment_integral(g, t, waypoint, x, segment_nodes);
}

namespace {

struct BallSum {
  double integral = 0.0;  // Lebesgue
  double boundary_max = 0.0;
  double l1 = 0.0;
};

BallSum ball_midpoint(const std::function<double(const Vec&)>& field, int dim, double radius,
                      int per_axis) {
  const double h = 2.0 * radius / per_axis;
  const double cell = std::pow(h, dim);
  std::size_t total = 1;
  for (int k = 0; k < dim; ++k) total *= static_cast<std::size_t>(per_axis);
  std::vector<double> vals;
  vals.reserve(total / 3);
  BallSum out;
  Vec x(dim);
  const double r2 = radius * radius;
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rem = idx;
    double nrm2 = 0.0;
    for (int k = 0; k < dim; ++k) {
      const int i = static_cast<int>(rem % per_axis);
      rem /= per_axis;
      x(k) = -radius + (i + 0.5) * h;
      nrm2 += x(k) * x(k);
    }
    if (nrm2 > r2) continue;
    const double v = field(x);
    vals.push_back(v);
    out.l1 += std::abs(v);
    if (nrm2 > 0.9 * r2) out.boundary_max = std::max(out.boundary_max, std::abs(v));
  }
  out.integral = pairwise_sum(vals) * cell;
  out.l1 *= cell;
  return out;
}

BallSum ball_quasirandom(const std::function<double(const Vec&)>& field, int dim, double radius,
                         std::uint64_t seed, std::size_t samples) {
  Rng rng(seed);
  const double cube = std::pow(2.0 * radius, dim);
  Vec x(dim);
  std::vector<double> vals(samples);
  BallSum out;
  for (std::size_t i = 0; i < samples; ++i) {
    double nrm2 = 0.0;
    for (int k = 0; k < dim; ++k) {
      x(k) = rng.uniform(-radius, radius);
      nrm2 += x(k) * x(k);
    }
    double v = 0.0;
    if (nrm2 <= radius * radius) {
      v = field(x);
      if (nrm2 > 0.9 * radius * radius) out.boundary_max = std::max(out.boundary_max, std::abs(v));
    }
    vals[i] = v;
    out.l1 += std::abs(v);
  }
  out.integral = pairwise_sum(vals) / static_cast<double>(samples) * cube;
  out.l1 *= cube / static_cast<double>(samples);
  return out;
}

struct SphereGrid {
  // nodes on one factor: position (3-vector) and weight
  std::vector<Eigen::Vector3d> points;
  std::vector<double> weights;
};

SphereGrid sphere_factor_grid(double r, int azimuth, int height) {
  SphereGrid g;
  g.points.reserve(static_cast<std::size_t>(azimuth) * height);
  g.weights.reserve(g.points.capacity());
  const double dth = 2.0 * kPi / azimuth;
  const double dz = 2.0 * r / height;
  for (int a = 0; a < azimuth; ++a) {
    const double th = (a + 0.5) * dth;
    for (int hh = 0; hh < height; ++hh) {
      const double z = -r + (hh + 0.5) * dz;
      const double rho = std::sqrt(std::max(0.0, r * r - z * z));
      g.points.emplace_back(rho * std::cos(th), rho * std::sin(th), z);
      g.weights.push_back(r * dth * dz);  // dA = r dtheta dz
    }
  }
  return g;
}

double sphere_product_sum(const std::function<double(const Vec&)>& field,
                          const std::vector<double>& radii, int azimuth, int height) {
  const int m = static_cast<int>(radii.size());
  std::vector<SphereGrid> grids;
  grids.reserve(m);
  for (double r : radii) grids.push_back(sphere_factor_grid(r, azimuth, height));
  std::size_t total = 1;
  for (const auto& g : grids) total *= g.points.size();
  Vec x(3 * m);
  std::vector<double> vals(total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rem = idx;
    double w = 1.0;
    for (int j = 0; j < m; ++j) {
      const std::size_t i = rem % grids[j].points.size();
      rem /= grids[j].points.size();
      x.segment<3>(3 * j) = grids[j].points[i];
      w *= grids[j].weights[i];
    }
    vals[idx] = w * field(x);
  }
  return pairwise_sum(vals);
}

}  // namespace

std::string Quadrature::describe() const {
  std::ostringstream os;
  if (region == Region::ball) {
    os << "ball dim=" << dim << " radius=" << format_double(radius);
    if (rule == Rule::midpoint)
      os << " midpoint per_axis=" << per_axis;
    else
      os << " quasirandom samples=" << qr_samples << " seed=" << seed;
  } else {
    os << "sphere_product radii=";
    for (std::size_t i = 0; i < sphere_radii.size(); ++i)
      os << (i ? "," : "") << format_double(sphere_radii[i]);
    os << " azimuth=" << azimuth << " height=" << height;
  }
  return os.str();
}

IntegralResult integrate(const std::function<double(const Vec&)>& field, const Quadrature& quad) {
  IntegralResult res;
  if (quad.region == Quadrature::Region::ball) {
    if (quad.dim % 2 != 0)
      throw Error(Error::Kind::dimension, "integrate: ball dimension must be even");
    const int n = quad.dim / 2;
    const double ledger = factorial(n);  // omega0^n = n! Lebesgue
    if (quad.rule == Quadrature::Rule::midpoint) {
      const BallSum fine = ball_midpoint(field, quad.dim, quad.radius, quad.per_axis);
      const BallSum coarse =
          ball_midpoint(field, quad.dim, quad.radius, std::max(2, quad.per_axis / 2));
      res.value = ledger * fine.integral;
      res.error_bound =
          ledger * ((4.0 / 3.0) * std::abs(fine.integral - coarse.integral) + 1e-13 * fine.l1);
      res.boundary_max = fine.boundary_max;
    } else {
      const BallSum a = ball_quasirandom(field, quad.dim, quad.radius, quad.seed, quad.qr_samples);
      const BallSum b =
          ball_quasirandom(field, quad.dim, quad.radius, quad.seed ^ 0x9e3779b97f4a7c15ULL,
                           quad.qr_samples);
      res.value = ledger * 0.5 * (a.integral + b.integral);
      res.error_bound = ledger * (std::abs(a.integral - b.integral) + 1e-13 * a.l1);
      res.boundary_max = std::max(a.boundary_max, b.boundary_max);
    }
  } else {
    const int m = static_cast<int>(quad.sphere_radii.size());
    if (m < 1) throw Error(Error::Kind::precondition, "integrate: empty sphere product");
    const double ledger = factorial(m);
    const double fine = sphere_product_sum(field, quad.sphere_radii, quad.azimuth, quad.height);
    const double coarse = sphere_product_sum(field, quad.sphere_radii,
                                             std::max(4, quad.azimuth / 2),
                                             std::max(2, quad.height / 2));
    res.value = ledger * fine;
    res.error_bound = ledger * ((4.0 / 3.0) * std::abs(fine - coarse) + 1e-13 * std::abs(fine));
  }
  return res;
}

CalabiResult calabi(const ScalarField& H, const Quadrature& quad, int t_samples) {
  if (t_samples < 1) throw Error(Error::Kind::precondition, "calabi: t_samples must be >= 1");
  CalabiResult out;
  std::vector<double> slices(t_samples);
  double bound = 0.0;
  for (int k = 0; k < t_samples; ++k) {
    const double t = (k + 0.5) / t_samples;
    const IntegralResult r = integrate([&](const Vec& x) { return H(t, x); }, quad);
    slices[k] = r.value;
    bound += r.error_bound;
  }
  out.value = pairwise_sum(slices) / t_samples;
  out.error_bound = bound / t_samples;
  return out;
}

HoferEstimate hofer_length_estimate(const ScalarField& H, const Quadrature& quad, int t_samples) {
  HoferEstimate out;
  std::vector<double> osc(t_samples);
  for (int k = 0; k < t_samples; ++k) {
    const double t = (k + 0.5) / t_samples;
    double mx = -std::numeric_limits<double>::infinity();
    double mn = std::numeric_limits<double>::infinity();
    auto visit = [&](const Vec& x) {
      const double v = H(t, x);
      mx = std::max(mx, v);
      mn = std::min(mn, v);
      return 0.0;
    };
    integrate(visit, quad);
    osc[k] = mx - mn;
  }
  out.value = pairwise_sum(osc) / t_samples;
  out.grid = quad.describe();
  return out;
}

double region_volume(const Quadrature& quad) {
  if (quad.region == Quadrature::Region::ball) {
    const int n = quad.dim / 2;
    // n! * pi^n rho^{2n} / n! = pi^n rho^{2n}
    return std::pow(kPi, n) * std::pow(quad.radius, 2 * n);
  }
  double vol = factorial(static_cast<int>(quad.sphere_radii.size()));
  for (double r : quad.sphere_radii) vol *= 4.0 * kPi * r * r;
  return vol;
}

}  // namespace calabi::hamflow
