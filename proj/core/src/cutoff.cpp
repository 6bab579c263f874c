#include "calabi/cutoff.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace calabi::cutoff {

namespace {

constexpr double kPi = std::numbers::pi;

// Gauss-Legendre on [a, b]
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

double operator_norm(const Mat& M) {
  // power iteration on M^T M, deterministic start
  const Mat A = M.transpose() * M;
  Vec v = Vec::Ones(A.rows());
  for (int i = 0; i < A.rows(); ++i) v(i) += 1e-3 * (i + 1);  // break symmetry
  v.normalize();
  double lambda = 0.0;
  for (int iter = 0; iter < 500; ++iter) {
    Vec w = A * v;
    const double nl = w.norm();
    if (!(nl > 0.0)) return 0.0;
    w /= nl;
    const double delta = (w - v).norm();
    v = w;
    lambda = v.dot(A * v);
    if (delta < 1e-14) break;
  }
  if (!std::isfinite(lambda))
    throw Error(Error::Kind::precondition, "choose_balls: operator norm is not finite");
  return std::sqrt(std::max(0.0, lambda));
}

Mat symmetrized_q(const Mat& S) {
  const int n = static_cast<int>(S.rows()) / 2;
  const Mat Qraw = 0.5 * standard_J(n) * S;
  return 0.5 * (Qraw + Qraw.transpose());
}

// d_t[A(s, .)] A(s, .)^{-1} by central differences
Mat time_generator(const nullhomotopy::BasedHomotopy& A, double s, double t, double h_t) {
  const Mat D = (A(s, t + h_t) - A(s, t - h_t)) / (2.0 * h_t);
  return D * A(s, t).inverse();
}

}  // namespace

BallTriple choose_balls(const symplin::MatrixLoop& A, double rho3, double margin) {
  if (!(rho3 > 0.0) || !(margin > 1.0))
    throw Error(Error::Kind::precondition, "choose_balls: need rho3 > 0 and margin > 1");
  double kappa = 0.0;
  for (const Mat& M : A.samples) kappa = std::max(kappa, operator_norm(M));
  BallTriple b;
  b.kappa = kappa;
  b.rho3 = rho3;
  b.rho2 = rho3 / margin;
  b.rho1 = b.rho2 / (kappa * margin);
  if (!(kappa * b.rho1 < b.rho2))
    throw Error(Error::Kind::precondition, "choose_balls: containment certificate failed");
  return b;
}

double CutoffProfile::operator()(double r) const {
  const double delta = rho3 - rho2;
  const double u = std::clamp((rho3 - r) / delta, 0.0, 1.0);
  return u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
}

double CutoffProfile::deriv(double r) const {
  const double delta = rho3 - rho2;
  const double u = (rho3 - r) / delta;
  if (u <= 0.0 || u >= 1.0) return 0.0;
  return -30.0 * u * u * (1.0 - u) * (1.0 - u) / delta;
}

CutoffProfile cutoff_profile(double rho2, double rho3) {
  if (!(rho2 < rho3) || !(rho2 > 0.0))
    throw Error(Error::Kind::precondition, "cutoff_profile: need 0 < rho2 < rho3");
  return CutoffProfile{rho2, rho3};
}

namespace {

// X_{aH}(x) = a(r) S x - (H(x) a'(r)/r) J x  with S = -2JQ and
// H(x) = <x, Qx> = -1/2 (Jx).(Sx)
Vec field_from_generator(const Mat& S, const CutoffProfile& prof, const Vec& x) {
  const double r = x.norm();
  if (r >= prof.rho3) return Vec::Zero(x.size());
  const double a = prof(r);
  const double ap = prof.deriv(r);
  const Vec Sx = S * x;
  Vec out = a * Sx;
  if (ap != 0.0) {
    Vec Jx;
    apply_J(x, Jx);
    const double H = -0.5 * Jx.dot(Sx);
    out -= (H * ap / r) * Jx;
  }
  return out;
}

}  // namespace

Vec cutoff_vector_field(const nullhomotopy::BasedHomotopy& A, const CutoffProfile& prof,
                        double s, double t, const Vec& x) {
  return field_from_generator(A.generator(s, t), prof, x);
}

namespace {

Vec cutoff_rk4(const nullhomotopy::BasedHomotopy& A, const CutoffProfile& prof, double s0,
               double s1, double t, const Vec& x0, int steps, double* max_radius = nullptr) {
  Vec x = x0;
  if (steps < 1 || s0 == s1) return x;
  const double h = (s1 - s0) / steps;
  Vec k1, k2, k3, k4;
  auto field = [&](double s, const Vec& p) {
    return field_from_generator(A.generator(s, t), prof, p);
  };
  if (max_radius) *max_radius = std::max(*max_radius, x.norm());
  for (int i = 0; i < steps; ++i) {
    const double s = s0 + i * h;
    k1 = field(s, x);
    k2 = field(s + 0.5 * h, Vec(x + 0.5 * h * k1));
    k3 = field(s + 0.5 * h, Vec(x + 0.5 * h * k2));
    k4 = field(s + h, Vec(x + h * k3));
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (max_radius) *max_radius = std::max(*max_radius, x.norm());
  }
  return x;
}

int partial_steps(int sigma_steps, double s) {
  return std::max(1, static_cast<int>(std::lround(sigma_steps * std::abs(s))));
}

}  // namespace

Vec cutoff_flow(const nullhomotopy::BasedHomotopy& A, const CutoffProfile& prof, double s,
                double t, const Vec& x, int sigma_steps) {
  if (s == 0.0) return x;
  return cutoff_rk4(A, prof, 0.0, s, t, x, partial_steps(sigma_steps, s));
}

Vec cutoff_flow_inverse(const nullhomotopy::BasedHomotopy& A, const CutoffProfile& prof, double s,
                        double t, const Vec& y, int sigma_steps) {
  if (s == 0.0) return y;
  return cutoff_rk4(A, prof, s, 0.0, t, y, partial_steps(sigma_steps, s));
}

double lemma_generator(const nullhomotopy::BasedHomotopy& A, const CutoffProfile& prof, double s,
                       double t, const Vec& x, int sigma_steps, int segment_nodes, double h_t) {
  const double r = x.norm();
  if (r == 0.0 || r >= prof.rho3) return 0.0;
  const Mat Shat = time_generator(A, s, t, h_t);
  const double quad_full = 0.5 * omega0(Vec(Shat * x), x);
  if (r <= prof.rho2) return quad_full;
  const double sigma2 = prof.rho2 / r;
  double g = sigma2 * sigma2 * quad_full;
  std::vector<double> nodes, weights;
  gauss_legendre(segment_nodes, sigma2, 1.0, nodes, weights);
  std::vector<double> terms(nodes.size());
  const int steps = partial_steps(sigma_steps, s);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Vec z = nodes[i] * x;
    const Vec x0 = cutoff_rk4(A, prof, s, 0.0, t, z, steps);
    Vec yp = x0, ym = x0;
    yp = cutoff_rk4(A, prof, 0.0, s, t + h_t, x0, steps);
    ym = cutoff_rk4(A, prof, 0.0, s, t - h_t, x0, steps);
    const Vec Y = (yp - ym) / (2.0 * h_t);
    terms[i] = weights[i] * omega0(Y, x);
  }
  return g + pairwise_sum(terms);
}

// ---------------------------------------------------------------------------
// Batched engine

namespace {

using Arr = Eigen::ArrayXd;
using RowArr = Eigen::Array<double, 1, Eigen::Dynamic>;

struct BatchEngine {
  std::vector<Mat> S;  // stage tables at sigma_k = k/(2N)
  CutoffProfile prof;
  int N = 0;
  int d = 0;
  int n = 0;

  BatchEngine(const nullhomotopy::BasedHomotopy& A, const CutoffProfile& p, double t, int steps)
      : prof(p), N(steps), d(2 * A.n()), n(A.n()) {
    S.resize(2 * N + 1);
    for (int k = 0; k <= 2 * N; ++k) {
      const double sigma = static_cast<double>(k) / (2 * N);
      S[k] = A.generator(sigma, t);
    }
  }

  struct Work {
    Mat SX, JX, K1, K2, K3, K4, XT;
    RowArr H, r2, r, a, ap, b;
    void resize(int d, int cols) {
      SX.resize(d, cols);
      JX.resize(d, cols);
      K1.resize(d, cols);
      K2.resize(d, cols);
      K3.resize(d, cols);
      K4.resize(d, cols);
      XT.resize(d, cols);
      H.resize(cols);
      r2.resize(cols);
      r.resize(cols);
      a.resize(cols);
      ap.resize(cols);
      b.resize(cols);
    }
  };

  void rhs(int stage, const Eigen::Ref<const Mat>& X, Mat& out, Work& w) const {
    const auto cols = X.cols();
    w.SX.leftCols(cols).noalias() = S[stage] * X;
    w.JX.leftCols(cols).topRows(n) = -X.bottomRows(n);
    w.JX.leftCols(cols).bottomRows(n) = X.topRows(n);
    auto H = w.H.head(cols);
    auto r2 = w.r2.head(cols);
    auto r = w.r.head(cols);
    auto a = w.a.head(cols);
    auto ap = w.ap.head(cols);
    auto b = w.b.head(cols);
    // H = <x, Qx> with Q = sym(1/2 J S): equals -1/2 (Jx).(Sx)
    H = -0.5 * (w.JX.leftCols(cols).array() * w.SX.leftCols(cols).array()).colwise().sum();
    r2 = X.colwise().squaredNorm().array();
    r = r2.sqrt();
    const double delta = prof.rho3 - prof.rho2;
    // quintic smoothstep and derivative; the clamped u already gives
    // a = 1, a' = 0 inside B2 and a = a' = 0 outside B3
    auto u = ((prof.rho3 - r) / delta).cwiseMin(1.0).cwiseMax(0.0);
    a = u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
    ap = (-30.0 / delta) * (u * u) * (1.0 - u) * (1.0 - u);
    b = H * ap / r.cwiseMax(1e-300);
    out.leftCols(cols).array() = w.SX.leftCols(cols).array().rowwise() * a -
                                 w.JX.leftCols(cols).array().rowwise() * b;
  }

  void sweep_block(Eigen::Ref<Mat> X, bool backward) const {
    const auto cols = X.cols();
    Work w;
    w.resize(d, static_cast<int>(cols));
    const double h = (backward ? -1.0 : 1.0) / N;
    for (int i = 0; i < N; ++i) {
      int i0, i1, i2;
      if (!backward) {
        i0 = 2 * i;
        i1 = 2 * i + 1;
        i2 = 2 * i + 2;
      } else {
        i0 = 2 * N - 2 * i;
        i1 = 2 * N - 2 * i - 1;
        i2 = 2 * N - 2 * i - 2;
      }
      rhs(i0, X, w.K1, w);
      w.XT.leftCols(cols) = X + (0.5 * h) * w.K1.leftCols(cols);
      rhs(i1, w.XT.leftCols(cols), w.K2, w);
      w.XT.leftCols(cols) = X + (0.5 * h) * w.K2.leftCols(cols);
      rhs(i1, w.XT.leftCols(cols), w.K3, w);
      w.XT.leftCols(cols) = X + h * w.K3.leftCols(cols);
      rhs(i2, w.XT.leftCols(cols), w.K4, w);
      X += (h / 6.0) * (w.K1.leftCols(cols) + 2.0 * w.K2.leftCols(cols) +
                        2.0 * w.K3.leftCols(cols) + w.K4.leftCols(cols));
    }
  }

  void sweep(Mat& X, bool backward) const {
    const std::size_t cols = static_cast<std::size_t>(X.cols());
    if (cols == 0) return;
    constexpr std::size_t kBlock = 4096;
    parallel_for((cols + kBlock - 1) / kBlock, [&](std::size_t bb, std::size_t be) {
      for (std::size_t blk = bb; blk < be; ++blk) {
        const std::size_t c0 = blk * kBlock;
        const std::size_t c1 = std::min(cols, c0 + kBlock);
        sweep_block(X.middleCols(static_cast<Eigen::Index>(c0),
                                 static_cast<Eigen::Index>(c1 - c0)),
                    backward);
      }
    });
  }
};

}  // namespace

struct LoopEngines::Impl {
  BatchEngine center;
  BatchEngine plus;
  BatchEngine minus;
  Mat Shat;  // d_t A(1,t) A(1,t)^{-1}
  BallTriple balls;
  CutoffProfile prof;
  double t = 0.0;
  double h_t = hamflow::kStepT;
  int segment_nodes = 5;

  Impl(const nullhomotopy::BasedHomotopy& A, const CutoffProfile& p, const BallTriple& b,
       double time, int steps, int seg, double ht)
      : center(A, p, time, steps),
        plus(A, p, time + ht, steps),
        minus(A, p, time - ht, steps),
        Shat(time_generator(A, 1.0, time, ht)),
        balls(b),
        prof(p),
        t(time),
        h_t(ht),
        segment_nodes(seg) {}
};

LoopEngines::LoopEngines(const nullhomotopy::BasedHomotopy& A, const CutoffProfile& prof,
                         const BallTriple& balls, double t, int sigma_steps, int segment_nodes,
                         double h_t)
    : impl_(std::make_unique<Impl>(A, prof, balls, t, sigma_steps, segment_nodes, h_t)) {}

LoopEngines::~LoopEngines() = default;
LoopEngines::LoopEngines(LoopEngines&&) noexcept = default;

double LoopEngines::t() const { return impl_->t; }

void LoopEngines::forward(Mat& X) const { impl_->center.sweep(X, false); }
void LoopEngines::backward(Mat& X) const { impl_->center.sweep(X, true); }

std::vector<double> LoopEngines::generator_values(const std::vector<Vec>& pts) const {
  const Impl& im = *impl_;
  const int d = im.center.d;
  std::vector<double> out(pts.size(), 0.0);

  // classification + exact linear-core contribution
  struct ShellRef {
    std::size_t point = 0;
    double weight = 0.0;
  };
  std::vector<ShellRef> refs;
  std::vector<Vec> seg_points;
  std::vector<double> nodes, weights;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Vec& y = pts[i];
    const double r = y.norm();
    if (r == 0.0 || r >= im.prof.rho3) continue;
    const double quad_full = 0.5 * omega0(Vec(im.Shat * y), y);
    if (r <= im.prof.rho2) {
      out[i] = quad_full;
      continue;
    }
    const double sigma2 = im.prof.rho2 / r;
    out[i] = sigma2 * sigma2 * quad_full;
    gauss_legendre(im.segment_nodes, sigma2, 1.0, nodes, weights);
    for (int k = 0; k < im.segment_nodes; ++k) {
      refs.push_back({i, weights[k]});
      seg_points.push_back(nodes[k] * y);
    }
  }
  if (seg_points.empty()) return out;

  Mat Z(d, static_cast<Eigen::Index>(seg_points.size()));
  for (std::size_t k = 0; k < seg_points.size(); ++k) Z.col(static_cast<Eigen::Index>(k)) = seg_points[k];
  im.center.sweep(Z, true);  // x0 = g_t^{-1}(z)
  Mat P1 = Z, P2 = Z;
  im.plus.sweep(P1, false);
  im.minus.sweep(P2, false);
  const double inv2h = 1.0 / (2.0 * im.h_t);
  const int n = d / 2;
  // accumulate per point in column order (fixed, thread independent)
  std::vector<double> shell_sum(pts.size(), 0.0);
  for (std::size_t k = 0; k < refs.size(); ++k) {
    const auto col = static_cast<Eigen::Index>(k);
    const Vec& y = pts[refs[k].point];
    const auto Ycol = (P1.col(col) - P2.col(col)) * inv2h;
    // omega0(Y, y) = <JY, y>
    const double w = Ycol.head(n).dot(y.tail(n)) - Ycol.tail(n).dot(y.head(n));
    shell_sum[refs[k].point] += refs[k].weight * w;
  }
  for (std::size_t i = 0; i < pts.size(); ++i) out[i] += shell_sum[i];
  return out;
}

// ---------------------------------------------------------------------------
// Calabi estimate

namespace {

std::vector<Vec> ball_grid(int d, double radius, int per_axis) {
  std::vector<Vec> pts;
  std::size_t total = 1;
  for (int k = 0; k < d; ++k) total *= static_cast<std::size_t>(per_axis);
  const double h = 2.0 * radius / per_axis;
  Vec x(d);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rem = idx;
    double nrm2 = 0.0;
    for (int k = 0; k < d; ++k) {
      const int i = static_cast<int>(rem % per_axis);
      rem /= per_axis;
      x(k) = -radius + (i + 0.5) * h;
      nrm2 += x(k) * x(k);
    }
    if (nrm2 <= radius * radius) pts.push_back(x);
  }
  return pts;
}

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

double cal_run(const nullhomotopy::BasedHomotopy& A, const CutoffProfile& prof,
               const BallTriple& balls, int t_nodes, int per_axis, int sigma_steps,
               int segment_nodes, double h_t) {
  const int d = 2 * A.n();
  const auto grid = ball_grid(d, balls.rho3, per_axis);
  const double cell = std::pow(2.0 * balls.rho3 / per_axis, d);
  const double ledger = factorial(A.n());
  std::vector<double> slices(t_nodes);
  for (int k = 0; k < t_nodes; ++k) {
    const double t = (k + 0.5) / t_nodes;
    LoopEngines eng(A, prof, balls, t, sigma_steps, segment_nodes, h_t);
    const auto vals = eng.generator_values(grid);
    slices[k] = ledger * cell * pairwise_sum(vals);
  }
  return pairwise_sum(slices) / t_nodes;
}

}  // namespace

CalEstimate calabi_of_cutoff_loop(const nullhomotopy::BasedHomotopy& A, const CutoffProfile& prof,
                                  const BallTriple& balls, const CalOptions& opts) {
  CalEstimate est;
  est.value = cal_run(A, prof, balls, opts.t_nodes, opts.per_axis, opts.sigma_steps,
                      opts.segment_nodes, opts.h_t);
  if (opts.refine) {
    const double coarse =
        cal_run(A, prof, balls, std::max(2, opts.t_nodes / 2), std::max(4, opts.per_axis / 2),
                opts.sigma_steps, opts.segment_nodes, opts.h_t);
    // quadrature refinement bound plus an integrator allowance
    est.error_bound =
        (4.0 / 3.0) * std::abs(est.value - coarse) + 1e-3 * std::abs(est.value) + 1e-16;
  } else {
    est.error_bound = 1e-2 * std::abs(est.value) + 1e-12;
  }
  return est;
}

double time_derivative_bound(const nullhomotopy::BasedHomotopy& A, double rho3, int grid,
                             double h_t) {
  double max_norm = 0.0;
  for (int is = 0; is < grid; ++is) {
    const double s = static_cast<double>(is) / (grid - 1);
    for (int it = 0; it < grid; ++it) {
      const double t = static_cast<double>(it) / (grid - 1);
      const Mat Qp = symmetrized_q(A.generator(s, t + h_t));
      const Mat Qm = symmetrized_q(A.generator(s, t - h_t));
      const Mat dQ = (Qp - Qm) / (2.0 * h_t);
      Eigen::SelfAdjointEigenSolver<Mat> es(dQ, Eigen::EigenvaluesOnly);
      max_norm = std::max(max_norm, es.eigenvalues().cwiseAbs().maxCoeff());
    }
  }
  return rho3 * rho3 * max_norm;
}

// ---------------------------------------------------------------------------
// Lemma driver

namespace {

std::vector<Vec> random_directions(int d, int count, Rng& rng) {
  std::vector<Vec> dirs;
  dirs.reserve(count);
  while (static_cast<int>(dirs.size()) < count) {
    Vec v(d);
    for (int k = 0; k < d; ++k) v(k) = rng.uniform(-1.0, 1.0);
    const double nrm = v.norm();
    if (nrm < 0.1 || nrm > 1.0) continue;
    dirs.push_back(v / nrm);
  }
  return dirs;
}

// max orbit radius over boundary tracers of B1; used to certify
// A_t B1 stays inside B2 for the actual nonlinear flow
double containment_sweep(const nullhomotopy::BasedHomotopy& A, const CutoffProfile& prof,
                         double rho1, int sigma_steps, const std::vector<Vec>& dirs,
                         int t_samples) {
  double worst = 0.0;
  for (const Vec& dir : dirs) {
    for (int it = 0; it < t_samples; ++it) {
      const double t = static_cast<double>(it) / (t_samples - 1);
      double max_radius = 0.0;
      cutoff_rk4(A, prof, 0.0, 1.0, t, Vec(rho1 * dir), sigma_steps, &max_radius);
      worst = std::max(worst, max_radius);
    }
  }
  return worst;
}

}  // namespace

LemmaLoopResult lemma_loop(const symplin::MatrixLoop& A,
                           const nullhomotopy::BasedHomotopy& homotopy, double rho3_init,
                           double eps, const LemmaOptions& opts) {
  if (!(eps > 0.0)) throw Error(Error::Kind::precondition, "lemma_loop: eps must be > 0");
  const auto maslov = symplin::maslov_index_detailed(A);
  if (maslov.index != 0)
    throw Error(Error::Kind::not_null_homotopic,
                "lemma_loop: not null-homotopic (Maslov index " + std::to_string(maslov.index) +
                    " != 0)");
  const auto hb = homotopy.boundary_report(A);
  if (hb.max() > 1e-6)
    throw Error(Error::Kind::precondition, "lemma_loop: homotopy does not contract the loop");

  LemmaLoopResult res;
  res.epsilon = eps;
  Rng rng(opts.seed);
  const int d = 2 * homotopy.n();
  const auto dirs = random_directions(d, opts.tracer_count, rng);

  for (int halving = 0; halving <= opts.max_halvings; ++halving) {
    const double rho3 = rho3_init / std::pow(2.0, halving);
    BallTriple balls = choose_balls(A, rho3, opts.margin);

    CalOptions cal_opts = opts.cal;
    cal_opts.sigma_steps =
        std::max(64, static_cast<int>(std::lround(opts.cal.sigma_steps * rho3 / rho3_init)));
    const CutoffProfile prof = cutoff_profile(balls.rho2, balls.rho3);

    // orbit containment, shrinking rho1 when violated
    double worst = 0.0;
    bool contained = false;
    for (int retry = 0; retry <= opts.containment_retries; ++retry) {
      worst = containment_sweep(homotopy, prof, balls.rho1, cal_opts.sigma_steps, dirs, 7);
      if (worst <= balls.rho2) {
        contained = true;
        break;
      }
      balls.rho1 *= 0.75;
    }
    if (!contained)
      throw Error(Error::Kind::budget_exhausted,
                  "lemma_loop: orbit containment could not be certified");

    const double K = time_derivative_bound(homotopy, rho3);
    const double vol = std::pow(kPi, homotopy.n()) * std::pow(rho3, 2 * homotopy.n());
    const CalEstimate cal = calabi_of_cutoff_loop(homotopy, prof, balls, cal_opts);

    res.history.push_back({rho3, std::abs(cal.value), cal.error_bound, K * vol});

    if (std::abs(cal.value) + cal.error_bound < eps) {
      res.balls = balls;
      res.cal = cal;
      res.certified_K = K;
      res.certified_bound = K * vol;
      res.halvings_used = halving;
      res.containment_max_radius = worst;
      res.passed = true;

      const int steps = cal_opts.sigma_steps;
      res.sigma_steps_used = steps;
      // diagnostics on the passing configuration
      {
        double closure = 0.0, interp = 0.0, support = 0.0, origin = 0.0;
        const std::vector<double> s_grid = {0.25, 0.5, 0.75, 1.0};
        for (const Vec& dir : dirs) {
          const Vec x = (0.8 * rho3) * dir;
          for (double s : s_grid)
            for (double tb : {0.0, 1.0})
              closure = std::max(closure,
                                 (cutoff_flow(homotopy, prof, s, tb, x, steps) - x).norm());
        }
        for (const Vec& dir : dirs) {
          for (double frac : {0.5, 1.0}) {
            const Vec x = (frac * balls.rho1) * dir;
            for (int it = 0; it < opts.tracer_t_samples; ++it) {
              const double t = static_cast<double>(it) / (opts.tracer_t_samples - 1);
              const Vec gx = cutoff_flow(homotopy, prof, 1.0, t, x, steps);
              const Vec ax = homotopy(1.0, t) * x;
              interp = std::max(interp, (gx - ax).norm() / (1.0 + x.norm()));
            }
          }
        }
        for (const Vec& dir : dirs) {
          for (double frac : {1.0001, 1.5, 3.0}) {
            const Vec x = (frac * rho3) * dir;
            for (double t : {0.0, 0.3, 0.7}) {
              support =
                  std::max(support, (cutoff_flow(homotopy, prof, 1.0, t, x, steps) - x).norm());
            }
          }
        }
        for (double t : {0.1, 0.5, 0.9})
          origin = std::max(origin, std::abs(lemma_generator(homotopy, prof, 1.0, t,
                                                             Vec::Zero(d), steps)));
        res.closure_residual = closure;
        res.witness_residual = closure;  // endpoint identities of the witness path
        res.interp_residual = interp;
        res.support_residual = support;
        res.g_origin_residual = origin;
      }

      nullhomotopy::BasedHomotopy hom_copy = homotopy;
      CutoffProfile prof_copy = prof;
      res.g = [hom_copy, prof_copy, steps](double t, const Vec& x) {
        return cutoff_flow(hom_copy, prof_copy, 1.0, t, x, steps);
      };
      res.g_inv = [hom_copy, prof_copy, steps](double t, const Vec& y) {
        return cutoff_flow_inverse(hom_copy, prof_copy, 1.0, t, y, steps);
      };
      res.G = [hom_copy, prof_copy, steps](double t, const Vec& x) {
        return lemma_generator(hom_copy, prof_copy, 1.0, t, x, 2 * steps, 12);
      };
      return res;
    }
  }
  res.passed = false;
  return res;  // failure report with the scaling history
}

std::vector<ScalingRow> scaling_study(const symplin::MatrixLoop& A,
                                      const nullhomotopy::BasedHomotopy& homotopy,
                                      const std::vector<double>& radii,
                                      const LemmaOptions& opts) {
  if (radii.empty()) throw Error(Error::Kind::precondition, "scaling_study: no radii");
  std::vector<ScalingRow> rows;
  const auto maslov = symplin::maslov_index_detailed(A);
  if (maslov.index != 0)
    throw Error(Error::Kind::not_null_homotopic, "scaling_study: not null-homotopic");
  for (double rho3 : radii) {
    BallTriple balls = choose_balls(A, rho3, opts.margin);
    const CutoffProfile prof = cutoff_profile(balls.rho2, balls.rho3);
    CalOptions cal_opts = opts.cal;
    cal_opts.sigma_steps =
        std::max(64, static_cast<int>(std::lround(opts.cal.sigma_steps * rho3 / radii.front())));
    const double K = time_derivative_bound(homotopy, rho3);
    const double vol = std::pow(kPi, homotopy.n()) * std::pow(rho3, 2 * homotopy.n());
    const CalEstimate cal = calabi_of_cutoff_loop(homotopy, prof, balls, cal_opts);
    rows.push_back({rho3, std::abs(cal.value), cal.error_bound, K * vol});
  }
  return rows;
}

std::string scaling_to_csv(const std::vector<ScalingRow>& rows) {
  std::ostringstream os;
  os << "rho3,cal_abs,err_bound,certified_bound\n";
  for (const auto& r : rows)
    os << format_double(r.rho3) << "," << format_double(r.cal_abs) << ","
       << format_double(r.err_bound) << "," << format_double(r.certified_bound) << "\n";
  return os.str();
}

PdeReport pde_crosscheck(const nullhomotopy::BasedHomotopy& A, const CutoffProfile& prof,
                         const std::vector<double>& s_grid, double t,
                         const std::vector<Vec>& x_samples, int sigma_steps) {
  PdeReport rep;
  const double h_s = 1e-3;
  const double h_t = hamflow::kStepT;
  const double h_dir = 1e-3;
  for (double s : s_grid) {
    for (const Vec& x : x_samples) {
      PdeSample smp;
      smp.s = s;
      smp.x = x;
      const double gp = lemma_generator(A, prof, s + h_s, t, x, sigma_steps, 12, h_t);
      const double gm = lemma_generator(A, prof, s - h_s, t, x, sigma_steps, 12, h_t);
      smp.lhs = (gp - gm) / (2.0 * h_s);

      const double r = x.norm();
      const Mat dQ =
          (symmetrized_q(A.generator(s, t + h_t)) - symmetrized_q(A.generator(s, t - h_t))) /
          (2.0 * h_t);
      const double a_dtH = prof(r) * x.dot(dQ * x);

      double bracket = 0.0;
      const Vec w = cutoff_vector_field(A, prof, s, t, x);
      const double wn = w.norm();
      if (wn > 1e-12) {
        const Vec wh = w / wn;
        const double gp2 = lemma_generator(A, prof, s, t, Vec(x + h_dir * wh), sigma_steps, 12, h_t);
        const double gm2 = lemma_generator(A, prof, s, t, Vec(x - h_dir * wh), sigma_steps, 12, h_t);
        bracket = wn * (gp2 - gm2) / (2.0 * h_dir);
      }
      smp.rhs = a_dtH - bracket;
      smp.residual = std::abs(smp.lhs - smp.rhs);
      rep.max_residual = std::max(rep.max_residual, smp.residual);
      rep.samples.push_back(std::move(smp));
    }
  }
  return rep;
}

}  // namespace calabi::cutoff
