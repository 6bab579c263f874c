#include "calabi/nullhomotopy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace calabi::nullhomotopy {

namespace {

constexpr double kPi = std::numbers::pi;

struct Quat {
  double w = 1, x = 0, y = 0, z = 0;
};

Quat qmul(const Quat& a, const Quat& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

// exp(theta * (nx i + ny j + nz k)) for a unit imaginary direction
Quat qexp(double theta, double nx, double ny, double nz) {
  const double c = std::cos(theta), s = std::sin(theta);
  return {c, s * nx, s * ny, s * nz};
}

// Left multiplication by q on H in the ordered basis (1, i, j, k).
Eigen::Matrix4d left_mult(const Quat& q) {
  Eigen::Matrix4d L;
  L << q.w, -q.x, -q.y, -q.z,
       q.x,  q.w, -q.z,  q.y,
       q.y,  q.z,  q.w, -q.x,
       q.z, -q.y,  q.x,  q.w;
  return L;
}

// One-time orientation constant: quaternion coordinates (w,x,y,z) read as
// symplectic coordinates (q1,q2,p1,p2) = (w,y,z,x). With this alignment
// the belt endpoint A(1,t) is the weight-(c,-c) rotation loop; the
// endpoint test in the suite is the arbiter for this constant.
Eigen::Matrix4d quat_to_symplectic() {
  Eigen::Matrix4d P = Eigen::Matrix4d::Zero();
  P(0, 0) = 1;  // q1 <- w
  P(1, 2) = 1;  // q2 <- y
  P(2, 3) = 1;  // p1 <- z
  P(3, 1) = 1;  // p2 <- x
  return P;
}

// belt direction u(s) = cos(pi(1-s)) k + sin(pi(1-s)) i
void belt_u(double s, double& ux, double& uz) {
  ux = std::sin(kPi * (1.0 - s));
  uz = std::cos(kPi * (1.0 - s));
}

Eigen::Matrix4d belt_matrix4(long c, double s, double t) {
  const double th = static_cast<double>(c) * kPi * t;
  double ux, uz;
  belt_u(s, ux, uz);
  const Quat q = qmul(qexp(th, 0, 0, 1), qexp(th, ux, 0, uz));
  static const Eigen::Matrix4d P = quat_to_symplectic();
  return P * left_mult(q) * P.transpose();
}

Eigen::Matrix4d belt_matrix4_ds(long c, double s, double t) {
  const double th = static_cast<double>(c) * kPi * t;
  double ux, uz;
  belt_u(s, ux, uz);
  // d/ds exp(th u(s)) = sin(th) u'(s) as a quaternion
  const double dux = -kPi * std::cos(kPi * (1.0 - s));
  const double duz = kPi * std::sin(kPi * (1.0 - s));
  const double st = std::sin(th);
  const Quat du{0.0, st * dux, 0.0, st * duz};
  const Quat q = qmul(qexp(th, 0, 0, 1), du);
  static const Eigen::Matrix4d P = quat_to_symplectic();
  return P * left_mult(q) * P.transpose();
}

}  // namespace

std::vector<Transfer> pair_decompose(const symplin::WeightVector& a) {
  if (!a.balanced())
    throw Error(Error::Kind::unbalanced_weights, "pair_decompose: weights must sum to zero");
  std::vector<long> w = a.a;
  std::vector<Transfer> out;
  for (;;) {
    int ip = -1, in = -1;
    for (int j = 0; j < static_cast<int>(w.size()); ++j) {
      if (w[j] > 0 && (ip < 0 || w[j] > w[ip])) ip = j;
      if (w[j] < 0 && (in < 0 || w[j] < w[in])) in = j;
    }
    if (ip < 0) break;  // balanced, so positives and negatives vanish together
    const long c = std::min(w[ip], -w[in]);
    out.push_back({ip + 1, in + 1, c});
    w[ip] -= c;
    w[in] += c;
  }
  return out;
}

BasedHomotopy BasedHomotopy::identity(int n) {
  BasedHomotopy h;
  h.n_ = n;
  return h;
}

BasedHomotopy BasedHomotopy::belt(long c) {
  if (c < 1) throw Error(Error::Kind::precondition, "belt: c must be >= 1");
  BasedHomotopy h;
  h.n_ = 2;
  h.factors_.push_back({0, 1, c});
  return h;
}

BasedHomotopy BasedHomotopy::for_weights(const symplin::WeightVector& a) {
  const auto transfers = pair_decompose(a);
  BasedHomotopy h;
  h.n_ = a.n();
  for (const auto& tr : transfers) h.factors_.push_back({tr.from - 1, tr.to - 1, tr.count});
  return h;
}

void BasedHomotopy::factor_matrix(const BeltFactor& f, double s, double t, Mat& out) const {
  const Eigen::Matrix4d B = belt_matrix4(f.c, s, t);
  out = Mat::Identity(2 * n_, 2 * n_);
  const int idx[4] = {f.plane_from, f.plane_to, n_ + f.plane_from, n_ + f.plane_to};
  for (int r = 0; r < 4; ++r)
    for (int cidx = 0; cidx < 4; ++cidx) out(idx[r], idx[cidx]) = B(r, cidx);
}

void BasedHomotopy::factor_matrix_ds(const BeltFactor& f, double s, double t, Mat& out) const {
  const Eigen::Matrix4d B = belt_matrix4_ds(f.c, s, t);
  out = Mat::Zero(2 * n_, 2 * n_);
  const int idx[4] = {f.plane_from, f.plane_to, n_ + f.plane_from, n_ + f.plane_to};
  for (int r = 0; r < 4; ++r)
    for (int cidx = 0; cidx < 4; ++cidx) out(idx[r], idx[cidx]) = B(r, cidx);
}

Mat BasedHomotopy::operator()(double s, double t) const {
  Mat A = Mat::Identity(2 * n_, 2 * n_);
  Mat F;
  for (const auto& f : factors_) {
    factor_matrix(f, s, t, F);
    A = A * F;
  }
  return A;
}

Mat BasedHomotopy::ds(double s, double t) const {
  // product rule over the factor list
  Mat total = Mat::Zero(2 * n_, 2 * n_);
  const std::size_t m = factors_.size();
  if (m == 0) return total;
  std::vector<Mat> mats(m);
  for (std::size_t k = 0; k < m; ++k) factor_matrix(factors_[k], s, t, mats[k]);
  Mat left = Mat::Identity(2 * n_, 2 * n_);
  Mat dF;
  for (std::size_t k = 0; k < m; ++k) {
    factor_matrix_ds(factors_[k], s, t, dF);
    Mat term = left * dF;
    for (std::size_t l = k + 1; l < m; ++l) term = term * mats[l];
    total += term;
    left = left * mats[k];
  }
  return total;
}

Mat BasedHomotopy::generator(double s, double t) const {
  const Mat A = (*this)(s, t);
  return ds(s, t) * A.inverse();
}

double BasedHomotopy::BoundaryReport::max() const {
  return std::max({base_s0, base_s1, start_identity, end_matches_loop, symplecticity});
}

BasedHomotopy::BoundaryReport BasedHomotopy::boundary_report(const symplin::MatrixLoop& target) const {
  BoundaryReport rep;
  const Mat id = Mat::Identity(2 * n_, 2 * n_);
  for (int is = 0; is < grid_s; ++is) {
    const double s = static_cast<double>(is) / (grid_s - 1);
    rep.base_s0 = std::max(rep.base_s0, ((*this)(s, 0.0) - id).cwiseAbs().maxCoeff());
    rep.base_s1 = std::max(rep.base_s1, ((*this)(s, 1.0) - id).cwiseAbs().maxCoeff());
    for (int it = 0; it < grid_t; ++it) {
      const double t = static_cast<double>(it) / (grid_t - 1);
      const Mat A = (*this)(s, t);
      rep.symplecticity = std::max(rep.symplecticity, symplectic_residual(A));
      if (is == 0)
        rep.start_identity = std::max(rep.start_identity, (A - id).cwiseAbs().maxCoeff());
    }
  }
  for (int it = 0; it < grid_t; ++it) {
    const double t = static_cast<double>(it) / (grid_t - 1);
    const Mat target_t = target.eval ? target.eval(t)
                                     : target.samples[static_cast<std::size_t>(
                                           std::lround(t * (target.sample_count() - 1)))];
    rep.end_matches_loop =
        std::max(rep.end_matches_loop, ((*this)(1.0, t) - target_t).cwiseAbs().maxCoeff());
  }
  return rep;
}

std::string BasedHomotopy::grid_to_csv() const {
  std::ostringstream os;
  os << "s,t";
  for (int r = 0; r < 2 * n_; ++r)
    for (int c = 0; c < 2 * n_; ++c) os << ",a" << r << c;
  os << "\n";
  for (int is = 0; is < grid_s; ++is) {
    const double s = static_cast<double>(is) / (grid_s - 1);
    for (int it = 0; it < grid_t; ++it) {
      const double t = static_cast<double>(it) / (grid_t - 1);
      const Mat A = (*this)(s, t);
      os << format_double(s) << "," << format_double(t);
      for (int r = 0; r < 2 * n_; ++r)
        for (int c = 0; c < 2 * n_; ++c) os << "," << format_double(A(r, c));
      os << "\n";
    }
  }
  return os.str();
}

namespace {

QuadraticHamiltonian q_from_generator(const Mat& S, int n, double antisym_tol) {
  const Mat J = standard_J(n);
  const Mat Qraw = 0.5 * J * S;
  const Mat anti = 0.5 * (Qraw - Qraw.transpose());
  if (anti.cwiseAbs().maxCoeff() >= antisym_tol)
    throw Error(Error::Kind::not_symplectic_direction,
                "homotopy_hamiltonian: J dA A^{-1} is not symmetric; the homotopy "
                "does not move in symplectic directions");
  QuadraticHamiltonian H;
  H.Q = 0.5 * (Qraw + Qraw.transpose());
  return H;
}

}  // namespace

QuadraticHamiltonian homotopy_hamiltonian(const BasedHomotopy& A, double s, double t,
                                          double h_s, double antisym_tol) {
  const Mat D = (A(s + h_s, t) - A(s - h_s, t)) / (2.0 * h_s);
  const Mat S = D * A(s, t).inverse();
  return q_from_generator(S, A.n(), antisym_tol);
}

QuadraticHamiltonian homotopy_hamiltonian_analytic(const BasedHomotopy& A, double s, double t) {
  return q_from_generator(A.generator(s, t), A.n(), 1e-6);
}

}  // namespace calabi::nullhomotopy
