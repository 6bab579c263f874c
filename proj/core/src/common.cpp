#include "calabi/common.hpp"

#include <cstdio>
#include <thread>

namespace calabi {

Mat standard_J(int n) {
  if (n < 1) throw Error(Error::Kind::precondition, "standard_J: n must be >= 1");
  Mat J = Mat::Zero(2 * n, 2 * n);
  J.topRightCorner(n, n) = -Mat::Identity(n, n);
  J.bottomLeftCorner(n, n) = Mat::Identity(n, n);
  return J;
}

void apply_J(const Vec& x, Vec& out) {
  const int n = static_cast<int>(x.size()) / 2;
  out.resize(2 * n);
  out.head(n) = -x.tail(n);
  out.tail(n) = x.head(n);
}

Vec apply_J(const Vec& x) {
  Vec out;
  apply_J(x, out);
  return out;
}

double omega0(const Vec& u, const Vec& v) {
  const int n = static_cast<int>(u.size()) / 2;
  // <Ju, v> = sum_j (u_q v_p - u_p v_q)
  return u.head(n).dot(v.tail(n)) - u.tail(n).dot(v.head(n));
}

double symplectic_residual(const Mat& M) {
  if (M.rows() != M.cols() || M.rows() % 2 != 0)
    throw Error(Error::Kind::dimension, "symplectic_residual: matrix must be square of even size");
  const int n = static_cast<int>(M.rows()) / 2;
  const Mat J = standard_J(n);
  return ((M.transpose() * J * M) - J).cwiseAbs().maxCoeff();
}

double pairwise_sum(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n == 0) return 0.0;
  if (n <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(values.subspan(0, half)) + pairwise_sum(values.subspan(half));
}

std::size_t hardware_threads() {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : hc;
}

void parallel_for(std::size_t count,
                  const std::function<void(std::size_t, std::size_t)>& worker) {
  const std::size_t nthreads = std::min<std::size_t>(hardware_threads(), count);
  if (nthreads <= 1) {
    worker(0, count);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  const std::size_t chunk = (count + nthreads - 1) / nthreads;
  for (std::size_t t = 0; t < nthreads; ++t) {
    const std::size_t begin = t * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&worker, begin, end] { worker(begin, end); });
  }
  for (auto& th : pool) th.join();
}

std::uint64_t Rng::next_u64() {
  // splitmix64
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double Rng::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double a, double b) { return a + (b - a) * next_double(); }

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace calabi
