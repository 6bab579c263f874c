#include "calabi/pipeline.hpp"

#include "calabi/hamflow.hpp"
#include "calabi/nullhomotopy.hpp"
#include "calabi/symplin.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace calabi::pipeline {

namespace {

constexpr double kPi = std::numbers::pi;

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

manifolds::SphereProduct make_manifold(const RunConfig& cfg) {
  manifolds::SphereProduct X;
  X.radii = cfg.radii;
  X.weights = cfg.weights.empty() ? manifolds::height_action_weights(cfg.radii) : cfg.weights;
  if (cfg.fixed_signs.empty()) {
    X.fixed_signs.assign(cfg.radii.size(), 1);
    X.fixed_signs.back() = -1;
  } else {
    X.fixed_signs = cfg.fixed_signs;
  }
  X.validate();
  return X;
}

std::vector<Vec> manifold_tracers(const manifolds::SphereProduct& X, int count, Rng& rng) {
  std::vector<Vec> out;
  out.reserve(count);
  for (int k = 0; k < count; ++k) {
    Vec p(3 * X.m());
    for (int j = 0; j < X.m(); ++j) {
      const double r = X.radii[j];
      const double z = rng.uniform(-r, r);
      const double th = rng.uniform(0.0, 2.0 * kPi);
      const double horiz = std::sqrt(std::max(0.0, r * r - z * z));
      p(3 * j) = horiz * std::cos(th);
      p(3 * j + 1) = horiz * std::sin(th);
      p(3 * j + 2) = z;
    }
    out.push_back(p);
  }
  return out;
}

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

// Everything the assembled loop h_t = g_t^{-1} o f_t needs.
struct TheoremSystem {
  manifolds::SphereProduct X;
  manifolds::ChartSpec chart;
  nullhomotopy::BasedHomotopy hom;
  cutoff::CutoffProfile prof{};
  cutoff::BallTriple balls{};
  int sigma_steps = 128;
  double F_at_s = 0.0;

  double ftilde(const Vec& p) const { return manifolds::moment(X, p) - F_at_s; }
  double ftilde_chart(const Vec& w) const { return ftilde(chart.inverse(w)); }

  Vec h_point(double t, const Vec& x) const {
    const Vec y = manifolds::sphere_action(X, x, t);
    const Vec w = chart.forward(y);
    if (w.norm() < balls.rho3) {
      const Vec w2 = cutoff::cutoff_flow_inverse(hom, prof, 1.0, t, w, sigma_steps);
      return chart.inverse(w2);
    }
    return y;
  }

  // H_t(x) = (F~ - G_t)(g_t(x)) on the manifold
  double h_generator(double t, const Vec& x) const {
    const Vec w = chart.forward(x);
    if (w.norm() < balls.rho3) {
      const Vec v = cutoff::cutoff_flow(hom, prof, 1.0, t, w, sigma_steps);
      const double G = cutoff::lemma_generator(hom, prof, 1.0, t, v, sigma_steps, 8);
      return ftilde_chart(v) - G;
    }
    return ftilde(x);
  }
};

struct DirectCal {
  double value = 0.0;
  double error_bound = 0.0;
};

// Cal(h) by direct quadrature: the chart ball carries (F~ - G_t) o g_t,
// the rest of the manifold carries the unmodified F~.
DirectCal direct_calabi(const TheoremSystem& sys, double target, double target_err,
                        int t_nodes, int per_axis, int segment_nodes) {
  const int d = 2 * sys.chart.n;
  const double ledger = factorial(sys.chart.n);

  auto chart_part = [&](int T, int axis) {
    const auto grid = ball_grid(d, sys.chart.radius, axis);
    const double cell = std::pow(2.0 * sys.chart.radius / axis, d);
    std::vector<Eigen::Index> moving;
    for (std::size_t i = 0; i < grid.size(); ++i)
      if (grid[i].norm() < sys.balls.rho3) moving.push_back(static_cast<Eigen::Index>(i));
    std::vector<double> slices(T);
    for (int k = 0; k < T; ++k) {
      const double t = (k + 0.5) / T;
      cutoff::LoopEngines eng(sys.hom, sys.prof, sys.balls, t, sys.sigma_steps, segment_nodes);
      std::vector<Vec> imgs = grid;
      if (!moving.empty()) {
        Mat Z(d, static_cast<Eigen::Index>(moving.size()));
        for (std::size_t c = 0; c < moving.size(); ++c)
          Z.col(static_cast<Eigen::Index>(c)) = grid[static_cast<std::size_t>(moving[c])];
        eng.forward(Z);
        for (std::size_t c = 0; c < moving.size(); ++c)
          imgs[static_cast<std::size_t>(moving[c])] = Z.col(static_cast<Eigen::Index>(c));
      }
      const auto G = eng.generator_values(imgs);
      std::vector<double> vals(imgs.size());
      for (std::size_t i = 0; i < imgs.size(); ++i)
        vals[i] = sys.ftilde_chart(imgs[i]) - G[i];
      slices[k] = ledger * cell * pairwise_sum(vals);
    }
    return pairwise_sum(slices) / T;
  };

  // F~ mass already inside the chart ball (to subtract from the sphere total)
  hamflow::Quadrature ball_quad;
  ball_quad.dim = d;
  ball_quad.radius = sys.chart.radius;
  ball_quad.per_axis = per_axis;
  const auto ball_f = hamflow::integrate([&](const Vec& w) { return sys.ftilde_chart(w); },
                                         ball_quad);

  DirectCal out;
  const double fine = chart_part(t_nodes, per_axis);
  const double coarse = chart_part(std::max(2, t_nodes / 2), std::max(6, per_axis / 2));
  out.value = (target - ball_f.value) + fine;
  out.error_bound = target_err + ball_f.error_bound +
                    (4.0 / 3.0) * std::abs(fine - coarse) + 1e-3 * std::abs(fine) + 1e-12;
  return out;
}

void add_flag(CalabiReport& rep, const std::string& name, double value, double threshold,
              bool pass) {
  rep.flags.push_back({name, value, threshold, pass});
}

}  // namespace

std::string ledger_fingerprint() {
  return "coords=(q1..qn,p1..pn);omega0=sum dq^dp;J=[[0,-I],[I,0]];z=q+ip;"
         "iota_XH_omega=dH;XH=-J grad H;{F,G}=dF(X_G);omega^n=n!*Leb;"
         "sphere_form=r dtheta^dz per factor";
}

double verify_loop(const std::function<Vec(double, const Vec&)>& h,
                   const std::vector<Vec>& tracers) {
  double worst = 0.0;
  for (const Vec& x : tracers) {
    worst = std::max(worst, (h(0.0, x) - x).norm());
    worst = std::max(worst, (h(1.0, x) - x).norm());
  }
  return worst;
}

ActionMaslovOutcome run_action_maslov(const RunConfig& cfg) {
  const auto X = make_manifold(cfg);
  ActionMaslovOutcome out;
  out.F_at_s = manifolds::moment(X, X.fixed_point());
  out.mean = manifolds::mean_integral(X, cfg.sphere_azimuth, cfg.sphere_height).value;
  out.vol = manifolds::volume(X);
  const auto am = manifolds::action_maslov(out.F_at_s, out.mean, out.vol, 1e-9);
  out.I = am.I;
  out.noncontractible = am.noncontractible;
  return out;
}

CalabiReport run_theorem(const RunConfig& cfg) {
  cfg.validate();
  CalabiReport rep;
  rep.config_echo = config_echo(cfg);
  rep.ledger = ledger_fingerprint();

  const auto X = make_manifold(cfg);
  const Vec z0 = X.fixed_point();
  const double F_at_s = manifolds::moment(X, z0);

  // normalized target: int F~ omega^n = int F omega^n - Vol(X) F(z0)
  const auto mean = manifolds::mean_integral(X, cfg.sphere_azimuth, cfg.sphere_height);
  const auto vol_quad = manifolds::integrate_function(X, [](const Vec&) { return 1.0; },
                                                      cfg.sphere_azimuth, cfg.sphere_height);
  rep.target = mean.value - vol_quad.value * F_at_s;
  rep.target_error = mean.error_bound + vol_quad.error_bound * std::abs(F_at_s);
  rep.target_closed_form = -manifolds::volume(X) * F_at_s;

  const double target_scale = manifolds::volume(X) * (std::abs(F_at_s) + 1.0);
  if (std::abs(rep.target) <= std::max(10.0 * rep.target_error, 1e-9 * target_scale))
    throw Error(Error::Kind::hypothesis,
                "requirements not met: int F omega^n = Vol(X) F(z0) (degenerate "
                "configuration, e.g. equal radii)");

  // chart and linearization
  const auto chart = manifolds::darboux_chart(X, cfg.chart_radius);
  if (!(cfg.rho3 < chart.radius))
    throw Error(Error::Kind::config, "config: lemma.rho3 must be smaller than the chart radius");
  rep.chart_pullback = manifolds::chart_pullback_residual(X, chart, 20, cfg.seed);

  const auto lin = manifolds::linearized_loop(X, chart, cfg.loop_samples);
  lin.validate(1e-6);
  const auto maslov = symplin::maslov_index_detailed(lin, 1e-6);
  rep.maslov_index = maslov.index;
  rep.maslov_residual = maslov.residual;
  if (maslov.index != 0)
    throw Error(Error::Kind::hypothesis,
                "requirements not met: the fixed point is not Maslov-zero");

  const auto fit = symplin::fit_rotation_weights(lin);
  rep.weights.assign(fit.weights.a.begin(), fit.weights.a.end());
  rep.weight_fit_residual = fit.fit_residual;
  rep.equivariance = manifolds::equivariance_residual(X, chart, lin, 20, cfg.seed + 1);

  {  // chart Hamiltonian must be the quadratic form sum -pi a_j |z_j|^2
    Rng rng(cfg.seed + 2);
    const int d = 2 * chart.n;
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
      Vec w(d);
      double nrm2 = 2.0;
      while (nrm2 > 1.0) {
        for (int i = 0; i < d; ++i) w(i) = rng.uniform(-1.0, 1.0);
        nrm2 = w.squaredNorm();
      }
      w *= 0.7 * chart.radius;
      double quad = 0.0;
      for (int j = 0; j < chart.n; ++j)
        quad += -kPi * static_cast<double>(fit.weights.a[j]) *
                (w(j) * w(j) + w(chart.n + j) * w(chart.n + j));
      const double fs = manifolds::moment(X, chart.inverse(w)) - F_at_s;
      worst = std::max(worst, std::abs(fs - quad));
    }
    rep.quadratic_form_residual = worst;
  }

  // null-homotopy for the calibrated weights
  const auto rot = symplin::rotation_loop(fit.weights, cfg.loop_samples);
  const auto hom = nullhomotopy::BasedHomotopy::for_weights(fit.weights);
  rep.homotopy_boundary = hom.boundary_report(rot).max();

  rep.epsilon = cfg.epsilon_paper ? std::abs(rep.target) / 2.0 : cfg.epsilon_value;

  cutoff::LemmaOptions lopts;
  lopts.margin = cfg.margin;
  lopts.cal.t_nodes = cfg.t_nodes;
  lopts.cal.per_axis = cfg.ball_per_axis;
  lopts.cal.sigma_steps = cfg.sigma_steps;
  lopts.cal.segment_nodes = cfg.segment_nodes;
  lopts.loop_samples = cfg.loop_samples;
  lopts.max_halvings = cfg.max_halvings;
  lopts.seed = cfg.seed;
  const auto lem = cutoff::lemma_loop(rot, hom, cfg.rho3, rep.epsilon, lopts);
  rep.lemma_history = lem.history;
  if (!lem.passed) {
    rep.pass = false;
    add_flag(rep, "lemma_cal_below_epsilon", lem.history.back().cal_abs, rep.epsilon, false);
    return rep;
  }
  rep.balls = lem.balls;
  rep.bbar_radius = 0.5 * lem.balls.rho1;
  rep.cal_g = lem.cal.value;
  rep.cal_g_error = lem.cal.error_bound;
  rep.certified_K = lem.certified_K;
  rep.certified_bound = lem.certified_bound;
  rep.halvings_used = lem.halvings_used;
  rep.g_closure = lem.closure_residual;
  rep.g_interp = lem.interp_residual;
  rep.g_support = lem.support_residual;

  rep.cal_h = rep.target - rep.cal_g;

  TheoremSystem sys{X, chart, hom, cutoff::cutoff_profile(lem.balls.rho2, lem.balls.rho3),
                    lem.balls, lem.sigma_steps_used, F_at_s};

  // H_t vanishes on B1 (the proof's mechanism): sup over a B1 grid
  {
    Rng rng(cfg.seed + 3);
    const int d = 2 * chart.n;
    double sup = 0.0;
    std::vector<Vec> dirs;
    for (int k = 0; k < 12; ++k) {
      Vec v(d);
      double nrm = 0.0;
      while (nrm < 0.1) {
        for (int i = 0; i < d; ++i) v(i) = rng.uniform(-1.0, 1.0);
        nrm = v.norm();
      }
      dirs.push_back(v / nrm);
    }
    for (const Vec& dir : dirs) {
      for (double frac : {0.45, 0.9}) {
        const Vec w = (frac * lem.balls.rho1) * dir;
        const Vec x = chart.inverse(w);
        for (int k = 0; k < cfg.t_nodes; ++k) {
          const double t = (k + 0.5) / cfg.t_nodes;
          sup = std::max(sup, std::abs(sys.h_generator(t, x)));
        }
      }
    }
    rep.h_b1_sup = sup;
    double scale = 0.0;
    for (const Vec& dir : dirs)
      scale = std::max(scale, std::abs(sys.ftilde_chart(Vec(0.95 * chart.radius * dir))));
    rep.h_b1_scale = scale;
  }

  // direct quadrature route for Cal(h)
  const DirectCal direct = direct_calabi(sys, rep.target, rep.target_error, cfg.t_nodes,
                                         cfg.ball_per_axis, cfg.segment_nodes);
  rep.cal_h_direct = direct.value;
  rep.cal_h_direct_error = direct.error_bound;

  // loop closure of h on manifold tracers
  {
    Rng rng(cfg.seed + 4);
    auto tracers = manifold_tracers(X, 20, rng);
    // keep tracers off the removed ball
    std::erase_if(tracers, [&](const Vec& p) {
      return sys.chart.forward(p).norm() < rep.bbar_radius;
    });
    rep.loop_closure =
        verify_loop([&sys](double t, const Vec& x) { return sys.h_point(t, x); }, tracers);
  }

  // PDE cross-check at shell samples
  {
    Rng rng(cfg.seed + 5);
    std::vector<Vec> xs;
    std::vector<double> ss;
    const int d = 2 * chart.n;
    for (int k = 0; k < 5; ++k) {
      Vec v(d);
      double nrm = 0.0;
      while (nrm < 0.1) {
        for (int i = 0; i < d; ++i) v(i) = rng.uniform(-1.0, 1.0);
        nrm = v.norm();
      }
      const double r = rng.uniform(1.02 * lem.balls.rho2, 0.95 * lem.balls.rho3);
      xs.push_back((r / nrm) * v);
      ss.push_back(rng.uniform(0.2, 0.8));
    }
    double worst = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      const auto pr = cutoff::pde_crosscheck(hom, sys.prof, {ss[k]}, 0.3, {xs[k]},
                                             2 * sys.sigma_steps);
      worst = std::max(worst, pr.max_residual);
    }
    rep.pde_residual = worst;
  }

  // Hofer estimate for H_t over the manifold sampling grid
  {
    const int T = cfg.t_nodes;
    std::vector<double> osc(T);
    const int az = std::max(8, cfg.sphere_azimuth / 2);
    const int ht = std::max(4, cfg.sphere_height / 2);
    for (int k = 0; k < T; ++k) {
      const double t = (k + 0.5) / T;
      double mx = -std::numeric_limits<double>::infinity();
      double mn = std::numeric_limits<double>::infinity();
      manifolds::integrate_function(X, [&](const Vec& p) {
        const double v = sys.h_generator(t, p);
        mx = std::max(mx, v);
        mn = std::min(mn, v);
        return 0.0;
      }, az, ht);
      osc[k] = mx - mn;
    }
    rep.hofer_estimate = pairwise_sum(osc) / T;
    rep.support_volume = manifolds::volume(X) -
                         std::pow(kPi, chart.n) * std::pow(lem.balls.rho1, 2 * chart.n);
    const double comb = rep.cal_g_error + rep.target_error + 1e-9;
    rep.hofer_certified_ok =
        rep.support_volume * rep.hofer_estimate >= std::abs(rep.cal_h) - comb;
    rep.hofer_sharp_holds = rep.hofer_estimate >= std::abs(rep.cal_h);
  }

  // action-Maslov invariant
  {
    const auto am = manifolds::action_maslov(F_at_s, mean.value, vol_quad.value, 1e-9);
    rep.action_maslov_I = am.I;
    rep.action_maslov_flag = am.noncontractible;
  }

  // pass/fail flags
  add_flag(rep, "maslov_zero", static_cast<double>(rep.maslov_index), 0.0,
           rep.maslov_index == 0);
  add_flag(rep, "homotopy_boundary", rep.homotopy_boundary, 1e-9, rep.homotopy_boundary < 1e-9);
  add_flag(rep, "g_closure", rep.g_closure, 1e-6, rep.g_closure < 1e-6);
  add_flag(rep, "g_interp_b1", rep.g_interp, 1e-5, rep.g_interp < 1e-5);
  add_flag(rep, "g_support_exact", rep.g_support, 0.0, rep.g_support == 0.0);
  add_flag(rep, "cal_g_below_certified", std::abs(rep.cal_g),
           rep.certified_bound * 1.05 + rep.cal_g_error,
           std::abs(rep.cal_g) <= rep.certified_bound * 1.05 + rep.cal_g_error);
  add_flag(rep, "cal_g_below_epsilon", std::abs(rep.cal_g) + rep.cal_g_error, rep.epsilon,
           std::abs(rep.cal_g) + rep.cal_g_error < rep.epsilon);
  add_flag(rep, "cal_h_in_window", std::abs(rep.cal_h - rep.target), rep.epsilon,
           std::abs(rep.cal_h - rep.target) < rep.epsilon);
  add_flag(rep, "cal_h_nonzero", std::abs(rep.cal_h), rep.epsilon,
           std::abs(rep.cal_h) >= rep.epsilon);
  const double route_gap = std::abs(rep.cal_h_direct - rep.cal_h);
  const double route_tol = rep.cal_h_direct_error + rep.cal_g_error + rep.target_error;
  add_flag(rep, "cal_routes_agree", route_gap, route_tol, route_gap <= route_tol);
  add_flag(rep, "h_b1_residual", rep.h_b1_sup, 1e-6 * rep.h_b1_scale,
           rep.h_b1_sup < 1e-6 * rep.h_b1_scale);
  add_flag(rep, "loop_closure", rep.loop_closure, 1e-5, rep.loop_closure < 1e-5);
  add_flag(rep, "chart_pullback", rep.chart_pullback, 1e-6, rep.chart_pullback < 1e-6);
  add_flag(rep, "equivariance", rep.equivariance, 1e-6, rep.equivariance < 1e-6);
  add_flag(rep, "chart_quadratic_form", rep.quadratic_form_residual, 1e-6,
           rep.quadratic_form_residual < 1e-6);
  add_flag(rep, "pde_crosscheck", rep.pde_residual, 1e-3, rep.pde_residual < 1e-3);
  add_flag(rep, "hofer_certified", rep.support_volume * rep.hofer_estimate,
           std::abs(rep.cal_h), rep.hofer_certified_ok);

  rep.pass = true;
  for (const auto& f : rep.flags) rep.pass = rep.pass && f.pass;
  return rep;
}

report::Json CalabiReport::to_json() const {
  using report::Json;
  Json j = Json::object();
  j.set("tool", "calabi-forge");
  j.set("kind", "theorem_report");

  Json cal = Json::object();
  cal.set("target", target);
  cal.set("target_error", target_error);
  cal.set("target_closed_form", target_closed_form);
  cal.set("cal_g", cal_g);
  cal.set("cal_g_error", cal_g_error);
  cal.set("cal_h", cal_h);
  cal.set("cal_h_direct", cal_h_direct);
  cal.set("cal_h_direct_error", cal_h_direct_error);
  cal.set("epsilon", epsilon);
  j.set("calabi", std::move(cal));

  Json mas = Json::object();
  mas.set_int("index", maslov_index);
  mas.set("residual", maslov_residual);
  Json wts = Json::array();
  for (long w : weights) wts.push(Json::integer(w));
  mas.set("weights", std::move(wts));
  j.set("maslov", std::move(mas));

  Json res = Json::object();
  res.set("homotopy_boundary", homotopy_boundary);
  res.set("loop_closure", loop_closure);
  res.set("g_closure", g_closure);
  res.set("g_interp_b1", g_interp);
  res.set("g_support", g_support);
  res.set("h_b1_sup", h_b1_sup);
  res.set("h_b1_scale", h_b1_scale);
  res.set("chart_pullback", chart_pullback);
  res.set("equivariance", equivariance);
  res.set("chart_quadratic_form", quadratic_form_residual);
  res.set("pde_crosscheck", pde_residual);
  res.set("weight_fit", weight_fit_residual);
  j.set("residuals", std::move(res));

  Json lem = Json::object();
  lem.set("rho1", balls.rho1);
  lem.set("rho2", balls.rho2);
  lem.set("rho3", balls.rho3);
  lem.set("kappa", balls.kappa);
  lem.set("bbar_radius", bbar_radius);
  lem.set("certified_K", certified_K);
  lem.set("certified_bound", certified_bound);
  lem.set_int("halvings_used", halvings_used);
  Json hist = Json::array();
  for (const auto& row : lemma_history) {
    Json r = Json::object();
    r.set("rho3", row.rho3);
    r.set("cal_abs", row.cal_abs);
    r.set("err_bound", row.err_bound);
    r.set("certified_bound", row.certified_bound);
    hist.push(std::move(r));
  }
  lem.set("history", std::move(hist));
  j.set("lemma", std::move(lem));

  Json hof = Json::object();
  hof.set("estimate", hofer_estimate);
  hof.set("support_volume", support_volume);
  hof.set("certified_product", support_volume * hofer_estimate);
  hof.set("cal_h_abs", std::abs(cal_h));
  hof.set("certified_ok", hofer_certified_ok);
  hof.set("sharp_holds", hofer_sharp_holds);
  j.set("hofer", std::move(hof));

  Json am = Json::object();
  am.set("I", action_maslov_I);
  am.set("noncontractible", action_maslov_flag);
  j.set("action_maslov", std::move(am));

  Json prov = Json::object();
  prov.set("g_contractible",
           "g is homotopic to the identity through the loops g_{s,.} (witness residual "
           "recorded as g_closure)");
  prov.set("h_homotopy_class", "h = g^{-1} o f with g contractible, so h ~ f in Ham(X)");
  j.set("provenance", std::move(prov));

  Json fl = Json::array();
  for (const auto& f : flags) {
    Json e = Json::object();
    e.set("name", f.name);
    e.set("value", f.value);
    e.set("threshold", f.threshold);
    e.set("pass", f.pass);
    fl.push(std::move(e));
  }
  j.set("flags", std::move(fl));
  j.set("pass", pass);
  j.set("config", config_echo);
  j.set("ledger", ledger);
  return j;
}

}  // namespace calabi::pipeline
