#include "saalab/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "saalab/errors.hpp"

namespace saalab {

namespace {

double interp_ascending(const std::vector<double>& xs, const std::vector<double>& ys,
                        double x) {
  if (x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const std::size_t j = static_cast<std::size_t>(it - xs.begin());
  const double t = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
  return ys[j - 1] + t * (ys[j] - ys[j - 1]);
}

double adaptive_simpson_rec(const std::function<double(double)>& f, double a, double b,
                            double fa, double fm, double fb, double whole, double tol,
                            int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol) {
  if (b <= a) return 0.0;
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, 48);
}

}  // namespace

double EquilibriumSolution::c1_at(double p) const {
  return interp_ascending(price_grid, c1, p);
}

double EquilibriumSolution::c2_at(double p) const {
  return interp_ascending(price_grid, c2, p);
}

double EquilibriumSolution::bid_small(double v) const {
  return interp_ascending(c1, price_grid, v);
}

double EquilibriumSolution::bid_large(double v) const {
  return interp_ascending(c2, price_grid, v);
}

double expected_profit_small(double p, double v1, const EquilibriumModel& model,
                             const CostFn& c1, const CostFn& c2, bool* clamped) {
  const double lo = model.f_small.lower(), hi = model.f_small.upper();
  double x1 = c1(p), x2 = c2(p);
  bool flag = false;
  if (x1 < lo || x1 > hi) {
    x1 = std::clamp(x1, lo, hi);
    flag = true;
  }
  if (x2 < lo || x2 > hi) {
    x2 = std::clamp(x2, lo, hi);
    flag = true;
  }
  if (clamped != nullptr) *clamped = flag;
  return model.item_count * (p - v1) * (1.0 - model.f_small.cdf(x1)) *
         (1.0 - (1.0 - model.alpha) * model.f_large.cdf(x2));
}

double expected_profit_large(double p, double v2, const EquilibriumModel& model,
                             const CostFn& c1, bool* clamped) {
  const double lo = model.f_small.lower(), hi = model.f_small.upper();
  double x1 = c1(p);
  bool flag = false;
  if (x1 < lo || x1 > hi) {
    x1 = std::clamp(x1, lo, hi);
    flag = true;
  }
  if (clamped != nullptr) *clamped = flag;
  const double survive = 1.0 - model.f_small.cdf(x1);
  return (1.0 - model.alpha) * model.item_count * (p - v2) * survive * survive;
}

std::pair<double, double> foc_residual(double p, const EquilibriumModel& model, double c1,
                                       double c2, double c1_prime, double c2_prime) {
  const double a = model.alpha;
  const double s1 = 1.0 - model.f_small.cdf(c1);
  const double g2 = 1.0 - (1.0 - a) * model.f_large.cdf(c2);
  const double f1 = model.f_small.pdf(c1);
  const double f2 = model.f_large.pdf(c2);
  const double res_small =
      s1 * g2 - (p - c1) * (f1 * c1_prime * g2 + s1 * (1.0 - a) * f2 * c2_prime);
  const double res_large = s1 - (p - c2) * 2.0 * f1 * c1_prime;
  return {res_small, res_large};
}

SymmetricStrategy::SymmetricStrategy(ValueDistribution f, int n_bidders)
    : f_(std::move(f)), n_(n_bidders) {
  if (n_ < 2) throw ValidationError("symmetric strategy needs at least 2 bidders");
  bid_at_lowest_ = (*this)(f_.lower());
}

double SymmetricStrategy::operator()(double v) const {
  const double hi = f_.upper();
  if (v >= hi) return hi;  // zero markup at the top type, by continuity
  const int k = n_ - 1;
  const auto surv_pow = [&](double t) { return std::pow(1.0 - f_.cdf(t), k); };
  const double numer = adaptive_simpson(surv_pow, v, hi, 1e-13);
  const double denom = surv_pow(v);
  return v + numer / denom;
}

SymmetricStrategy solve_symmetric(const ValueDistribution& f, int n_bidders) {
  return SymmetricStrategy(f, n_bidders);
}

namespace {

struct OdeState {
  double c1 = 0.0;
  double c2 = 0.0;
};

struct Rhs {
  const EquilibriumModel* model;

  // Explicit form of the coupled system; the second bracket uses the
  // large-bidder markup identity p - c2 = [1-F1]/(2 f1 c1').
  bool operator()(double p, const OdeState& y, OdeState& dy) const {
    const double tiny = 1e-14;
    const double m1 = p - y.c1;
    const double m2 = p - y.c2;
    if (m1 <= tiny || m2 <= tiny) return false;
    const double s1 = 1.0 - model->f_small.cdf(y.c1);
    if (s1 <= 0.0) return false;
    const double f1 = model->f_small.pdf(y.c1);
    const double f2 = model->f_large.pdf(y.c2);
    if (f1 <= 0.0 || f2 <= 0.0) return false;
    const double oma = 1.0 - model->alpha;
    const double g2 = 1.0 - oma * model->f_large.cdf(y.c2);
    dy.c1 = s1 / (2.0 * f1 * m2);
    dy.c2 = g2 / (oma * f2) * (1.0 / m1 - 1.0 / (2.0 * m2));
    return true;
  }
};

struct TrajNode {
  double p;
  OdeState y;
  OdeState dy;
};

enum class ShotKind { Overshoot, Undershoot };

struct ShotResult {
  ShotKind kind = ShotKind::Undershoot;
  double p_end = 0.0;
  OdeState y_end;
  OdeState dy_end;
  double mismatch = 0.0;  // after linear extrapolation to v_hi
};

// Cash-Karp 4(5) pair with standard step-doubling control.
class Integrator {
 public:
  Integrator(Rhs rhs, double v_hi) : rhs_(rhs), v_hi_(v_hi) {}

  ShotResult shoot(double b_low, double p_hi, std::vector<TrajNode>* traj) const {
    double p = b_low;
    OdeState y{rhs_.model->f_small.lower(), rhs_.model->f_small.lower()};
    OdeState dy;
    if (!rhs_(p, y, dy)) {
      return {ShotKind::Overshoot, p, y, dy, v_hi_ - y.c1};
    }
    if (traj != nullptr) traj->push_back({p, y, dy});

    const double range = v_hi_ - rhs_.model->f_small.lower();
    double h = 1e-3 * (p_hi - b_low);
    const double h_min = 1e-14 * range;
    const double atol = 1e-13 * range, rtol = 1e-11;

    for (int step = 0; step < 2'000'000 && p < p_hi; ++step) {
      h = std::min(h, p_hi - p);
      OdeState y5, y4;
      if (!ck_step(p, y, h, y5, y4)) {
        h *= 0.5;
        if (h < h_min) {
          // derivative singular: a c caught up with p, the shot is too fast
          return {ShotKind::Overshoot, p, y, dy, 0.0};
        }
        continue;
      }
      const double err = std::max(
          std::abs(y5.c1 - y4.c1) / (atol + rtol * std::abs(y5.c1)),
          std::abs(y5.c2 - y4.c2) / (atol + rtol * std::abs(y5.c2)));
      if (err > 1.0) {
        h *= std::max(0.2, 0.9 * std::pow(err, -0.25));
        if (h < h_min) return {ShotKind::Overshoot, p, y, dy, 0.0};
        continue;
      }
      p += h;
      y = y5;
      if (!rhs_(p, y, dy)) {
        return {ShotKind::Overshoot, p, y, dy, 0.0};
      }
      if (traj != nullptr) traj->push_back({p, y, dy});
      if (y.c1 >= v_hi_ || y.c2 >= v_hi_) {
        return {ShotKind::Overshoot, p, y, dy, 0.0};
      }
      h *= std::min(5.0, 0.9 * std::pow(std::max(err, 1e-10), -0.2));
    }

    ShotResult r;
    r.kind = ShotKind::Undershoot;
    r.p_end = p;
    r.y_end = y;
    r.dy_end = dy;
    const double gap = v_hi_ - p;
    const double c1_top = y.c1 + dy.c1 * gap;
    const double c2_top = y.c2 + dy.c2 * gap;
    r.mismatch = std::max(std::abs(v_hi_ - c1_top), std::abs(v_hi_ - c2_top));
    return r;
  }

 private:
  bool ck_step(double p, const OdeState& y, double h, OdeState& y5, OdeState& y4) const {
    static constexpr double a2 = 0.2, a3 = 0.3, a4 = 0.6, a5 = 1.0, a6 = 0.875;
    static constexpr double b21 = 0.2;
    static constexpr double b31 = 3.0 / 40.0, b32 = 9.0 / 40.0;
    static constexpr double b41 = 0.3, b42 = -0.9, b43 = 1.2;
    static constexpr double b51 = -11.0 / 54.0, b52 = 2.5, b53 = -70.0 / 27.0,
                            b54 = 35.0 / 27.0;
    static constexpr double b61 = 1631.0 / 55296.0, b62 = 175.0 / 512.0,
                            b63 = 575.0 / 13824.0, b64 = 44275.0 / 110592.0,
                            b65 = 253.0 / 4096.0;
    static constexpr double c1c = 37.0 / 378.0, c3c = 250.0 / 621.0, c4c = 125.0 / 594.0,
                            c6c = 512.0 / 1771.0;
    static constexpr double d1 = 2825.0 / 27648.0, d3 = 18575.0 / 48384.0,
                            d4 = 13525.0 / 55296.0, d5 = 277.0 / 14336.0, d6 = 0.25;

    OdeState k1, k2, k3, k4, k5, k6, t;
    if (!rhs_(p, y, k1)) return false;
    t = {y.c1 + h * b21 * k1.c1, y.c2 + h * b21 * k1.c2};
    if (!rhs_(p + a2 * h, t, k2)) return false;
    t = {y.c1 + h * (b31 * k1.c1 + b32 * k2.c1), y.c2 + h * (b31 * k1.c2 + b32 * k2.c2)};
    if (!rhs_(p + a3 * h, t, k3)) return false;
    t = {y.c1 + h * (b41 * k1.c1 + b42 * k2.c1 + b43 * k3.c1),
         y.c2 + h * (b41 * k1.c2 + b42 * k2.c2 + b43 * k3.c2)};
    if (!rhs_(p + a4 * h, t, k4)) return false;
    t = {y.c1 + h * (b51 * k1.c1 + b52 * k2.c1 + b53 * k3.c1 + b54 * k4.c1),
         y.c2 + h * (b51 * k1.c2 + b52 * k2.c2 + b53 * k3.c2 + b54 * k4.c2)};
    if (!rhs_(p + a5 * h, t, k5)) return false;
    t = {y.c1 + h * (b61 * k1.c1 + b62 * k2.c1 + b63 * k3.c1 + b64 * k4.c1 + b65 * k5.c1),
         y.c2 + h * (b61 * k1.c2 + b62 * k2.c2 + b63 * k3.c2 + b64 * k4.c2 + b65 * k5.c2)};
    if (!rhs_(p + a6 * h, t, k6)) return false;

    y5 = {y.c1 + h * (c1c * k1.c1 + c3c * k3.c1 + c4c * k4.c1 + c6c * k6.c1),
          y.c2 + h * (c1c * k1.c2 + c3c * k3.c2 + c4c * k4.c2 + c6c * k6.c2)};
    y4 = {y.c1 + h * (d1 * k1.c1 + d3 * k3.c1 + d4 * k4.c1 + d5 * k5.c1 + d6 * k6.c1),
          y.c2 + h * (d1 * k1.c2 + d3 * k3.c2 + d4 * k4.c2 + d5 * k5.c2 + d6 * k6.c2)};
    return true;
  }

  Rhs rhs_;
  double v_hi_;
};

double hermite(double p, const TrajNode& a, const TrajNode& b, bool first) {
  const double h = b.p - a.p;
  if (h <= 0.0) return first ? a.y.c1 : a.y.c2;
  const double t = (p - a.p) / h;
  const double t2 = t * t, t3 = t2 * t;
  const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
  const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
  const double ya = first ? a.y.c1 : a.y.c2, yb = first ? b.y.c1 : b.y.c2;
  const double da = first ? a.dy.c1 : a.dy.c2, db = first ? b.dy.c1 : b.dy.c2;
  return h00 * ya + h10 * h * da + h01 * yb + h11 * h * db;
}

EquilibriumSolution solve_full_setaside(const EquilibriumModel& model, int grid_size) {
  const SymmetricStrategy strat = solve_symmetric(model.f_small, 2);
  const double v_lo = model.f_small.lower(), v_hi = model.f_small.upper();
  const double b_low = strat.b_low();

  EquilibriumSolution sol;
  sol.alpha = model.alpha;
  sol.b_low = b_low;
  sol.price_grid.resize(grid_size);
  sol.c1.resize(grid_size);
  for (int j = 0; j < grid_size; ++j) {
    const double p =
        b_low + (v_hi - b_low) * static_cast<double>(j) / (grid_size - 1);
    sol.price_grid[j] = p;
    // invert the increasing strategy by bisection on v
    double a = v_lo, b = v_hi;
    for (int i = 0; i < 80; ++i) {
      const double m = 0.5 * (a + b);
      (strat(m) < p ? a : b) = m;
    }
    sol.c1[j] = 0.5 * (a + b);
  }
  sol.c1.front() = v_lo;
  sol.c1.back() = v_hi;
  // the large bidder is excluded; carry the small-bidder inverse so the
  // solution stays monotone and evaluable
  sol.c2 = sol.c1;

  // FOC self-check on the reduced (two small bidders) condition
  double max_res = 0.0;
  const double h = sol.price_grid[1] - sol.price_grid[0];
  for (int j = 2; j + 2 < grid_size; ++j) {
    const double d = (-sol.c1[j + 2] + 8.0 * sol.c1[j + 1] - 8.0 * sol.c1[j - 1] +
                      sol.c1[j - 2]) /
                     (12.0 * h);
    const auto [rs, rl] =
        foc_residual(sol.price_grid[j], model, sol.c1[j], sol.c2[j], d, d);
    (void)rl;  // the large bidder has no FOC at alpha = 1
    max_res = std::max(max_res, std::abs(rs));
  }
  sol.diagnostics.max_foc_residual = max_res;
  sol.diagnostics.boundary_mismatch = 0.0;
  sol.diagnostics.shooting_iterations = 0;
  return sol;
}

}  // namespace

EquilibriumSolution solve_equilibrium(const EquilibriumModel& model, int grid_size,
                                      double tolerance) {
  if (grid_size < 16) throw ValidationError("grid_size too small");
  if (model.alpha < 0.0 || model.alpha > 1.0) {
    throw ValidationError("alpha must be in [0,1]");
  }
  const double v_lo = model.f_small.lower(), v_hi = model.f_small.upper();
  if (std::abs(model.f_large.lower() - v_lo) > 1e-12 ||
      std::abs(model.f_large.upper() - v_hi) > 1e-12) {
    throw ValidationError(
        "unsupported configuration: small and large value distributions must share a "
        "common support");
  }

  if (model.alpha >= 1.0 - 1e-12) {
    return solve_full_setaside(model, grid_size);
  }

  const double range = v_hi - v_lo;
  const double eps_halt = 1e-6 * range;
  const double p_hi = v_hi - eps_halt;
  const Integrator integ(Rhs{&model}, v_hi);

  // bracket scan: low b_low shoots past v_hi early, high b_low falls short
  const int kScan = 128;
  double lo_b = -1.0, hi_b = -1.0;
  ShotKind prev_kind = ShotKind::Overshoot;  // shots from b_low -> v_lo blow up
  double prev_b = v_lo + 1e-9 * range;
  int iterations = 0;
  for (int k = 1; k < kScan; ++k) {
    const double b = v_lo + range * static_cast<double>(k) / kScan;
    const ShotResult r = integ.shoot(b, p_hi, nullptr);
    ++iterations;
    if (prev_kind == ShotKind::Overshoot && r.kind == ShotKind::Undershoot) {
      lo_b = prev_b;
      hi_b = b;
      break;
    }
    prev_kind = r.kind;
    prev_b = b;
  }
  if (lo_b < 0.0) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "shooting failed to bracket b_low in [%.6g, %.6g]", v_lo + range / kScan,
                  v_lo + range * (kScan - 1) / kScan);
    throw SolverError(buf);
  }

  double best_mismatch = 1e300;
  double best_b = hi_b;
  while (hi_b - lo_b > 1e-15 * range && iterations < 400) {
    const double mid = 0.5 * (lo_b + hi_b);
    const ShotResult r = integ.shoot(mid, p_hi, nullptr);
    ++iterations;
    if (r.kind == ShotKind::Overshoot) {
      lo_b = mid;
    } else {
      hi_b = mid;
      if (r.mismatch < best_mismatch) {
        best_mismatch = r.mismatch;
        best_b = mid;
      }
      if (r.mismatch <= tolerance) break;
    }
  }

  std::vector<TrajNode> traj;
  const ShotResult final_shot = integ.shoot(best_b, p_hi, &traj);
  if (final_shot.kind != ShotKind::Undershoot || traj.size() < 4) {
    throw SolverError("shooting did not converge: final trajectory incomplete");
  }
  if (final_shot.mismatch > 1e-3 * range) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "shooting boundary mismatch %.3g exceeds 1e-3 of range",
                  final_shot.mismatch);
    throw SolverError(buf);
  }

  EquilibriumSolution sol;
  sol.alpha = model.alpha;
  sol.b_low = best_b;
  sol.price_grid.resize(grid_size);
  sol.c1.resize(grid_size);
  sol.c2.resize(grid_size);
  const double p_end = traj.back().p;
  std::size_t seg = 0;
  for (int j = 0; j < grid_size; ++j) {
    const double p = best_b + (v_hi - best_b) * static_cast<double>(j) / (grid_size - 1);
    sol.price_grid[j] = p;
    if (p <= p_end) {
      while (seg + 2 < traj.size() && traj[seg + 1].p < p) ++seg;
      sol.c1[j] = hermite(p, traj[seg], traj[seg + 1], true);
      sol.c2[j] = hermite(p, traj[seg], traj[seg + 1], false);
    } else {
      // linear extrapolation across the halt strip [p_end, v_hi]
      const auto& last = traj.back();
      sol.c1[j] = std::min(v_hi, last.y.c1 + last.dy.c1 * (p - last.p));
      sol.c2[j] = std::min(v_hi, last.y.c2 + last.dy.c2 * (p - last.p));
    }
  }
  for (int j = 1; j < grid_size; ++j) {
    if (!(sol.c1[j] > sol.c1[j - 1]) || !(sol.c2[j] > sol.c2[j - 1])) {
      throw SolverError("non-monotone inverse bid at grid index " + std::to_string(j));
    }
  }

  // FOC residuals with finite-difference slopes; the extrapolated strip near
  // the singular top boundary is not part of the integrated trajectory
  double max_res = 0.0;
  const double h = sol.price_grid[1] - sol.price_grid[0];
  for (int j = 2; j + 2 < grid_size; ++j) {
    if (sol.price_grid[j + 2] > p_end) break;
    const auto d = [&](const std::vector<double>& c) {
      return (-c[j + 2] + 8.0 * c[j + 1] - 8.0 * c[j - 1] + c[j - 2]) / (12.0 * h);
    };
    const auto [rs, rl] = foc_residual(sol.price_grid[j], model, sol.c1[j], sol.c2[j],
                                       d(sol.c1), d(sol.c2));
    max_res = std::max(max_res, std::max(std::abs(rs), std::abs(rl)));
  }
  sol.diagnostics.max_foc_residual = max_res;
  sol.diagnostics.boundary_mismatch = final_shot.mismatch;
  sol.diagnostics.shooting_iterations = iterations;
  return sol;
}

double best_response_gap(const EquilibriumModel& model, const EquilibriumSolution& solution,
                         double v, SizeClass bidder_type, int price_grid_size) {
  const CostFn c1 = [&](double p) { return solution.c1_at(p); };
  const CostFn c2 = [&](double p) { return solution.c2_at(p); };
  const auto profit = [&](double p) {
    return bidder_type == SizeClass::Small
               ? expected_profit_small(p, v, model, c1, c2)
               : expected_profit_large(p, v, model, c1);
  };
  const double p_star =
      bidder_type == SizeClass::Small ? solution.bid_small(v) : solution.bid_large(v);
  const double lo = solution.price_grid.front(), hi = solution.price_grid.back();
  double best = profit(p_star);
  for (int j = 0; j <= price_grid_size; ++j) {
    const double p = lo + (hi - lo) * static_cast<double>(j) / price_grid_size;
    best = std::max(best, profit(p));
  }
  if (best <= 1e-12) return 0.0;  // top types make no profit anywhere
  return (best - profit(p_star)) / best;
}

double markup_large(double p, const EquilibriumModel& model,
                    const EquilibriumSolution& solution) {
  const double h = solution.price_grid[1] - solution.price_grid[0];
  const double c1 = solution.c1_at(p);
  const double slope = (solution.c1_at(p + h) - solution.c1_at(p - h)) / (2.0 * h);
  const double s1 = 1.0 - model.f_small.cdf(c1);
  const double f1 = model.f_small.pdf(c1);
  return s1 / (2.0 * f1 * slope);
}

}  // namespace saalab
