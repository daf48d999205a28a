#include "sosest/lbfgs.hpp"

#include <cmath>
#include <deque>
#include <limits>

#include "sosest/error.hpp"

namespace sosest {

namespace {

struct Correction {
  Eigen::VectorXd s;
  Eigen::VectorXd y;
  double rho;
};

// Two-loop recursion: returns -H g.
Eigen::VectorXd search_direction(const std::deque<Correction>& mem, const Eigen::VectorXd& g) {
  Eigen::VectorXd q = g;
  std::vector<double> alpha(mem.size());
  for (std::size_t i = mem.size(); i-- > 0;) {
    alpha[i] = mem[i].rho * mem[i].s.dot(q);
    q -= alpha[i] * mem[i].y;
  }
  if (!mem.empty()) {
    const auto& last = mem.back();
    q *= last.s.dot(last.y) / last.y.squaredNorm();
  }
  for (std::size_t i = 0; i < mem.size(); ++i) {
    const double beta = mem[i].rho * mem[i].y.dot(q);
    q += (alpha[i] - beta) * mem[i].s;
  }
  return -q;
}

void require_finite(double f, const Eigen::VectorXd& g, const Eigen::VectorXd& x) {
  if (!std::isfinite(f) || !g.allFinite()) {
    throw NumericalError("non-finite objective or gradient at iterate with ||x||_inf = " +
                         std::to_string(x.lpNorm<Eigen::Infinity>()));
  }
}

}  // namespace

LbfgsResult minimize_lbfgs(const ObjectiveFn& f, Eigen::VectorXd x0, const LbfgsOptions& opt) {
  LbfgsResult res;
  Eigen::VectorXd x = std::move(x0);
  Eigen::VectorXd g(x.size());
  double fx = f(x, g);
  require_finite(fx, g, x);
  res.trace.push_back({0, fx, g.norm()});

  const double g0 = std::max(1.0, g.lpNorm<Eigen::Infinity>());
  std::deque<Correction> mem;
  Eigen::VectorXd x_new(x.size()), g_new(x.size());

  auto finish = [&](bool converged, const char* status) {
    res.x = x;
    res.objective = fx;
    res.converged = converged;
    res.status = status;
    return res;
  };

  if (g.lpNorm<Eigen::Infinity>() <= opt.grad_tol * g0 || g.isZero(0.0)) return finish(true, "gradient");

  for (int k = 1; k <= opt.max_iterations; ++k) {
    Eigen::VectorXd d = search_direction(mem, g);
    double dg = d.dot(g);
    if (!(dg < 0.0)) {
      mem.clear();
      d = -g;
      dg = d.dot(g);
    }
    double step = mem.empty() ? 1.0 / std::max(d.norm(), 1e-300) : 1.0;

    // Weak Wolfe bisection search.
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    bool accepted = false;
    double f_new = fx;
    double best_lo_f = fx;
    Eigen::VectorXd x_lo = x, g_lo = g;
    for (int ls = 0; ls < opt.max_linesearch; ++ls) {
      x_new = x + step * d;
      f_new = f(x_new, g_new);
      if (!std::isfinite(f_new) || f_new > fx + opt.armijo * step * dg) {
        hi = step;
      } else if (g_new.dot(d) < opt.wolfe * dg) {
        lo = step;
        best_lo_f = f_new;
        x_lo = x_new;
        g_lo = g_new;
      } else {
        accepted = true;
        break;
      }
      step = std::isinf(hi) ? 2.0 * lo : 0.5 * (lo + hi);
    }
    if (!accepted) {
      if (lo > 0.0) {
        x_new = x_lo;
        g_new = g_lo;
        f_new = best_lo_f;
      } else {
        if (!mem.empty()) {  // retry once along steepest descent
          mem.clear();
          continue;
        }
        return finish(true, "no further decrease");
      }
    }
    require_finite(f_new, g_new, x_new);

    Correction c{x_new - x, g_new - g, 0.0};
    const double sy = c.s.dot(c.y);
    if (sy > 1e-12 * c.s.norm() * c.y.norm()) {
      c.rho = 1.0 / sy;
      mem.push_back(std::move(c));
      if (static_cast<int>(mem.size()) > opt.memory) mem.pop_front();
    }
    x = x_new;
    g = g_new;
    fx = f_new;
    res.iterations = k;
    res.trace.push_back({k, fx, g.norm()});

    if (g.lpNorm<Eigen::Infinity>() <= opt.grad_tol * g0) return finish(true, "gradient");
    if (k >= opt.past) {
      const double before = res.trace[res.trace.size() - 1 - opt.past].objective;
      if (before - fx <= opt.f_tol * std::max(1.0, std::abs(fx))) {
        return finish(true, "objective stalled");
      }
    }
  }
  return finish(false, "max iterations");
}

}  // namespace sosest
