#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace ftcop {

using objective_fn = std::function<double(const std::vector<double>&)>;

struct optim_options {
  int max_iterations = 500;
  double grad_tol = 1e-6;  // ||g||_inf <= grad_tol * max(1, |f|)
  double fd_step = 1e-6;   // central-difference step on the working scale
};

struct optim_result {
  std::vector<double> x;
  double f = 0.0;
  std::vector<double> gradient;  // of f at x, as the optimizer estimated it
  int iterations = 0;
  bool converged = false;
  std::string message;
};

inline std::vector<double> numerical_gradient(const objective_fn& f, std::vector<double> x,
                                              double h) {
  std::vector<double> g(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    x[i] = xi + h;
    const double fp = f(x);
    x[i] = xi - h;
    const double fm = f(x);
    x[i] = xi;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

// Central-difference Hessian with per-coordinate steps.
inline Eigen::MatrixXd numerical_hessian(const objective_fn& f, std::vector<double> x,
                                         const std::vector<double>& h) {
  const int n = static_cast<int>(x.size());
  Eigen::MatrixXd H(n, n);
  const double f0 = f(x);
  for (int i = 0; i < n; ++i) {
    const double xi = x[i];
    x[i] = xi + h[i];
    const double fp = f(x);
    x[i] = xi - h[i];
    const double fm = f(x);
    x[i] = xi;
    H(i, i) = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
    for (int j = i + 1; j < n; ++j) {
      const double xj = x[j];
      x[i] = xi + h[i]; x[j] = xj + h[j];
      const double fpp = f(x);
      x[j] = xj - h[j];
      const double fpm = f(x);
      x[i] = xi - h[i];
      const double fmm = f(x);
      x[j] = xj + h[j];
      const double fmp = f(x);
      x[i] = xi; x[j] = xj;
      H(i, j) = H(j, i) = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j]);
    }
  }
  return H;
}

// Quasi-Newton (BFGS) maximisation with numerical central-difference
// gradients and an Armijo backtracking line search; accepted steps never
// decrease the objective.
inline optim_result bfgs_maximize(const objective_fn& f, std::vector<double> x0,
                                  const optim_options& opt = {}) {
  const int n = static_cast<int>(x0.size());
  optim_result res;
  res.x = std::move(x0);
  if (n == 0) {
    res.f = f(res.x);
    res.converged = true;
    res.message = "nothing to optimize";
    return res;
  }
  auto neg = [&](const std::vector<double>& x) { return -f(x); };

  Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(res.x.data(), n);
  double fx = neg(res.x);
  if (!std::isfinite(fx)) {
    res.f = -fx;
    res.message = "objective not finite at the starting point";
    return res;
  }
  std::vector<double> xv(n);
  auto to_vec = [&](const Eigen::VectorXd& v) {
    for (int i = 0; i < n; ++i) xv[i] = v[i];
    return xv;
  };
  Eigen::VectorXd g = Eigen::Map<const Eigen::VectorXd>(
      numerical_gradient(neg, to_vec(x), opt.fd_step).data(), n);
  Eigen::MatrixXd Hinv = Eigen::MatrixXd::Identity(n, n);

  auto grad_ok = [&](const Eigen::VectorXd& grad, double fval) {
    return grad.lpNorm<Eigen::Infinity>() <= opt.grad_tol * std::max(1.0, std::fabs(fval));
  };

  int it = 0;
  bool converged = grad_ok(g, fx);
  std::string message = converged ? "gradient below tolerance at start" : "";
  while (!converged && it < opt.max_iterations) {
    ++it;
    Eigen::VectorXd p = -Hinv * g;
    if (p.dot(g) >= 0.0) {  // not a descent direction; reset the metric
      Hinv.setIdentity();
      p = -g;
    }
    double alpha = 1.0;
    const double slope = p.dot(g);
    double fnew = fx;
    Eigen::VectorXd xnew = x;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      xnew = x + alpha * p;
      fnew = neg(to_vec(xnew));
      if (std::isfinite(fnew) && fnew <= fx + 1e-4 * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      message = "line search could not improve the objective";
      break;
    }
    Eigen::VectorXd gnew = Eigen::Map<const Eigen::VectorXd>(
        numerical_gradient(neg, to_vec(xnew), opt.fd_step).data(), n);
    const Eigen::VectorXd s = xnew - x;
    const Eigen::VectorXd yv = gnew - g;
    const double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      if (it == 1) Hinv *= sy / yv.squaredNorm();  // Shanno-Phua initial metric
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
      Hinv = (I - rho * s * yv.transpose()) * Hinv * (I - rho * yv * s.transpose()) +
             rho * s * s.transpose();
    }
    x = xnew;
    fx = fnew;
    g = gnew;
    if (grad_ok(g, fx)) {
      converged = true;
      message = "gradient below tolerance";
    }
  }
  if (!converged && it >= opt.max_iterations) message = "iteration limit reached";

  res.x = to_vec(x);
  res.f = -fx;
  res.gradient.resize(n);
  for (int i = 0; i < n; ++i) res.gradient[i] = -g[i];
  res.iterations = it;
  res.converged = converged;
  res.message = message;
  return res;
}

}  // namespace ftcop
