#pragma once
#ifndef LFPSQP_BENCH_HPP
#define LFPSQP_BENCH_HPP

#include "lfpsqp/problem.hpp"
#include "lfpsqp/types.hpp"

#include <Eigen/Sparse>

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace lfpsqp::bench {

/// Portable random stream: std::mt19937_64 is fully specified by the
/// standard; uniforms take its top 53 bits and normals use Box-Muller, so
/// instances reproduce across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do u1 = uniform();
    while (u1 <= 0.0);
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  Vec normal_vec(Index n) {
    Vec v(n);
    for (Index i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

using SparseMat = Eigen::SparseMatrix<double>;

struct BenchParams {
  Index n = 100;
  std::uint64_t seed = 0;
  double density = 0.02;
};

struct BenchInstance {
  ProblemSpec spec;
  Vec x0;
  /// Closed-form minimiser when one is known.
  std::optional<Vec> known_x;
  /// Optimal objective value when known (closed form or oracle).
  std::optional<double> known_f;
  /// The Rayleigh matrix, for the eigensolver oracle.
  std::shared_ptr<const SparseMat> matrix;
};

/// Symmetric A = B + B^T with B holding i.i.d. standard normal entries, each
/// present with probability density / 2 (row-major draw order).
inline SparseMat random_symmetric(Index n, double density, std::uint64_t seed) {
  if (!(density > 0.0 && density <= 2.0)) throw Error(Errc::invalid_argument, "density must be in (0, 2]");
  Rng rng(seed);
  std::vector<Eigen::Triplet<double>> trips;
  const double p = 0.5 * density;
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (rng.uniform() < p) {
        const double v = rng.normal();
        trips.emplace_back(i, j, v);
        trips.emplace_back(j, i, v);
      }
  SparseMat a(n, n);
  a.setFromTriplets(trips.begin(), trips.end());
  a.makeCompressed();
  return a;
}

/// Rayleigh quotient f = x^T A x / 2 on the unit sphere, optionally restricted
/// to x >= 0.
inline ProblemSpec rayleigh_spec(std::shared_ptr<const SparseMat> a, bool positive) {
  ProblemSpec spec;
  spec.n = a->rows();
  spec.m = 1;
  spec.f = [a](const Vec& x) { return 0.5 * x.dot(*a * x); };
  spec.c = [](const Vec& x) { return Vec::Constant(1, x.squaredNorm() - 1.0); };
  spec.derivs.grad_f = [a](const Vec& x) { return Vec(*a * x); };
  spec.derivs.jac = [](const Vec& x) { return Mat(2.0 * x.transpose()); };
  spec.derivs.hess_lag_action = [a](const Vec&, const Vec& lambda, const Vec& v) {
    return Vec(*a * v + 2.0 * lambda[0] * v);
  };
  if (positive) {
    spec.x_lower = Vec::Zero(spec.n);
    spec.x_upper = Vec::Constant(spec.n, kInf);
  }
  return spec;
}

inline Vec random_unit(Index n, Rng& rng, bool positive) {
  Vec x = rng.normal_vec(n);
  if (positive) x = x.cwiseAbs();
  return x / x.norm();
}

/// A = diag(n, ..., 1); minimum f* = 1/2 at x = +-e_n.
inline BenchInstance rayleigh_diag(Index n, std::uint64_t seed = 0) {
  if (n < 2) throw Error(Errc::invalid_argument, "rayleigh problems need n >= 2");
  SparseMat a(n, n);
  a.reserve(Eigen::VectorXi::Constant(n, 1));
  for (Index i = 0; i < n; ++i) a.insert(i, i) = static_cast<double>(n - i);
  a.makeCompressed();
  auto shared = std::make_shared<const SparseMat>(std::move(a));
  BenchInstance inst;
  inst.spec = rayleigh_spec(shared, false);
  Rng rng(seed);
  inst.x0 = random_unit(n, rng, false);
  inst.known_f = 0.5;
  inst.matrix = shared;
  return inst;
}

/// Random sparse symmetric A; the matrix and x0 use independent streams
/// derived from `seed`.
inline BenchInstance rayleigh_sparse(Index n, double density, std::uint64_t seed) {
  if (n < 2) throw Error(Errc::invalid_argument, "rayleigh problems need n >= 2");
  auto shared = std::make_shared<const SparseMat>(random_symmetric(n, density, seed));
  BenchInstance inst;
  inst.spec = rayleigh_spec(shared, false);
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  inst.x0 = random_unit(n, rng, false);
  inst.matrix = shared;
  return inst;
}

/// rayleigh_sparse restricted to the positive orthant.
inline BenchInstance rayleigh_positive(Index n, double density, std::uint64_t seed) {
  if (n < 2) throw Error(Errc::invalid_argument, "rayleigh problems need n >= 2");
  auto shared = std::make_shared<const SparseMat>(random_symmetric(n, density, seed));
  BenchInstance inst;
  inst.spec = rayleigh_spec(shared, true);
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  inst.x0 = random_unit(n, rng, true);
  inst.matrix = shared;
  return inst;
}

/// min c . x  s.t.  x . x <= 1, as an inequality; x* = -c / ||c||.
inline BenchInstance sphere_linear(const Vec& c) {
  const Index n = c.size();
  BenchInstance inst;
  ProblemSpec& spec = inst.spec;
  spec.n = n;
  spec.p = 1;
  spec.f = [c](const Vec& x) { return c.dot(x); };
  spec.d = [](const Vec& x) { return Vec::Constant(1, x.squaredNorm()); };
  spec.d_lower = Vec::Constant(1, -kInf);
  spec.d_upper = Vec::Constant(1, 1.0);
  spec.derivs.grad_f = [c](const Vec&) { return c; };
  spec.derivs.jac = [](const Vec& x) { return Mat(2.0 * x.transpose()); };
  spec.derivs.hess_lag_action = [](const Vec&, const Vec& lambda, const Vec& v) {
    return Vec(2.0 * lambda[0] * v);
  };
  inst.x0 = Vec::Zero(n);
  inst.known_x = Vec(-c / c.norm());
  inst.known_f = -c.norm();
  return inst;
}

inline BenchInstance sphere_linear(Index n, std::uint64_t seed) {
  if (n < 1) throw Error(Errc::invalid_argument, "sphere-linear needs n >= 1");
  Rng rng(seed);
  return sphere_linear(rng.normal_vec(n));
}

/// Figure-eight region P(x1) <= x2 <= -P(x1), P = (x1 + 1)(x1 - 1) x1^2,
/// objective -x1 - x2 / 2. The region pinches to a point at the origin.
inline BenchInstance degenerate_quartic() {
  BenchInstance inst;
  ProblemSpec& spec = inst.spec;
  spec.n = 2;
  spec.p = 2;
  spec.f = [](const Vec& x) { return -x[0] - 0.5 * x[1]; };
  spec.d = [](const Vec& x) {
    const double poly = (x[0] + 1.0) * (x[0] - 1.0) * x[0] * x[0];
    return Vec((Vec(2) << x[1] + poly, x[1] - poly).finished());
  };
  spec.d_lower = (Vec(2) << -kInf, 0.0).finished();
  spec.d_upper = (Vec(2) << 0.0, kInf).finished();
  spec.derivs.grad_f = [](const Vec&) { return Vec((Vec(2) << -1.0, -0.5).finished()); };
  spec.derivs.jac = [](const Vec& x) {
    const double dp = 4.0 * x[0] * x[0] * x[0] - 2.0 * x[0];
    return Mat((Mat(2, 2) << dp, 1.0, -dp, 1.0).finished());
  };
  spec.derivs.hess_lag_action = [](const Vec& x, const Vec& lambda, const Vec& v) {
    const double d2p = 12.0 * x[0] * x[0] - 2.0;
    return Vec((Vec(2) << (lambda[0] - lambda[1]) * d2p * v[0], 0.0).finished());
  };
  inst.x0 = (Vec(2) << -0.9, 0.0).finished();
  return inst;
}

/// cos^2(x1) + x2^2 <= 1 with -2 <= x1 <= 2, objective -x1 - x2 / 2. The
/// constraint gradient vanishes at the origin.
inline BenchInstance degenerate_cos() {
  BenchInstance inst;
  ProblemSpec& spec = inst.spec;
  spec.n = 2;
  spec.p = 1;
  spec.f = [](const Vec& x) { return -x[0] - 0.5 * x[1]; };
  spec.d = [](const Vec& x) {
    const double c = std::cos(x[0]);
    return Vec::Constant(1, c * c + x[1] * x[1]);
  };
  spec.d_lower = Vec::Constant(1, -kInf);
  spec.d_upper = Vec::Constant(1, 1.0);
  spec.x_lower = (Vec(2) << -2.0, -kInf).finished();
  spec.x_upper = (Vec(2) << 2.0, kInf).finished();
  spec.derivs.grad_f = [](const Vec&) { return Vec((Vec(2) << -1.0, -0.5).finished()); };
  spec.derivs.jac = [](const Vec& x) {
    return Mat((Mat(1, 2) << -std::sin(2.0 * x[0]), 2.0 * x[1]).finished());
  };
  spec.derivs.hess_lag_action = [](const Vec& x, const Vec& lambda, const Vec& v) {
    return Vec((Vec(2) << -2.0 * std::cos(2.0 * x[0]) * lambda[0] * v[0], 2.0 * lambda[0] * v[1]).finished());
  };
  inst.x0 = (Vec(2) << -1.5, 0.0).finished();
  return inst;
}

/// Registry entry; `build` is deterministic in its parameters.
struct BenchProblem {
  std::string name;
  std::string summary;
  std::function<BenchInstance(const BenchParams&)> build;
};

inline const std::vector<BenchProblem>& registry() {
  static const std::vector<BenchProblem> problems = {
      {"rayleigh-diag", "Rayleigh quotient on the sphere, A = diag(n, ..., 1)",
       [](const BenchParams& p) { return rayleigh_diag(p.n, p.seed); }},
      {"rayleigh-sparse", "Rayleigh quotient on the sphere, random sparse symmetric A",
       [](const BenchParams& p) { return rayleigh_sparse(p.n, p.density, p.seed); }},
      {"rayleigh-positive", "Rayleigh quotient on the sphere within x >= 0",
       [](const BenchParams& p) { return rayleigh_positive(p.n, p.density, p.seed); }},
      {"sphere-linear", "linear objective on the solid unit ball",
       [](const BenchParams& p) { return sphere_linear(p.n, p.seed); }},
      {"degenerate-quartic", "figure-eight region pinched at the origin (n = 2)",
       [](const BenchParams&) { return degenerate_quartic(); }},
      {"degenerate-cos", "cos^2(x1) + x2^2 <= 1 pinched at the origin (n = 2)",
       [](const BenchParams&) { return degenerate_cos(); }},
  };
  return problems;
}

inline const BenchProblem* find_problem(const std::string& name) {
  for (const auto& p : registry())
    if (p.name == name) return &p;
  return nullptr;
}

inline std::string registry_names() {
  std::string out;
  for (const auto& p : registry()) {
    if (!out.empty()) out += ", ";
    out += p.name;
  }
  return out;
}

}  // namespace lfpsqp::bench

#endif  // LFPSQP_BENCH_HPP
