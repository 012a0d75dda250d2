#pragma once

#include <random>

#include "helmproof/hprog.hpp"

namespace helmproof::testgen {

/// Space used by the randomized properties: two scalars, two planar vectors,
/// a discrete scalar and a discrete vector.
inline SpacePtr space() {
  static const SpacePtr sp = register_space({
      {"x", LensKind::Continuous, Sort::Real, {1, 1}},
      {"y", LensKind::Continuous, Sort::Real, {1, 1}},
      {"u", LensKind::Continuous, Sort::Real, {1, 2}},
      {"w", LensKind::Continuous, Sort::Real, {1, 2}},
      {"k", LensKind::Discrete, Sort::Real, {1, 1}},
      {"c", LensKind::Discrete, Sort::Real, {1, 2}},
  });
  return sp;
}

struct Gen {
  std::mt19937_64 rng;
  bool smooth_only = true;  // restrict to nodes with a Lie rule

  explicit Gen(std::uint64_t seed) : rng(seed) {}

  double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); }

  Expr lens(const char* n) { return ex::var(space()->lens(n)); }

  Expr small_const() { return ex::constant(std::round(real(-3, 3) * 4) / 4); }

  Expr vec(int depth) {
    int choice = depth <= 0 ? pick(3) : pick(7);
    switch (choice) {
      case 0: return lens("u");
      case 1: return lens("w");
      case 2: return lens("c");
      case 3: return vec(depth - 1) + vec(depth - 1);
      case 4: return vec(depth - 1) - vec(depth - 1);
      case 5: return ex::scalar_mul(scalar(depth - 1), vec(depth - 1));
      default: return ex::row({scalar(depth - 1), scalar(depth - 1)});
    }
  }

  Expr scalar(int depth) {
    if (depth <= 0) {
      switch (pick(5)) {
        case 0: return lens("x");
        case 1: return lens("y");
        case 2: return lens("k");
        case 3: return ex::index(lens(pick(2) ? "u" : "w"), 1, 1 + pick(2));
        default: return small_const();
      }
    }
    int n = smooth_only ? 12 : 17;
    switch (pick(n)) {
      case 0: return scalar(depth - 1) + scalar(depth - 1);
      case 1: return scalar(depth - 1) - scalar(depth - 1);
      case 2:
      case 3: return scalar(depth - 1) * scalar(depth - 1);
      case 4: return -scalar(depth - 1);
      case 5: return ex::sin(scalar(depth - 1));
      case 6: return ex::cos(scalar(depth - 1));
      case 7: return ex::dot(vec(depth - 1), vec(depth - 1));
      case 8: {
        Expr d = scalar(depth - 1);
        return scalar(depth - 1) / (ex::constant(1) + d * d);
      }
      case 9: {
        Expr d = scalar(depth - 1);
        return ex::sqrt(ex::constant(1) + d * d);
      }
      case 10: return ex::norm(vec(depth - 1) + ex::row({ex::constant(7), ex::constant(0)}));
      case 11: return ex::index(vec(depth - 1), 1, 1 + pick(2));
      case 12: return ex::abs(scalar(depth - 1));
      case 13: return ex::sgn(scalar(depth - 1));
      case 14: return ex::min(scalar(depth - 1), scalar(depth - 1));
      case 15: return ex::max(scalar(depth - 1), scalar(depth - 1));
      default:
        return ex::cond(pr::le(scalar(depth - 1), scalar(depth - 1)), scalar(depth - 1), scalar(depth - 1));
    }
  }

  /// Polynomial field over the continuous lenses.
  VectorField field() {
    bool keep = smooth_only;
    smooth_only = true;
    VectorField F;
    auto poly = [&] {
      Expr e = small_const();
      for (int k = pick(3); k >= 0; --k) e = e + small_const() * (pick(2) ? lens("x") : lens("y"));
      if (pick(2)) e = e + ex::index(lens("u"), 1, 1) * lens("y");
      return e;
    };
    if (pick(4)) F.bind(space()->lens("x"), poly());
    if (pick(4)) F.bind(space()->lens("y"), poly());
    if (pick(4)) F.bind(space()->lens("u"), ex::row({poly(), poly()}));
    if (pick(4)) F.bind(space()->lens("w"), ex::scalar_mul(lens("x"), lens("u")));
    smooth_only = keep;
    return F;
  }

  HybridState state(double lo = -2, double hi = 2) {
    const SpacePtr& sp = space();
    std::vector<double> cont(sp->cont_dim());
    for (auto& z : cont) z = real(lo, hi);
    return HybridState(sp)
        .with_cont(cont)
        .put(sp->lens("k"), MatVal::scalar(real(lo, hi)))
        .put(sp->lens("c"), MatVal::row({real(lo, hi), real(lo, hi)}));
  }
};

}  // namespace helmproof::testgen
