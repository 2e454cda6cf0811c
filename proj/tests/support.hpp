#pragma once

#include <cmath>
#include <random>

#include "mmcm/kinetics.hpp"

namespace mmcm::testing {

// Seeded generator for property tests; draws are reproducible run to run.
class Draws {
 public:
  explicit Draws(std::uint64_t seed) : gen_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }

  double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }

  Kinetics<double> kinetics() {
    const RateConstants<double> r{log_uniform(1e-2, 1e2), log_uniform(1e-2, 1e2), log_uniform(1e-2, 1e2)};
    const Totals<double> t{log_uniform(1e-2, 1e2), log_uniform(1e-2, 1e2)};
    return Kinetics<double>(r, t);
  }

  NondimHTA<double> hta() {
    const double lambda = log_uniform(1e-2, 1e2);
    return NondimHTA<double>::from_values(lambda * uniform(1.05, 20.0), lambda, log_uniform(1e-4, 1.0));
  }

  NondimTQ<double> tq() { return nondim_tq(kinetics()); }

 private:
  std::mt19937_64 gen_;
};

inline double rel_diff(double a, double b) {
  const double s = std::max(std::abs(a), std::abs(b));
  return s == 0 ? 0.0 : std::abs(a - b) / s;
}

}  // namespace mmcm::testing
