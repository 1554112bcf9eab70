#pragma once

#include <random>

namespace testutil {

inline std::mt19937_64& rng() {
  static std::mt19937_64 gen(0x5eedULL);
  return gen;
}

inline double unit_value() {
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  return dist(rng());
}

inline double value_in(double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  return dist(rng());
}

inline int int_in(int lo, int hi) {
  std::uniform_int_distribution<int> dist(lo, hi);
  return dist(rng());
}

}  // namespace testutil
