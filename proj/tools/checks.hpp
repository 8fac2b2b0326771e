#pragma once

#include "stiefel/hmc.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace stiefel::checks {

struct BatteryResult {
  bool pass = false;
  std::string detail;
};

// Haar draws -> angles -> matrix reproduces the input; angles away from
// the chart boundary roundtrip the other way too.
BatteryResult roundtrip_battery(const std::vector<Shape>& shapes, int cases, std::uint64_t seed,
                                double tol_matrix = 1e-10, double tol_angles = 1e-9);

// Analytic log-measure against the finite-difference determinant oracle.
BatteryResult jacobian_battery(const std::vector<Shape>& shapes, int points, std::uint64_t seed,
                               double tol = 1e-5);

// eval_grad against central finite differences for the three bundled
// model targets.
BatteryResult gradient_battery(int points, std::uint64_t seed, double rel_tol = 1e-5,
                               double abs_floor = 1e-8);

// Per-angle KS tests of Haar draws pushed through the inverse map.
BatteryResult haar_marginal_battery(const std::vector<Shape>& shapes, int draws, double threshold,
                                    std::uint64_t seed);

// Per-angle KS tests of HMC draws from the uniform target, plus a
// two-sample KS on the Y11 functional against the QR oracle.
BatteryResult sampler_marginal_battery(const std::vector<Shape>& shapes, const HmcConfig& base,
                                       double threshold, double y11_threshold, std::uint64_t seed);

}  // namespace stiefel::checks
