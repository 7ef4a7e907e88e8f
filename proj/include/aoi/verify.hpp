#pragma once

// Self-check suite behind `aoi verify`: closed-form vs numeric stationary
// distributions, age-balance residuals, structural simulator-vs-table checks
// and simulated-vs-analytic ages and delivery fractions.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "aoi/rates.hpp"
#include "aoi/shs.hpp"
#include "aoi/sync_models.hpp"
#include "json.hpp"

namespace aoi::verify {

// Uniform draws over rho_hat in [0.001, 0.1], beta in [0.1, 20], sigma in [0.5, 20], mu_hat = 1.
std::vector<RateParams> random_parameter_grid(int points, std::uint64_t seed);

// Age-balance residual scaled by 1 + max |v|.
double relative_age_residual(const shs::ShsModel& model, const RateParams& params,
                             const shs::StationaryDistribution& pi,
                             const shs::AgeBalanceSolution& solution);

struct Options {
  int grid = 100;
  std::uint64_t seed = 1;
  double horizon = 2e5;
  std::uint64_t structural_events = 200000;
  // Where the structural check gets its tables; tests swap in faulty copies.
  std::function<shs::ShsModel(const sync::PrimitiveKind&)> model_source = sync::build_model;
};

struct Check {
  std::string name;
  bool passed = false;
  nlohmann::json detail;
};

struct Report {
  std::vector<Check> checks;

  bool passed() const;
  nlohmann::json to_json() const;
};

Report run(const Options& options);

}  // namespace aoi::verify
