#pragma once

// Stochastic-hybrid-system age analysis for finite discrete-state chains whose
// continuous state is a pair of ages x = (x0, x1) per tracked process.
//
// A model is a list of transitions; each fires at one of the four rates in
// RateParams and applies a binary reset map x' = x * A to each of the two
// age processes it carries (app updates and location updates). The engine
// computes the stationary distribution of the discrete chain and solves the
// age-balance fixed-point equations
//
//   v_q * (total rate leaving q) = pi_q * [1 1] + sum_{l into q} rate_l * v_{from(l)} * A_l
//
// where self-loops appear on both sides. The average age of the process is
// the sum over states of the second component of v_q.

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "aoi/rates.hpp"

namespace aoi::shs {

using AgeVector = std::array<double, 2>;

// 2x2 reset map applied as a row vector times the matrix.
struct ResetMap {
  std::array<std::array<int, 2>, 2> a{{{1, 0}, {0, 1}}};

  static constexpr ResetMap identity() { return {{{{1, 0}, {0, 1}}}}; }
  // (x0, x1) -> (0, x1): a fresh update enters service.
  static constexpr ResetMap fresh_arrival() { return {{{{0, 0}, {0, 1}}}}; }
  // (x0, x1) -> (x0, x0): the update in service reaches the monitor.
  static constexpr ResetMap deliver() { return {{{{1, 1}, {0, 0}}}}; }

  // Row-major bits a00 a01 a10 a11.
  static ResetMap from_bits(int a00, int a01, int a10, int a11) {
    return {{{{a00, a01}, {a10, a11}}}};
  }

  AgeVector apply(const AgeVector& x) const {
    return {x[0] * a[0][0] + x[1] * a[1][0], x[0] * a[0][1] + x[1] * a[1][1]};
  }

  bool is_identity() const { return *this == identity(); }
  bool is_binary() const;

  friend bool operator==(const ResetMap&, const ResetMap&) = default;
};

enum class AgeProcess : std::uint8_t { kLocation, kApp };

std::string to_string(AgeProcess p);

struct Transition {
  int id = 0;
  std::size_t from = 0;
  std::size_t to = 0;
  RateSymbol rate_symbol = RateSymbol::kAppArrival;
  ResetMap reset_app;  // acts on (x0, x1)
  ResetMap reset_loc;  // acts on (x0_hat, x1_hat)

  const ResetMap& reset_for(AgeProcess p) const {
    return p == AgeProcess::kApp ? reset_app : reset_loc;
  }
  bool is_self_loop() const { return from == to; }
};

struct ShsModel {
  std::string name;
  std::size_t num_states = 0;
  std::vector<Transition> transitions;

  // Returns nullptr when no transition carries this id.
  const Transition* find(int id) const;
};

struct StationaryDistribution {
  std::vector<double> pi;
  double residual = 0.0;  // max |global-balance violation|
};

struct AgeBalanceSolution {
  AgeProcess process = AgeProcess::kApp;
  std::vector<AgeVector> v_bar;  // one (v_q0, v_q1) per state
  double average_age = 0.0;
};

inline constexpr double kBalanceTolerance = 1e-10;
inline constexpr double kNegativityThreshold = -1e-9;

// Strong connectivity of the non-self-loop transition graph.
bool is_strongly_connected(const ShsModel& model);

// Dense solve of the global-balance equations with the normalization row.
// Throws NonErgodic or SingularSystem.
StationaryDistribution stationary_distribution(const ShsModel& model,
                                               const RateParams& params);

// Throws SingularSystem or NegativeFixedPoint.
AgeBalanceSolution solve_age_balance(const ShsModel& model, const RateParams& params,
                                     const StationaryDistribution& pi, AgeProcess process);

double average_age(const AgeBalanceSolution& solution);

// Max |lhs - rhs| over every age-balance equation for a candidate v_bar.
double age_balance_residual(const ShsModel& model, const RateParams& params,
                            const StationaryDistribution& pi, AgeProcess process,
                            const std::vector<AgeVector>& v_bar);

// Max |outflow - inflow| over states for a candidate pi.
double global_balance_residual(const ShsModel& model, const RateParams& params,
                               const std::vector<double>& pi);

// Invariant violations; empty means the model is well formed.
std::vector<std::string> validate_model(const ShsModel& model);

}  // namespace aoi::shs
