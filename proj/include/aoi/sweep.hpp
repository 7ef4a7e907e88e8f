#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aoi/forwarder_sim.hpp"
#include "aoi/sync_models.hpp"

namespace aoi::sweep {

enum class Variable { kRhoHat, kBeta, kSigma };
enum class Spacing { kLinear, kLog };
enum class Mode { kAnalytic, kSimulate, kBoth };

std::string_view to_string(Variable v);
Variable parse_variable(std::string_view text);
Mode parse_mode(std::string_view text);

struct Grid {
  double start = 0.005;
  double stop = 0.1;
  int points = 20;
  Spacing spacing = Spacing::kLinear;

  // Parses "start:stop:points".
  static Grid parse(std::string_view text, Spacing spacing = Spacing::kLinear);
  std::vector<double> values() const;
};

struct SweepSpec {
  std::vector<sync::PrimitiveKind> kinds{sync::kRcuPreemptive, sync::kRwlPreemptive};
  Variable variable = Variable::kRhoHat;
  Grid grid;
  // Fixed values for whichever normalized rates are not swept.
  double rho_hat = 0.05;
  double beta = 10.0;
  double sigma_rcu = 10.0;
  double sigma_rwl = 1.0;
  double mu_hat = 1.0;

  Mode mode = Mode::kAnalytic;
  double horizon = 1e6;
  double warmup_fraction = 0.1;
  std::uint64_t seed = 1;
  int batches = 20;
  unsigned threads = 0;  // 0: hardware concurrency

  // Throws std::invalid_argument.
  void validate() const;
};

struct SweepRow {
  sync::PrimitiveKind kind;
  double rho_hat = 0.0;
  double beta = 0.0;
  double sigma = 0.0;
  std::optional<double> age_app;
  std::optional<double> age_location;
  std::optional<double> delivery;
  std::optional<sim::SimResult> sim;
  std::string error;  // non-empty when this row failed (e.g. non-ergodic point)
};

// One row per (grid point, kind), grid-major. Rows are independent and may be
// computed in parallel; row i simulates with seed + i.
std::vector<SweepRow> run_sweep(const SweepSpec& spec);

// Fixed header, one line per row, 12 significant digits, empty cells for absent values.
std::string csv_header();
std::string to_csv(const std::vector<SweepRow>& rows);

inline constexpr std::array<std::string_view, 7> kFigureIds{"3a", "3b", "4a", "4b", "5a", "5b", "6"};

// Preset sweeps behind each figure (one spec per beta value).
std::vector<SweepSpec> figure_specs(std::string_view figure);
std::vector<SweepRow> figure_rows(std::string_view figure);
// CSV text with leading "# " metadata lines. Throws UnknownFigure.
std::string figure_data(std::string_view figure);

struct PreemptionGain {
  sync::Primitive primitive;
  double beta = 0.0;
  double sigma = 0.0;
  double max_gain = 0.0;  // max over the grid of 1 - age_p / age_np
  double rho_hat_at_max = 0.0;
};

// Pairs preemptive/non-preemptive rows of the same primitive and point.
std::vector<PreemptionGain> preemption_gains(const std::vector<SweepRow>& rows);

}  // namespace aoi::sweep
