#pragma once

// The forwarder models: a FIB writer fed by location updates and a FIB reader
// fed by app updates, synchronized either lock-less (RCU) or with a
// write-preferring readers-writer lock (RWL).
//
// Discrete states shared by both primitives:
//   0  idle
//   1  writing (RWL: write lock held)
//   2  writing while a read is outstanding
//        RCU: the reader is reading a stale address
//        RWL: the reader waits for the read lock
//   3  reading a fresh address (RWL: read lock held)
//   4  reading a stale address
//        RCU: the write has been published, the read holds the old copy
//        RWL: the writer waits for the read lock

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aoi/rates.hpp"
#include "aoi/shs.hpp"

namespace aoi::sync {

enum class Primitive { kRcu, kRwl };

struct PrimitiveKind {
  Primitive primitive = Primitive::kRcu;
  bool preemptive = true;

  friend bool operator==(const PrimitiveKind&, const PrimitiveKind&) = default;
};

inline constexpr PrimitiveKind kRcuPreemptive{Primitive::kRcu, true};
inline constexpr PrimitiveKind kRcuNonPreemptive{Primitive::kRcu, false};
inline constexpr PrimitiveKind kRwlPreemptive{Primitive::kRwl, true};
inline constexpr PrimitiveKind kRwlNonPreemptive{Primitive::kRwl, false};

std::string_view to_string(Primitive p);
// "rcu-p", "rcu-np", "rwl-p", "rwl-np".
std::string to_string(const PrimitiveKind& kind);
// Accepts "rcu"/"rwl" (preemptive) and the four names above.
PrimitiveKind parse_kind(std::string_view text);

// One row of a transition table: ids, endpoints, rate and the row-major bits
// of the app map A and the location map A_hat.
struct TableRow {
  int id;
  int from;
  int to;
  RateSymbol rate;
  std::array<int, 4> app;
  std::array<int, 4> loc;
};

std::span<const TableRow> transition_table(Primitive p);

// Rows whose lambda self-loops are dropped in the non-preemptive variants.
inline constexpr std::array<int, 3> kReaderPreemptionIds{10, 11, 12};

shs::ShsModel build_model(const PrimitiveKind& kind);

shs::StationaryDistribution rcu_stationary_closed_form(const RateParams& params);
shs::StationaryDistribution rwl_stationary_closed_form(const RateParams& params);
// Reader preemption only adds self-loops, so both variants share one closed form.
shs::StationaryDistribution stationary_closed_form(const PrimitiveKind& kind,
                                                   const RateParams& params);

struct DeliveryProbability {
  double value = 0.0;
  PrimitiveKind kind;
};

// Probability that an arriving app update reaches the mobile. Preemptive kinds only.
DeliveryProbability delivery_probability(const PrimitiveKind& kind, const RateParams& params);

struct Analysis {
  PrimitiveKind kind;
  RateParams params;
  shs::StationaryDistribution pi;
  double closed_form_gap = 0.0;  // max |pi_numeric - pi_closed|
  shs::AgeBalanceSolution location;
  shs::AgeBalanceSolution app;
  std::optional<double> delivery;  // empty for non-preemptive kinds

  double age_app() const { return app.average_age; }
  double age_location() const { return location.average_age; }
};

Analysis analyze(const PrimitiveKind& kind, const RateParams& params);

// Plain-text transition table, one transition per line:
//   id from to rate_symbol a00 a01 a10 a11 h00 h01 h10 h11
// preceded by "# model <name> states <n>" and a column header comment.
std::string export_table(const shs::ShsModel& model);
shs::ShsModel parse_table(std::string_view text);

}  // namespace aoi::sync
