#pragma once

// Discrete-event simulation of the forwarder: Poisson location updates feed a
// preemptive FIB writer, Poisson app updates feed a FIB reader, and a read
// delivers its app update only if the address it used is the mobile's current
// one. The simulator is an independent check on the SHS analysis: it never
// looks at the transition tables, and the induced discrete state can be
// classified after every event and compared against them.

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "aoi/rates.hpp"
#include "aoi/shs.hpp"
#include "aoi/sync_models.hpp"
#include "json.hpp"

namespace aoi::sim {

inline constexpr std::size_t kNumStates = 5;

struct SimConfig {
  sync::PrimitiveKind kind = sync::kRcuPreemptive;
  RateParams params;
  double horizon = 1e6;
  double warmup_fraction = 0.1;
  std::uint64_t seed = 1;
  int batches = 20;
  // Stop after this many events even if the horizon is not reached; 0 disables.
  std::uint64_t max_events = 0;

  // Throws InvalidConfig.
  void validate() const;
};

struct EventCounts {
  std::uint64_t events = 0;
  std::uint64_t location_arrivals = 0;
  std::uint64_t app_arrivals = 0;
  std::uint64_t writes_completed = 0;
  std::uint64_t write_preemptions = 0;  // in-progress or pending write replaced
  std::uint64_t reads_completed = 0;
  std::uint64_t read_preemptions = 0;   // in-flight or pending app payload replaced
  std::uint64_t app_discarded = 0;      // non-preemptive arrivals dropped
  std::uint64_t deliveries = 0;
  std::uint64_t misaddressed = 0;
};

struct SimResult {
  double avg_age_app = 0.0;       // time average of x1
  double avg_age_location = 0.0;  // time average of x1_hat
  double delivery_fraction = 0.0;
  std::array<double, kNumStates> occupancy{};

  // 95% batch-means confidence half-widths (Student t, batches - 1 dof).
  double ci_app = 0.0;
  double ci_location = 0.0;
  double ci_delivery = 0.0;
  // Batch-means standard errors s / sqrt(batches).
  double se_app = 0.0;
  double se_location = 0.0;
  double se_delivery = 0.0;
  std::array<double, kNumStates> se_occupancy{};

  double observed_time = 0.0;  // length of the statistics window actually simulated
  EventCounts event_counts;
};

// Ages seen immediately before or after an event. x0/x0_hat exist only while
// the reader/writer holds a payload.
struct AgeSnapshot {
  std::optional<double> x0;
  double x1 = 0.0;
  std::optional<double> x0_hat;
  double x1_hat = 0.0;
};

struct ObservedEvent {
  double time = 0.0;
  RateSymbol event = RateSymbol::kAppArrival;
  int pre_state = 0;
  int post_state = 0;
  // False for arrivals a non-preemptive reader drops; those change nothing.
  bool effective = true;
  AgeSnapshot before;
  AgeSnapshot after;
};

using EventObserver = std::function<void(const ObservedEvent&)>;

// Throws InvalidConfig. Results are a pure function of the config.
SimResult run_sim(const SimConfig& config, const EventObserver& observer = {});

struct OccupancyReport {
  std::array<double, kNumStates> reference{};
  std::array<double, kNumStates> occupancy{};
  std::array<double, kNumStates> deviation{};  // |occupancy - reference|
  std::array<double, kNumStates> se{};
  double max_deviation = 0.0;
  bool within_3sigma = true;
};

// Simulated time-in-state fractions against the closed-form stationary distribution.
OccupancyReport occupancy_check(const SimConfig& config);

struct StructuralReport {
  using Triple = std::tuple<int, RateSymbol, int>;  // (pre-state, event, post-state)

  std::uint64_t events_checked = 0;
  std::uint64_t events_skipped = 0;  // non-effective events
  std::uint64_t violation_count = 0;
  std::vector<std::string> violations;  // first few, for diagnostics
  std::map<Triple, std::uint64_t> observed;
  std::map<int, std::uint64_t> transition_hits;  // by table id

  bool ok() const { return violation_count == 0; }
};

// Runs the simulator and checks every effective event against `model`: the
// (pre-state, event, post-state) triple must be a listed transition and the
// observed age changes must match its reset maps.
StructuralReport check_transitions(const shs::ShsModel& model, const SimConfig& config);

nlohmann::json to_json(const SimResult& result);
nlohmann::json to_json(const SimConfig& config);

}  // namespace aoi::sim
