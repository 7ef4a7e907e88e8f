#include "aoi/forwarder_sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "aoi/batch_means.hpp"
#include "aoi/errors.hpp"

namespace aoi::sim {

namespace {

using sync::Primitive;

// Pending events ordered by (time, insertion sequence).
class EventCalendar {
 public:
  struct Entry {
    double time;
    std::uint64_t seq;
    RateSymbol type;

    bool operator<(const Entry& other) const {
      return time < other.time || (time == other.time && seq < other.seq);
    }
  };

  Entry schedule(double time, RateSymbol type) {
    Entry e{time, next_seq_++, type};
    pending_.insert(e);
    return e;
  }
  void cancel(const Entry& e) { pending_.erase(e); }
  bool empty() const { return pending_.empty(); }
  Entry pop() {
    auto it = pending_.begin();
    Entry e = *it;
    pending_.erase(it);
    return e;
  }

 private:
  std::set<Entry> pending_;
  std::uint64_t next_seq_ = 0;
};

// Time integrals and point counts over the statistics window, split into batches.
class WindowStats {
 public:
  WindowStats(double start, double end, int batches)
      : start_(start),
        end_(end),
        width_((end - start) / batches),
        batches_(static_cast<std::size_t>(batches)),
        time_(batches_, 0.0),
        area_app_(batches_, 0.0),
        area_loc_(batches_, 0.0),
        occupancy_(batches_),
        arrivals_(batches_, 0),
        deliveries_(batches_, 0) {}

  // x1 and x1_hat are the ages at t0; both grow at unit rate until t1.
  void integrate(double t0, double t1, int state, double x1, double x1_hat) {
    double a = std::max(t0, start_);
    const double b = std::min(t1, end_);
    while (a < b) {
      std::size_t k = batch_index(a);
      double seg_end = k + 1 == batches_ ? b : std::min(b, boundary(k + 1));
      if (seg_end <= a) {  // a sits on a boundary that rounded into batch k
        ++k;
        seg_end = k + 1 == batches_ ? b : std::min(b, boundary(k + 1));
      }
      const double dt = seg_end - a;
      const double mid = 0.5 * ((a - t0) + (seg_end - t0));
      time_[k] += dt;
      area_app_[k] += dt * (x1 + mid);
      area_loc_[k] += dt * (x1_hat + mid);
      occupancy_[k][static_cast<std::size_t>(state)] += dt;
      a = seg_end;
    }
  }

  void count_arrival(double t) {
    if (in_window(t)) ++arrivals_[batch_index(t)];
  }
  void count_delivery(double t) {
    if (in_window(t)) ++deliveries_[batch_index(t)];
  }

  void finish(SimResult& r) const {
    std::vector<double> app, loc, del;
    std::array<std::vector<double>, kNumStates> occ;
    double total_time = 0.0, total_app = 0.0, total_loc = 0.0;
    std::array<double, kNumStates> total_occ{};
    std::uint64_t total_arrivals = 0, total_deliveries = 0;
    for (std::size_t k = 0; k < batches_; ++k) {
      total_arrivals += arrivals_[k];
      total_deliveries += deliveries_[k];
      if (arrivals_[k] > 0) {
        del.push_back(static_cast<double>(deliveries_[k]) / static_cast<double>(arrivals_[k]));
      }
      if (time_[k] <= 0.0) continue;
      total_time += time_[k];
      total_app += area_app_[k];
      total_loc += area_loc_[k];
      app.push_back(area_app_[k] / time_[k]);
      loc.push_back(area_loc_[k] / time_[k]);
      for (std::size_t q = 0; q < kNumStates; ++q) {
        total_occ[q] += occupancy_[k][q];
        occ[q].push_back(occupancy_[k][q] / time_[k]);
      }
    }
    r.observed_time = total_time;
    if (total_time > 0.0) {
      r.avg_age_app = total_app / total_time;
      r.avg_age_location = total_loc / total_time;
      for (std::size_t q = 0; q < kNumStates; ++q) r.occupancy[q] = total_occ[q] / total_time;
    }
    r.delivery_fraction = total_arrivals > 0 ? static_cast<double>(total_deliveries) /
                                                   static_cast<double>(total_arrivals)
                                             : 0.0;
    const auto s_app = summarize_batches(app);
    const auto s_loc = summarize_batches(loc);
    const auto s_del = summarize_batches(del);
    r.se_app = s_app.standard_error;
    r.ci_app = s_app.half_width;
    r.se_location = s_loc.standard_error;
    r.ci_location = s_loc.half_width;
    r.se_delivery = s_del.standard_error;
    r.ci_delivery = s_del.half_width;
    for (std::size_t q = 0; q < kNumStates; ++q) {
      r.se_occupancy[q] = summarize_batches(occ[q]).standard_error;
    }
  }

 private:
  bool in_window(double t) const { return t >= start_ && t <= end_; }
  double boundary(std::size_t k) const { return start_ + width_ * static_cast<double>(k); }
  std::size_t batch_index(double t) const {
    const double k = std::floor((t - start_) / width_);
    if (k <= 0.0) return 0;
    return std::min(batches_ - 1, static_cast<std::size_t>(k));
  }

  double start_, end_, width_;
  std::size_t batches_;
  std::vector<double> time_, area_app_, area_loc_;
  std::vector<std::array<double, kNumStates>> occupancy_;
  std::vector<std::uint64_t> arrivals_, deliveries_;
};

struct Payload {
  std::uint64_t version = 0;  // mobile address the update carries (location updates only)
  double timestamp = 0.0;     // generation time
};

enum class Activity { kIdle, kActive, kPending };

class Forwarder {
 public:
  explicit Forwarder(const SimConfig& config)
      : primitive_(config.kind.primitive),
        preemptive_(config.kind.preemptive),
        params_(config.params),
        rng_(config.seed) {}

  SimResult run(const SimConfig& config, const EventObserver& observer) {
    const double warmup = config.warmup_fraction * config.horizon;
    WindowStats stats(warmup, config.horizon, config.batches);
    SimResult result;

    calendar_.schedule(draw(params_.lambda_hat), RateSymbol::kLocationArrival);
    calendar_.schedule(draw(params_.lambda), RateSymbol::kAppArrival);

    double last = 0.0;
    while (!calendar_.empty()) {
      const auto event = calendar_.pop();
      if (event.time > config.horizon) {
        stats.integrate(last, config.horizon, classify(), last - delivered_ts_, last - fib_ts_);
        break;
      }
      stats.integrate(last, event.time, classify(), last - delivered_ts_, last - fib_ts_);
      last = now_ = event.time;

      ObservedEvent seen;
      if (observer) {
        seen.time = now_;
        seen.event = event.type;
        seen.pre_state = classify();
        seen.before = snapshot();
      }
      bool effective = true;
      switch (event.type) {
        case RateSymbol::kLocationArrival: on_location_arrival(); break;
        case RateSymbol::kAppArrival: effective = on_app_arrival(stats); break;
        case RateSymbol::kWrite: on_write_done(); break;
        case RateSymbol::kRead: on_read_done(stats); break;
      }
      const int post = classify();
      if (observer) {
        seen.post_state = post;
        seen.effective = effective;
        seen.after = snapshot();
        observer(seen);
      }
      if (++counts_.events == config.max_events) break;
    }

    stats.finish(result);
    result.event_counts = counts_;
    return result;
  }

 private:
  double draw(double rate) { return now_ + std::exponential_distribution<double>(rate)(rng_); }

  void start_write(Payload p) {
    writer_ = Activity::kActive;
    write_payload_ = p;
    write_done_ = calendar_.schedule(draw(params_.mu_hat), RateSymbol::kWrite);
  }

  void start_read(double app_timestamp) {
    reader_ = Activity::kActive;
    read_timestamp_ = app_timestamp;
    snapshot_ = fib_address_;
    calendar_.schedule(draw(params_.mu), RateSymbol::kRead);
  }

  void on_location_arrival() {
    ++counts_.location_arrivals;
    calendar_.schedule(draw(params_.lambda_hat), RateSymbol::kLocationArrival);
    const Payload fresh{++mobile_address_, now_};
    switch (writer_) {
      case Activity::kActive:
        // Preempt in service; the restarted write gets a new service draw.
        ++counts_.write_preemptions;
        calendar_.cancel(write_done_);
        start_write(fresh);
        break;
      case Activity::kPending:
        ++counts_.write_preemptions;
        write_payload_ = fresh;
        break;
      case Activity::kIdle:
        if (primitive_ == Primitive::kRwl && reader_ == Activity::kActive) {
          writer_ = Activity::kPending;  // write-preferring: blocks new readers from now on
          write_payload_ = fresh;
        } else {
          start_write(fresh);
        }
        break;
    }
  }

  void on_write_done() {
    ++counts_.writes_completed;
    if (write_payload_.timestamp < fib_ts_) throw std::logic_error("FIB timestamp moved backwards");
    fib_address_ = write_payload_.version;
    fib_ts_ = write_payload_.timestamp;
    writer_ = Activity::kIdle;
    if (primitive_ == Primitive::kRwl && reader_ == Activity::kPending) start_read(read_timestamp_);
  }

  // Returns false when the arrival is dropped.
  bool on_app_arrival(WindowStats& stats) {
    ++counts_.app_arrivals;
    stats.count_arrival(now_);
    calendar_.schedule(draw(params_.lambda), RateSymbol::kAppArrival);
    if (reader_ != Activity::kIdle) {
      // An in-flight read (or a queued read request) serves only the freshest payload;
      // the read operation itself is not restarted.
      if (!preemptive_) {
        ++counts_.app_discarded;
        return false;
      }
      ++counts_.read_preemptions;
      read_timestamp_ = now_;
      return true;
    }
    if (primitive_ == Primitive::kRwl && writer_ != Activity::kIdle) {
      reader_ = Activity::kPending;
      read_timestamp_ = now_;
      return true;
    }
    start_read(now_);
    return true;
  }

  void on_read_done(WindowStats& stats) {
    ++counts_.reads_completed;
    const std::uint64_t used = primitive_ == Primitive::kRcu ? snapshot_ : fib_address_;
    if (used == mobile_address_) {
      if (read_timestamp_ < delivered_ts_) throw std::logic_error("delivered timestamp moved backwards");
      delivered_ts_ = read_timestamp_;
      ++counts_.deliveries;
      stats.count_delivery(now_);
    } else {
      ++counts_.misaddressed;
    }
    reader_ = Activity::kIdle;
    if (primitive_ == Primitive::kRwl && writer_ == Activity::kPending) start_write(write_payload_);
  }

  int classify() const {
    if (fib_address_ > mobile_address_) throw std::logic_error("FIB ahead of the mobile");
    const bool fresh = (primitive_ == Primitive::kRcu ? snapshot_ : fib_address_) == mobile_address_;
    if (primitive_ == Primitive::kRcu) {
      if (writer_ == Activity::kPending || reader_ == Activity::kPending) {
        throw std::logic_error("RCU never queues readers or writers");
      }
      const bool writing = writer_ == Activity::kActive;
      if (reader_ == Activity::kIdle) return writing ? 1 : 0;
      if (writing) {
        if (fresh) throw std::logic_error("RCU read fresh while a write is in progress");
        return 2;
      }
      return fresh ? 3 : 4;
    }
    if (writer_ == Activity::kActive && reader_ == Activity::kActive) {
      throw std::logic_error("RWL reader and writer active together");
    }
    if (writer_ == Activity::kIdle && reader_ == Activity::kIdle) return 0;
    if (writer_ == Activity::kActive) return reader_ == Activity::kPending ? 2 : 1;
    if (reader_ == Activity::kActive) {
      if (writer_ == Activity::kIdle && fresh) return 3;
      if (writer_ == Activity::kPending && !fresh) return 4;
    }
    throw std::logic_error("RWL reached a state outside the chain");
  }

  AgeSnapshot snapshot() const {
    AgeSnapshot s;
    s.x1 = now_ - delivered_ts_;
    s.x1_hat = now_ - fib_ts_;
    if (reader_ != Activity::kIdle) s.x0 = now_ - read_timestamp_;
    if (writer_ != Activity::kIdle) s.x0_hat = now_ - write_payload_.timestamp;
    return s;
  }

  Primitive primitive_;
  bool preemptive_;
  RateParams params_;
  std::mt19937_64 rng_;
  EventCalendar calendar_;
  EventCalendar::Entry write_done_{};
  double now_ = 0.0;

  std::uint64_t mobile_address_ = 0;
  std::uint64_t fib_address_ = 0;
  double fib_ts_ = 0.0;
  double delivered_ts_ = 0.0;

  Activity writer_ = Activity::kIdle;
  Payload write_payload_;
  Activity reader_ = Activity::kIdle;
  double read_timestamp_ = 0.0;
  std::uint64_t snapshot_ = 0;  // RCU: FIB version captured at read start

  EventCounts counts_;
};

bool close(double a, double b) { return std::abs(a - b) <= 1e-9 * (1.0 + std::abs(b)); }

// Applies x' = x * A to the components that are defined and compares with what
// the simulator produced. Returns an empty string when consistent.
std::string reset_mismatch(const shs::ResetMap& map, std::optional<double> x0_before, double x1_before,
                           std::optional<double> x0_after, double x1_after, const char* label) {
  std::ostringstream why;
  auto expected = [&](int j) -> std::optional<double> {
    double v = 0.0;
    if (map.a[0][static_cast<std::size_t>(j)] != 0) {
      if (!x0_before) return std::nullopt;
      v += *x0_before * map.a[0][static_cast<std::size_t>(j)];
    }
    v += x1_before * map.a[1][static_cast<std::size_t>(j)];
    return v;
  };
  const auto e1 = expected(1);
  if (!e1) {
    why << label << "1 reset needs " << label << "0 but no payload is held";
  } else if (!close(x1_after, *e1)) {
    why << label << "1 became " << x1_after << ", reset map gives " << *e1;
  } else if (x0_after) {
    const auto e0 = expected(0);
    if (e0 && !close(*x0_after, *e0)) why << label << "0 became " << *x0_after << ", reset map gives " << *e0;
  }
  return why.str();
}

}  // namespace

void SimConfig::validate() const {
  if (!params.all_positive()) throw InvalidConfig("all four rates must be finite and > 0");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw InvalidConfig("horizon must be > 0");
  if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0)) {
    throw InvalidConfig("warmup_fraction must lie in [0, 1)");
  }
  if (batches < 2) throw InvalidConfig("batches must be >= 2");
}

SimResult run_sim(const SimConfig& config, const EventObserver& observer) {
  config.validate();
  Forwarder forwarder(config);
  return forwarder.run(config, observer);
}

OccupancyReport occupancy_check(const SimConfig& config) {
  config.validate();
  const auto sim = run_sim(config);
  const auto pi = sync::stationary_closed_form(config.kind, config.params).pi;
  OccupancyReport r;
  for (std::size_t q = 0; q < kNumStates; ++q) {
    r.reference[q] = pi[q];
    r.occupancy[q] = sim.occupancy[q];
    r.deviation[q] = std::abs(sim.occupancy[q] - pi[q]);
    r.se[q] = sim.se_occupancy[q];
    r.max_deviation = std::max(r.max_deviation, r.deviation[q]);
    if (r.deviation[q] > 3.0 * r.se[q]) r.within_3sigma = false;
  }
  return r;
}

StructuralReport check_transitions(const shs::ShsModel& model, const SimConfig& config) {
  StructuralReport report;
  auto fail = [&report](const ObservedEvent& e, const std::string& what) {
    ++report.violation_count;
    if (report.violations.size() < 20) {
      std::ostringstream msg;
      msg << "t=" << e.time << " (" << e.pre_state << ", " << to_string(e.event) << ", "
          << e.post_state << "): " << what;
      report.violations.push_back(msg.str());
    }
  };

  run_sim(config, [&](const ObservedEvent& e) {
    if (!e.effective) {
      ++report.events_skipped;
      return;
    }
    ++report.events_checked;
    ++report.observed[{e.pre_state, e.event, e.post_state}];
    const shs::Transition* matched = nullptr;
    std::string last_mismatch;
    for (const auto& t : model.transitions) {
      if (static_cast<int>(t.from) != e.pre_state || static_cast<int>(t.to) != e.post_state ||
          t.rate_symbol != e.event) {
        continue;
      }
      auto why = reset_mismatch(t.reset_app, e.before.x0, e.before.x1, e.after.x0, e.after.x1, "x");
      if (why.empty()) {
        why = reset_mismatch(t.reset_loc, e.before.x0_hat, e.before.x1_hat, e.after.x0_hat,
                             e.after.x1_hat, "x_hat");
      }
      if (why.empty()) {
        matched = &t;
        break;
      }
      last_mismatch = "transition " + std::to_string(t.id) + ": " + why;
    }
    if (matched) {
      ++report.transition_hits[matched->id];
    } else if (last_mismatch.empty()) {
      fail(e, "not listed in " + model.name);
    } else {
      fail(e, last_mismatch);
    }
  });
  return report;
}

nlohmann::json to_json(const SimConfig& config) {
  return {{"kind", sync::to_string(config.kind)},
          {"lambda_hat", config.params.lambda_hat},
          {"lambda", config.params.lambda},
          {"mu_hat", config.params.mu_hat},
          {"mu", config.params.mu},
          {"horizon", config.horizon},
          {"warmup_fraction", config.warmup_fraction},
          {"seed", config.seed},
          {"batches", config.batches},
          {"max_events", config.max_events}};
}

nlohmann::json to_json(const SimResult& r) {
  const auto& c = r.event_counts;
  return {{"avg_age_app", r.avg_age_app},
          {"avg_age_location", r.avg_age_location},
          {"delivery_fraction", r.delivery_fraction},
          {"occupancy", r.occupancy},
          {"ci_app", r.ci_app},
          {"ci_location", r.ci_location},
          {"ci_delivery", r.ci_delivery},
          {"se_app", r.se_app},
          {"se_location", r.se_location},
          {"se_delivery", r.se_delivery},
          {"se_occupancy", r.se_occupancy},
          {"observed_time", r.observed_time},
          {"event_counts",
           {{"events", c.events},
            {"location_arrivals", c.location_arrivals},
            {"app_arrivals", c.app_arrivals},
            {"writes_completed", c.writes_completed},
            {"write_preemptions", c.write_preemptions},
            {"reads_completed", c.reads_completed},
            {"read_preemptions", c.read_preemptions},
            {"app_discarded", c.app_discarded},
            {"deliveries", c.deliveries},
            {"misaddressed", c.misaddressed}}}};
}

}  // namespace aoi::sim
