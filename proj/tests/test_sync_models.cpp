#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "aoi/errors.hpp"
#include "aoi/forwarder_sim.hpp"
#include "aoi/sync_models.hpp"
#include "aoi/verify.hpp"

using namespace aoi;
using shs::ResetMap;

namespace {

const ResetMap kI = ResetMap::identity();
const ResetMap kFresh = ResetMap::fresh_arrival();
const ResetMap kDeliver = ResetMap::deliver();

struct ExpectedRow {
  int id;
  std::size_t from, to;
  RateSymbol rate;
  ResetMap app, loc;
};

void check_rows(const shs::ShsModel& model, const std::vector<ExpectedRow>& rows) {
  REQUIRE(model.transitions.size() == rows.size());
  for (const auto& row : rows) {
    CAPTURE(row.id);
    const auto* t = model.find(row.id);
    REQUIRE(t != nullptr);
    CHECK(t->from == row.from);
    CHECK(t->to == row.to);
    CHECK(t->rate_symbol == row.rate);
    CHECK(t->reset_app == row.app);
    CHECK(t->reset_loc == row.loc);
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("RCU table rows") {
  using enum RateSymbol;
  check_rows(sync::build_model(sync::kRcuPreemptive),
             {
                 {1, 0, 1, kLocationArrival, kI, kFresh},
                 {2, 1, 1, kLocationArrival, kI, kFresh},
                 {3, 2, 2, kLocationArrival, kI, kFresh},
                 {4, 3, 2, kLocationArrival, kI, kFresh},
                 {5, 4, 2, kLocationArrival, kI, kFresh},
                 {6, 1, 0, kWrite, kI, kDeliver},
                 {7, 2, 4, kWrite, kI, kDeliver},
                 {8, 0, 3, kAppArrival, kFresh, kI},
                 {9, 1, 2, kAppArrival, kFresh, kI},
                 {10, 2, 2, kAppArrival, kFresh, kI},
                 {11, 3, 3, kAppArrival, kFresh, kI},
                 {12, 4, 4, kAppArrival, kFresh, kI},
                 {13, 3, 0, kRead, kDeliver, kI},
                 {14, 4, 0, kRead, kI, kI},
                 {15, 2, 1, kRead, kI, kI},
             });
}

TEST_CASE("RWL table rows") {
  using enum RateSymbol;
  check_rows(sync::build_model(sync::kRwlPreemptive),
             {
                 {1, 0, 1, kLocationArrival, kI, kFresh},
                 {2, 1, 1, kLocationArrival, kI, kFresh},
                 {3, 2, 2, kLocationArrival, kI, kFresh},
                 {4, 3, 4, kLocationArrival, kI, kFresh},
                 {5, 4, 4, kLocationArrival, kI, kFresh},
                 {6, 1, 0, kWrite, kI, kDeliver},
                 {7, 2, 3, kWrite, kI, kDeliver},
                 {8, 0, 3, kAppArrival, kFresh, kI},
                 {9, 1, 2, kAppArrival, kFresh, kI},
                 {10, 2, 2, kAppArrival, kFresh, kI},
                 {11, 3, 3, kAppArrival, kFresh, kI},
                 {12, 4, 4, kAppArrival, kFresh, kI},
                 {13, 3, 0, kRead, kDeliver, kI},
                 {14, 4, 1, kRead, kI, kI},
             });
}

TEST_CASE("variant transition counts and preemption filtering") {
  CHECK(sync::build_model(sync::kRcuPreemptive).transitions.size() == 15);
  CHECK(sync::build_model(sync::kRwlPreemptive).transitions.size() == 14);
  CHECK(sync::build_model(sync::kRcuNonPreemptive).transitions.size() == 12);
  const auto rwl_np = sync::build_model(sync::kRwlNonPreemptive);
  CHECK(rwl_np.transitions.size() == 11);
  CHECK(std::none_of(rwl_np.transitions.begin(), rwl_np.transitions.end(), [](const shs::Transition& t) {
    return t.is_self_loop() && t.rate_symbol == RateSymbol::kAppArrival;
  }));
  for (auto kind : {sync::kRcuPreemptive, sync::kRcuNonPreemptive, sync::kRwlPreemptive,
                    sync::kRwlNonPreemptive}) {
    for (const auto& t : sync::build_model(kind).transitions) {
      CAPTURE(t.id);
      CHECK((t.reset_app.is_identity() || t.reset_loc.is_identity()));
    }
  }
}

TEST_CASE("kind names") {
  CHECK(sync::to_string(sync::kRwlNonPreemptive) == "rwl-np");
  CHECK(sync::parse_kind("rcu") == sync::kRcuPreemptive);
  CHECK(sync::parse_kind("rwl-np") == sync::kRwlNonPreemptive);
  CHECK_THROWS_AS(sync::parse_kind("mutex"), std::invalid_argument);
}

TEST_CASE("RCU closed-form stationary distribution") {
  const auto unit = sync::rcu_stationary_closed_form(RateParams::from_normalized(1, 1, 1)).pi;
  const std::vector<double> expected{0.25, 0.25, 0.25, 0.125, 0.125};
  for (std::size_t q = 0; q < 5; ++q) CHECK(unit[q] == doctest::Approx(expected[q]).epsilon(1e-15));

  const auto pi = sync::rcu_stationary_closed_form(RateParams::from_normalized(0.1, 1, 10)).pi;
  const std::vector<double> weights{10, 1, 0.1, 10.0 / 10.1, 0.1 / 10.1};
  for (std::size_t q = 0; q < 5; ++q) CHECK(pi[q] == doctest::Approx(weights[q] / 12.1).epsilon(1e-13));
  CHECK(pi[0] == doctest::Approx(0.82645).epsilon(1e-5));
  CHECK(pi[4] == doctest::Approx(0.00082).epsilon(1e-2));

  CHECK_THROWS_AS(sync::rcu_stationary_closed_form(RateParams::from_normalized(1, 0, 1)), NonErgodic);
}

TEST_CASE("RWL closed-form stationary distribution") {
  const auto unit = sync::rwl_stationary_closed_form(RateParams::from_normalized(1, 1, 1)).pi;
  for (double v : unit) CHECK(v == doctest::Approx(0.2).epsilon(1e-15));

  // Without readers the chain reduces to the writer cycle 0 <-> 1.
  const auto no_readers = sync::rwl_stationary_closed_form(RateParams::from_normalized(1, 1e-6, 1)).pi;
  CHECK(no_readers[0] + no_readers[1] > 1.0 - 1e-5);
  CHECK(no_readers[0] / no_readers[1] == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("closed forms agree with the numeric CTMC solve") {
  for (const auto& p : verify::random_parameter_grid(100, 99)) {
    for (auto kind : {sync::kRcuPreemptive, sync::kRwlPreemptive, sync::kRcuNonPreemptive,
                      sync::kRwlNonPreemptive}) {
      const auto numeric = shs::stationary_distribution(sync::build_model(kind), p);
      const auto closed = sync::stationary_closed_form(kind, p);
      for (std::size_t q = 0; q < 5; ++q) CHECK(std::abs(numeric.pi[q] - closed.pi[q]) < 1e-10);
    }
  }
}

TEST_CASE("delivery probabilities") {
  const auto unit = RateParams::from_normalized(1, 1, 1);
  CHECK(sync::delivery_probability(sync::kRcuPreemptive, unit).value == doctest::Approx(0.125).epsilon(1e-14));
  CHECK(sync::delivery_probability(sync::kRwlPreemptive, unit).value == doctest::Approx(0.2).epsilon(1e-14));

  // No mobility: only reader preemption loses updates.
  const auto still = RateParams::from_normalized(1e-9, 1, 1);
  CHECK(sync::delivery_probability(sync::kRcuPreemptive, still).value == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(sync::delivery_probability(sync::kRwlPreemptive, still).value == doctest::Approx(0.5).epsilon(1e-6));

  CHECK_THROWS_AS(sync::delivery_probability(sync::kRcuNonPreemptive, unit), Unsupported);
}

TEST_CASE("delivery probability decreases in rho_hat") {
  for (auto kind : {sync::kRcuPreemptive, sync::kRwlPreemptive}) {
    for (double beta : {1.0, 10.0}) {
      for (double sigma : {1.0, 10.0}) {
        double prev = 2.0;
        for (int i = 1; i <= 10; ++i) {
          const double p = sync::delivery_probability(kind, RateParams::from_normalized(0.01 * i, beta, sigma)).value;
          CHECK(p >= 0.0);
          CHECK(p <= 1.0);
          CHECK(p < prev);
          prev = p;
        }
      }
    }
  }
}

TEST_CASE("RCU location age is the preemptive single-server age") {
  // The RCU writer never waits on readers, so x1_hat sees a plain M/M/1/1 preemptive server.
  for (double rho : {0.01, 0.05, 0.1, 0.7}) {
    for (double beta : {0.5, 10.0}) {
      const auto p = RateParams::from_normalized(rho, beta, 10.0);
      const auto a = sync::analyze(sync::kRcuPreemptive, p);
      CHECK(a.age_location() == doctest::Approx(1.0 / p.lambda_hat + 1.0 / p.mu_hat).epsilon(1e-10));
      // Lock waits can only make the RWL FIB staler.
      CHECK(sync::analyze(sync::kRwlPreemptive, p).age_location() > a.age_location());
    }
  }
}

TEST_CASE("analyze cross-checks and grid properties") {
  const auto a = sync::analyze(sync::kRwlPreemptive, RateParams::from_normalized(0.05, 10, 10));
  CHECK(a.closed_form_gap < 1e-10);
  REQUIRE(a.delivery.has_value());
  CHECK_FALSE(sync::analyze(sync::kRwlNonPreemptive, RateParams::from_normalized(0.05, 10, 10)).delivery);

  for (auto prim : {sync::Primitive::kRcu, sync::Primitive::kRwl}) {
    for (double beta : {1.0, 10.0}) {
      for (int i = 1; i <= 10; ++i) {
        const double rho = 0.01 * i;
        double prev_by_sigma = INFINITY;
        for (double sigma : {0.5, 1.0, 2.0, 5.0, 10.0, 20.0}) {
          const auto p = RateParams::from_normalized(rho, beta, sigma);
          const double pre = sync::analyze({prim, true}, p).age_app();
          const double non = sync::analyze({prim, false}, p).age_app();
          CHECK(pre <= non);
          CHECK(pre <= prev_by_sigma);
          prev_by_sigma = pre;
        }
      }
    }
  }
}

TEST_CASE("analyze agrees with simulation at moderate load") {
  const auto params = RateParams::from_normalized(0.05, 10, 10);
  std::uint64_t seed = 300;
  for (auto kind : {sync::kRcuPreemptive, sync::kRwlPreemptive}) {
    const auto a = sync::analyze(kind, params);
    sim::SimConfig cfg;
    cfg.kind = kind;
    cfg.params = params;
    cfg.horizon = 1e5;
    cfg.seed = seed++;
    const auto s = sim::run_sim(cfg);
    CAPTURE(sync::to_string(kind));
    CHECK(std::abs(s.avg_age_app - a.age_app()) < 3.0 * s.se_app);
  }
}

TEST_CASE("transition table export matches golden files and parses back") {
  for (auto kind : {sync::kRcuPreemptive, sync::kRcuNonPreemptive, sync::kRwlPreemptive,
                    sync::kRwlNonPreemptive}) {
    const auto model = sync::build_model(kind);
    const auto text = sync::export_table(model);
    const auto golden = read_file(std::string(AOI_GOLDEN_DIR) + "/" + sync::to_string(kind) + ".txt");
    CAPTURE(sync::to_string(kind));
    CHECK(text == golden);

    const auto parsed = sync::parse_table(text);
    CHECK(parsed.name == model.name);
    CHECK(parsed.num_states == model.num_states);
    REQUIRE(parsed.transitions.size() == model.transitions.size());
    for (std::size_t i = 0; i < parsed.transitions.size(); ++i) {
      const auto& x = parsed.transitions[i];
      const auto& y = model.transitions[i];
      CHECK((x.id == y.id && x.from == y.from && x.to == y.to && x.rate_symbol == y.rate_symbol &&
             x.reset_app == y.reset_app && x.reset_loc == y.reset_loc));
    }
  }
  CHECK_THROWS_AS(sync::parse_table("1 0 1 lambda_hat 1 0"), std::invalid_argument);
  CHECK_THROWS_AS(sync::parse_table("1 0 1 nu 1 0 0 1 0 0 0 1"), std::invalid_argument);
}
