#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <iomanip>
#include <sstream>

#include "aoi/errors.hpp"
#include "aoi/sweep.hpp"
#include "aoi/verify.hpp"

using namespace aoi;
using sweep::Grid;

namespace {

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::size_t count_fields(const std::string& line) { return static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1; }

}  // namespace

TEST_CASE("grid parsing") {
  const auto g = Grid::parse("0.005:0.1:20");
  CHECK(g.start == 0.005);
  CHECK(g.stop == 0.1);
  CHECK(g.points == 20);
  const auto v = g.values();
  REQUIRE(v.size() == 20);
  CHECK(v.front() == 0.005);
  CHECK(v.back() == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(v[1] - v[0] == doctest::Approx(0.005).epsilon(1e-12));

  const auto lg = Grid::parse("0.01:100:5", sweep::Spacing::kLog).values();
  CHECK(lg[2] == doctest::Approx(1.0).epsilon(1e-12));

  for (const char* bad : {"0.1:0.2", "a:b:3", "0.1:0.2:x", "0.1:0.2:3:4", ""}) {
    CAPTURE(bad);
    CHECK_THROWS_AS(Grid::parse(bad), std::invalid_argument);
  }
}

TEST_CASE("sweep spec validation") {
  sweep::SweepSpec spec;
  CHECK_NOTHROW(spec.validate());
  auto bad = spec;
  bad.grid.start = 0.0;  // rho_hat = 0 is not ergodic
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = spec;
  bad.kinds.clear();
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = spec;
  bad.beta = -1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = spec;
  bad.grid.points = 1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("non-ergodic rows carry an error marker") {
  sweep::SweepSpec spec;
  spec.variable = sweep::Variable::kBeta;
  spec.grid = Grid::parse("0:1:3");
  const auto rows = sweep::run_sweep(spec);
  REQUIRE(rows.size() == 6);
  CHECK_FALSE(rows[0].error.empty());
  CHECK_FALSE(rows[0].age_app);
  CHECK(rows[2].error.empty());
  const auto csv = lines_of(sweep::to_csv(rows));
  CHECK(csv[1].back() != ',');
  CHECK(csv[3].back() == ',');
}

TEST_CASE("default sweep: RCU beats RWL at every point") {
  sweep::SweepSpec spec;
  const auto rows = sweep::run_sweep(spec);
  REQUIRE(rows.size() == 40);
  for (std::size_t i = 0; i < rows.size(); i += 2) {
    CHECK(rows[i].kind == sync::kRcuPreemptive);
    CHECK(rows[i + 1].kind == sync::kRwlPreemptive);
    CHECK(rows[i].rho_hat == rows[i + 1].rho_hat);
    CHECK(*rows[i].age_app < *rows[i + 1].age_app);
    CHECK(rows[i].sigma == 10.0);
    CHECK(rows[i + 1].sigma == 1.0);
  }
}

TEST_CASE("analytic sweeps are fast") {
  sweep::SweepSpec spec;
  spec.grid.points = 100;
  const auto t0 = std::chrono::steady_clock::now();
  const auto rows = sweep::run_sweep(spec);
  const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
  CHECK(rows.size() == 200);
  CHECK(dt.count() < 1.0);
}

TEST_CASE("simulated sweep rows are reproducible and independent of threads") {
  sweep::SweepSpec spec;
  spec.mode = sweep::Mode::kBoth;
  spec.grid = Grid::parse("0.05:0.1:2");
  spec.horizon = 5e4;
  spec.threads = 1;
  const auto one = sweep::run_sweep(spec);
  spec.threads = 3;
  const auto three = sweep::run_sweep(spec);
  REQUIRE(one.size() == 4);
  CHECK(sweep::to_csv(one) == sweep::to_csv(three));
  for (const auto& row : one) {
    REQUIRE(row.sim);
    CHECK(std::abs(row.sim->avg_age_app - *row.age_app) < 4.0 * row.sim->se_app);
  }
  // Row i uses seed + i, so distinct rows see distinct streams.
  CHECK(one[0].sim->event_counts.events != one[2].sim->event_counts.events);
}

TEST_CASE("CSV schema") {
  const std::string header =
      "kind,preemptive,rho_hat,beta,sigma,age_app,age_location,p_delivery,sim_age_app,sim_age_app_ci,"
      "sim_age_location,sim_age_location_ci,sim_delivery,sim_delivery_ci,error";
  CHECK(sweep::csv_header() == header);
  sweep::SweepSpec spec;
  spec.kinds = {sync::kRcuNonPreemptive};
  spec.grid = Grid::parse("0.01:0.02:2");
  const auto lines = lines_of(sweep::to_csv(sweep::run_sweep(spec)));
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == header);
  CHECK(count_fields(lines[1]) == count_fields(header));
  CHECK(lines[1].rfind("rcu,0,0.01,10,10,", 0) == 0);
  // Twelve significant digits; non-preemptive kinds leave p_delivery empty.
  const auto analysis = sync::analyze(sync::kRcuNonPreemptive, RateParams::from_normalized(0.01, 10, 10));
  std::ostringstream age;
  age << std::setprecision(12) << analysis.age_app();
  CHECK(lines[1].find("," + age.str() + ",") != std::string::npos);
  CHECK(lines[1].find(",,") != std::string::npos);
}

TEST_CASE("figure presets") {
  for (auto id : sweep::kFigureIds) {
    CAPTURE(id);
    const auto text = sweep::figure_data(id);
    const auto lines = lines_of(text);
    REQUIRE(lines.size() > 2);
    CHECK(lines[0] == "# figure " + std::string(id));
    std::size_t data = 0;
    for (const auto& l : lines) {
      if (l.starts_with("#") || l == sweep::csv_header()) continue;
      CHECK(l.find("non-ergodic") == std::string::npos);
      ++data;
    }
    CHECK(data == sweep::figure_rows(id).size());
    for (const auto& spec : sweep::figure_specs(id)) {
      CHECK(spec.sigma_rcu == 10.0);
      CHECK(spec.grid.start == 0.005);
      CHECK(spec.grid.stop == 0.1);
      const bool fast_rwl = id == "3b" || id == "4b";
      CHECK(spec.sigma_rwl == (fast_rwl ? 10.0 : 1.0));
    }
  }
  CHECK(sweep::figure_data("6").find("# note:") != std::string::npos);
  CHECK_THROWS_AS(sweep::figure_data("7"), UnknownFigure);
}

TEST_CASE("figure 3b crossover") {
  const auto rows = sweep::figure_rows("3b");
  std::optional<double> rcu, rwl;
  for (const auto& r : rows) {
    if (r.beta != 10.0 || std::abs(r.rho_hat - 0.1) > 1e-12) continue;
    (r.kind.primitive == sync::Primitive::kRcu ? rcu : rwl) = *r.age_app;
  }
  REQUIRE(rcu);
  REQUIRE(rwl);
  CHECK(*rwl < *rcu);
}

TEST_CASE("preemption gains pair matching rows") {
  const auto gains = sweep::preemption_gains(sweep::figure_rows("5a"));
  REQUIRE(gains.size() == 2);
  for (const auto& g : gains) {
    CHECK(g.primitive == sync::Primitive::kRcu);
    CHECK(g.max_gain > 0.0);
    CHECK(g.max_gain < 1.0);
    CHECK(g.rho_hat_at_max >= 0.005);
  }
  CHECK(sweep::preemption_gains(sweep::figure_rows("3a")).empty());
}

TEST_CASE("verify suite passes and catches a faulty table") {
  verify::Options opts;
  opts.grid = 30;
  opts.horizon = 5e4;
  opts.structural_events = 30000;
  const auto report = verify::run(opts);
  for (const auto& c : report.checks) {
    CAPTURE(c.name);
    CAPTURE(c.detail.dump());
    CHECK(c.passed);
  }
  CHECK(report.passed());
  CHECK(report.to_json()["passed"] == true);

  opts.model_source = [](const sync::PrimitiveKind& kind) {
    auto m = sync::build_model(kind);
    for (auto& t : m.transitions) {
      if (t.id == 6) t.to = 2;
    }
    return m;
  };
  const auto faulty = verify::run(opts);
  CHECK_FALSE(faulty.passed());
}

TEST_CASE("verify is robust to the seed") {
  for (std::uint64_t seed : {2u, 3u}) {
    verify::Options opts;
    opts.grid = 20;
    opts.seed = seed;
    opts.horizon = 5e4;
    opts.structural_events = 20000;
    CAPTURE(seed);
    CHECK(verify::run(opts).passed());
  }
}
