#include "aoi/verify.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "aoi/errors.hpp"
#include "aoi/forwarder_sim.hpp"

namespace aoi::verify {

namespace {

constexpr std::array<sync::PrimitiveKind, 4> kAllKinds{sync::kRcuPreemptive, sync::kRcuNonPreemptive,
                                                        sync::kRwlPreemptive, sync::kRwlNonPreemptive};

Check closed_form_check(const std::vector<RateParams>& grid) {
  Check c{"closed_form_vs_numeric_pi", true, {}};
  for (auto kind : {sync::kRcuPreemptive, sync::kRwlPreemptive}) {
    double worst = 0.0;
    for (const auto& p : grid) {
      const auto numeric = shs::stationary_distribution(sync::build_model(kind), p);
      const auto closed = sync::stationary_closed_form(kind, p);
      for (std::size_t q = 0; q < numeric.pi.size(); ++q) {
        worst = std::max(worst, std::abs(numeric.pi[q] - closed.pi[q]));
      }
    }
    c.detail[sync::to_string(kind)] = worst;
    if (!(worst < 1e-10)) c.passed = false;
  }
  return c;
}

Check residual_check(const std::vector<RateParams>& grid) {
  Check c{"age_balance_residuals", true, {}};
  for (auto kind : kAllKinds) {
    const auto model = sync::build_model(kind);
    double worst_residual = 0.0;
    double min_entry = INFINITY;
    std::string error;
    for (const auto& p : grid) {
      try {
        const auto pi = shs::stationary_distribution(model, p);
        for (auto process : {shs::AgeProcess::kLocation, shs::AgeProcess::kApp}) {
          const auto sol = shs::solve_age_balance(model, p, pi, process);
          worst_residual = std::max(worst_residual, relative_age_residual(model, p, pi, sol));
          for (const auto& v : sol.v_bar) min_entry = std::min({min_entry, v[0], v[1]});
        }
      } catch (const Error& e) {
        error = e.what();
      }
    }
    c.detail[sync::to_string(kind)] = {{"max_relative_residual", worst_residual}, {"min_entry", min_entry}};
    if (!error.empty()) c.detail[sync::to_string(kind)]["error"] = error;
    if (!error.empty() || !(worst_residual < 1e-9) || min_entry < shs::kNegativityThreshold) c.passed = false;
  }
  return c;
}

Check structural_check(const Options& options) {
  Check c{"structural_transitions", true, {}};
  for (auto kind : kAllKinds) {
    sim::SimConfig cfg;
    cfg.kind = kind;
    cfg.params = RateParams::from_normalized(0.3, 1.0, 1.0);  // busy enough to visit every transition
    cfg.horizon = 1e12;
    cfg.seed = options.seed;
    cfg.max_events = options.structural_events;
    const auto report = sim::check_transitions(options.model_source(kind), cfg);
    nlohmann::json d{{"events_checked", report.events_checked},
                     {"violations", report.violation_count},
                     {"transitions_seen", report.transition_hits.size()}};
    if (!report.violations.empty()) d["first_violation"] = report.violations.front();
    c.detail[sync::to_string(kind)] = d;
    if (!report.ok()) c.passed = false;
  }
  return c;
}

Check simulation_check(const Options& options) {
  Check c{"simulation_vs_analytic", true, {}};
  std::uint64_t offset = 0;
  for (auto kind : kAllKinds) {
    const double sigma = kind.primitive == sync::Primitive::kRcu ? 10.0 : 1.0;
    const auto params = RateParams::from_normalized(0.05, 1.0, sigma);
    const auto a = sync::analyze(kind, params);
    sim::SimConfig cfg;
    cfg.kind = kind;
    cfg.params = params;
    cfg.horizon = options.horizon;
    cfg.seed = options.seed + offset++;
    const auto s = sim::run_sim(cfg);
    auto within = [](double sim, double se, double ref) { return std::abs(sim - ref) <= 3.0 * se; };
    nlohmann::json d{{"age_app", {a.age_app(), s.avg_age_app, s.se_app}},
                     {"age_location", {a.age_location(), s.avg_age_location, s.se_location}}};
    bool ok = within(s.avg_age_app, s.se_app, a.age_app()) &&
              within(s.avg_age_location, s.se_location, a.age_location());
    if (a.delivery) {
      d["delivery"] = {*a.delivery, s.delivery_fraction, s.se_delivery};
      ok = ok && within(s.delivery_fraction, s.se_delivery, *a.delivery);
    }
    d["passed"] = ok;
    c.detail[sync::to_string(kind)] = d;
    if (!ok) c.passed = false;
  }
  return c;
}

}  // namespace

std::vector<RateParams> random_parameter_grid(int points, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> rho(0.001, 0.1), beta(0.1, 20.0), sigma(0.5, 20.0);
  std::vector<RateParams> grid;
  grid.reserve(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    const double r = rho(rng);
    const double b = beta(rng);
    const double s = sigma(rng);
    grid.push_back(RateParams::from_normalized(r, b, s));
  }
  return grid;
}

double relative_age_residual(const shs::ShsModel& model, const RateParams& params,
                             const shs::StationaryDistribution& pi,
                             const shs::AgeBalanceSolution& solution) {
  double biggest = 0.0;
  for (const auto& v : solution.v_bar) biggest = std::max({biggest, std::abs(v[0]), std::abs(v[1])});
  return shs::age_balance_residual(model, params, pi, solution.process, solution.v_bar) / (1.0 + biggest);
}

bool Report::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

nlohmann::json Report::to_json() const {
  nlohmann::json j;
  j["passed"] = passed();
  for (const auto& c : checks) j["checks"].push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  return j;
}

Report run(const Options& options) {
  const auto grid = random_parameter_grid(options.grid, options.seed);
  Report r;
  r.checks.push_back(closed_form_check(grid));
  r.checks.push_back(residual_check(grid));
  r.checks.push_back(structural_check(options));
  r.checks.push_back(simulation_check(options));
  return r;
}

}  // namespace aoi::verify
