#include "aoi/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "aoi/errors.hpp"

namespace aoi::sweep {

namespace {

double parse_double(std::string_view text, std::string_view what) {
  try {
    std::size_t used = 0;
    const std::string s(text);
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("bad " + std::string(what) + ": '" + std::string(text) + "'");
  }
}

double sigma_for(const SweepSpec& spec, const sync::PrimitiveKind& kind) {
  return kind.primitive == sync::Primitive::kRcu ? spec.sigma_rcu : spec.sigma_rwl;
}

SweepRow compute_row(const SweepSpec& spec, const sync::PrimitiveKind& kind, double x,
                     std::uint64_t row_index) {
  SweepRow row;
  row.kind = kind;
  row.rho_hat = spec.rho_hat;
  row.beta = spec.beta;
  row.sigma = sigma_for(spec, kind);
  switch (spec.variable) {
    case Variable::kRhoHat: row.rho_hat = x; break;
    case Variable::kBeta: row.beta = x; break;
    case Variable::kSigma: row.sigma = x; break;
  }
  const auto params = RateParams::from_normalized(row.rho_hat, row.beta, row.sigma, spec.mu_hat);
  try {
    if (spec.mode != Mode::kSimulate) {
      const auto a = sync::analyze(kind, params);
      row.age_app = a.age_app();
      row.age_location = a.age_location();
      row.delivery = a.delivery;
    }
    if (spec.mode != Mode::kAnalytic) {
      sim::SimConfig cfg;
      cfg.kind = kind;
      cfg.params = params;
      cfg.horizon = spec.horizon;
      cfg.warmup_fraction = spec.warmup_fraction;
      cfg.seed = spec.seed + row_index;
      cfg.batches = spec.batches;
      row.sim = sim::run_sim(cfg);
    }
  } catch (const Error& e) {
    row.error = e.what();
  }
  return row;
}

void put(std::ostream& out, std::optional<double> v) {
  out << ',';
  if (v) out << *v;
}

}  // namespace

std::string_view to_string(Variable v) {
  switch (v) {
    case Variable::kRhoHat: return "rho_hat";
    case Variable::kBeta: return "beta";
    case Variable::kSigma: return "sigma";
  }
  return "?";
}

Variable parse_variable(std::string_view text) {
  if (text == "rho_hat") return Variable::kRhoHat;
  if (text == "beta") return Variable::kBeta;
  if (text == "sigma") return Variable::kSigma;
  throw std::invalid_argument("unknown sweep variable: " + std::string(text));
}

Mode parse_mode(std::string_view text) {
  if (text == "analytic") return Mode::kAnalytic;
  if (text == "simulate") return Mode::kSimulate;
  if (text == "both") return Mode::kBoth;
  throw std::invalid_argument("unknown sweep mode: " + std::string(text));
}

Grid Grid::parse(std::string_view text, Spacing spacing) {
  const auto first = text.find(':');
  const auto second = first == std::string_view::npos ? first : text.find(':', first + 1);
  if (second == std::string_view::npos) {
    throw std::invalid_argument("range must look like start:stop:points, got '" + std::string(text) + "'");
  }
  Grid g;
  g.start = parse_double(text.substr(0, first), "range start");
  g.stop = parse_double(text.substr(first + 1, second - first - 1), "range stop");
  const auto pts = text.substr(second + 1);
  int points = 0;
  const auto [ptr, ec] = std::from_chars(pts.data(), pts.data() + pts.size(), points);
  if (ec != std::errc{} || ptr != pts.data() + pts.size()) {
    throw std::invalid_argument("bad range point count: '" + std::string(pts) + "'");
  }
  g.points = points;
  g.spacing = spacing;
  return g;
}

std::vector<double> Grid::values() const {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    const double f = static_cast<double>(i) / static_cast<double>(points - 1);
    if (spacing == Spacing::kLinear) {
      out.push_back(i + 1 == points ? stop : start + f * (stop - start));
    } else {
      out.push_back(i + 1 == points ? stop : start * std::pow(stop / start, f));
    }
  }
  return out;
}

void SweepSpec::validate() const {
  if (kinds.empty()) throw std::invalid_argument("at least one model kind is required");
  if (!(grid.start < grid.stop)) throw std::invalid_argument("grid start must be < stop");
  if (grid.points < 2) throw std::invalid_argument("grid needs at least 2 points");
  if (grid.spacing == Spacing::kLog && !(grid.start > 0.0)) {
    throw std::invalid_argument("log spacing needs a positive start");
  }
  if (variable == Variable::kRhoHat && !(grid.start > 0.0)) {
    throw std::invalid_argument("rho_hat must stay > 0 (rho_hat = 0 is not ergodic)");
  }
  for (double v : {rho_hat, beta, sigma_rcu, sigma_rwl, mu_hat}) {
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("fixed rates must be > 0");
  }
  if (mode != Mode::kAnalytic) {
    if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be > 0");
    if (batches < 2) throw std::invalid_argument("batches must be >= 2");
    if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0)) {
      throw std::invalid_argument("warmup fraction must lie in [0, 1)");
    }
  }
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
  spec.validate();
  const auto xs = spec.grid.values();
  struct Job {
    sync::PrimitiveKind kind;
    double x;
  };
  std::vector<Job> jobs;
  for (double x : xs) {
    for (const auto& k : spec.kinds) jobs.push_back({k, x});
  }
  std::vector<SweepRow> rows(jobs.size());

  unsigned workers = spec.threads ? spec.threads : std::max(1u, std::thread::hardware_concurrency());
  if (spec.mode == Mode::kAnalytic) workers = 1;  // microseconds per row; threads only add overhead
  workers = std::min<unsigned>(workers, static_cast<unsigned>(jobs.size()));

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      rows[i] = compute_row(spec, jobs[i].kind, jobs[i].x, i);
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  return rows;
}

std::string csv_header() {
  return "kind,preemptive,rho_hat,beta,sigma,age_app,age_location,p_delivery,"
         "sim_age_app,sim_age_app_ci,sim_age_location,sim_age_location_ci,"
         "sim_delivery,sim_delivery_ci,error";
}

std::string to_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << std::setprecision(12);
  out << csv_header() << '\n';
  for (const auto& r : rows) {
    out << to_string(r.kind.primitive) << ',' << (r.kind.preemptive ? 1 : 0) << ',' << r.rho_hat
        << ',' << r.beta << ',' << r.sigma;
    put(out, r.age_app);
    put(out, r.age_location);
    put(out, r.delivery);
    if (r.sim) {
      put(out, r.sim->avg_age_app);
      put(out, r.sim->ci_app);
      put(out, r.sim->avg_age_location);
      put(out, r.sim->ci_location);
      put(out, r.sim->delivery_fraction);
      put(out, r.sim->ci_delivery);
    } else {
      out << ",,,,,,";
    }
    // Errors are free text; keep the column count stable.
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    out << ',' << err << '\n';
  }
  return out.str();
}

std::vector<SweepSpec> figure_specs(std::string_view figure) {
  if (std::ranges::find(kFigureIds, figure) == kFigureIds.end()) {
    throw UnknownFigure("unknown figure '" + std::string(figure) + "'; expected one of 3a 3b 4a 4b 5a 5b 6");
  }
  SweepSpec base;
  base.variable = Variable::kRhoHat;
  base.grid = {0.005, 0.1, 20, Spacing::kLinear};
  base.sigma_rcu = 10.0;
  base.sigma_rwl = (figure == "3b" || figure == "4b") ? 10.0 : 1.0;
  if (figure == "5a") base.kinds = {sync::kRcuPreemptive, sync::kRcuNonPreemptive};
  if (figure == "5b") base.kinds = {sync::kRwlPreemptive, sync::kRwlNonPreemptive};

  std::vector<double> betas{1.0, 10.0};
  if (figure == "6") betas = {10.0};
  std::vector<SweepSpec> specs;
  for (double b : betas) {
    base.beta = b;
    specs.push_back(base);
  }
  return specs;
}

std::vector<SweepRow> figure_rows(std::string_view figure) {
  std::vector<SweepRow> rows;
  for (const auto& spec : figure_specs(figure)) {
    auto part = run_sweep(spec);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  return rows;
}

std::string figure_data(std::string_view figure) {
  const auto rows = figure_rows(figure);
  const auto specs = figure_specs(figure);
  std::ostringstream out;
  out << "# figure " << figure << "\n";
  out << "# sigma_rcu " << specs.front().sigma_rcu << " sigma_rwl " << specs.front().sigma_rwl
      << " mu_hat 1\n";
  out << "# beta";
  for (const auto& s : specs) out << ' ' << s.beta;
  out << "\n";
  if (figure == "3a" || figure == "3b") out << "# plotted column: age_app\n";
  if (figure == "4a" || figure == "4b") out << "# plotted column: p_delivery\n";
  if (figure == "5a" || figure == "5b") {
    out << "# plotted column: age_app (preemptive vs non-preemptive)\n";
    out << std::setprecision(6);
    for (const auto& g : preemption_gains(rows)) {
      out << "# preemption gain " << to_string(g.primitive) << " beta " << g.beta << " max "
          << 100.0 * g.max_gain << "% at rho_hat " << g.rho_hat_at_max << "\n";
    }
  }
  if (figure == "6") {
    out << "# plotted column: age_location\n";
    out << "# note: beta for this figure is not given with the plot; fixed at 10\n";
  }
  out << to_csv(rows);
  return out.str();
}

std::vector<PreemptionGain> preemption_gains(const std::vector<SweepRow>& rows) {
  using Key = std::tuple<sync::Primitive, double, double>;  // primitive, beta, sigma
  std::map<std::tuple<sync::Primitive, double, double, double>, std::pair<const SweepRow*, const SweepRow*>> pairs;
  for (const auto& r : rows) {
    auto& slot = pairs[{r.kind.primitive, r.beta, r.sigma, r.rho_hat}];
    (r.kind.preemptive ? slot.first : slot.second) = &r;
  }
  std::map<Key, PreemptionGain> best;
  for (const auto& [key, pair] : pairs) {
    const auto [p, np] = pair;
    if (!p || !np || !p->age_app || !np->age_app) continue;
    const double gain = 1.0 - *p->age_app / *np->age_app;
    const auto& [prim, beta, sigma, rho] = key;
    auto [it, inserted] = best.try_emplace(Key{prim, beta, sigma}, PreemptionGain{prim, beta, sigma, gain, rho});
    if (!inserted && gain > it->second.max_gain) {
      it->second.max_gain = gain;
      it->second.rho_hat_at_max = rho;
    }
  }
  std::vector<PreemptionGain> out;
  for (const auto& [key, g] : best) out.push_back(g);
  return out;
}

}  // namespace aoi::sweep
