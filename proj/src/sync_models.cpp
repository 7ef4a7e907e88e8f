#include "aoi/sync_models.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "aoi/errors.hpp"

namespace aoi::sync {

namespace {

using enum RateSymbol;

constexpr std::array<int, 4> kI{1, 0, 0, 1};  // identity
constexpr std::array<int, 4> kF{0, 0, 0, 1};  // (x0, x1) -> (0, x1)
constexpr std::array<int, 4> kD{1, 1, 0, 0};  // (x0, x1) -> (x0, x0)

// Transcribed row by row; app map A_l first, location map A_hat_l second.
constexpr std::array<TableRow, 15> kRcuTable{{
    {1, 0, 1, kLocationArrival, kI, kF},
    {2, 1, 1, kLocationArrival, kI, kF},
    {3, 2, 2, kLocationArrival, kI, kF},
    {4, 3, 2, kLocationArrival, kI, kF},
    {5, 4, 2, kLocationArrival, kI, kF},
    {6, 1, 0, kWrite, kI, kD},
    {7, 2, 4, kWrite, kI, kD},
    {8, 0, 3, kAppArrival, kF, kI},
    {9, 1, 2, kAppArrival, kF, kI},
    {10, 2, 2, kAppArrival, kF, kI},
    {11, 3, 3, kAppArrival, kF, kI},
    {12, 4, 4, kAppArrival, kF, kI},
    {13, 3, 0, kRead, kD, kI},
    {14, 4, 0, kRead, kI, kI},
    {15, 2, 1, kRead, kI, kI},
}};

constexpr std::array<TableRow, 14> kRwlTable{{
    {1, 0, 1, kLocationArrival, kI, kF},
    {2, 1, 1, kLocationArrival, kI, kF},
    {3, 2, 2, kLocationArrival, kI, kF},
    {4, 3, 4, kLocationArrival, kI, kF},
    {5, 4, 4, kLocationArrival, kI, kF},
    {6, 1, 0, kWrite, kI, kD},
    {7, 2, 3, kWrite, kI, kD},
    {8, 0, 3, kAppArrival, kF, kI},
    {9, 1, 2, kAppArrival, kF, kI},
    {10, 2, 2, kAppArrival, kF, kI},
    {11, 3, 3, kAppArrival, kF, kI},
    {12, 4, 4, kAppArrival, kF, kI},
    {13, 3, 0, kRead, kD, kI},
    {14, 4, 1, kRead, kI, kI},
}};

shs::ResetMap to_map(const std::array<int, 4>& bits) {
  return shs::ResetMap::from_bits(bits[0], bits[1], bits[2], bits[3]);
}

shs::StationaryDistribution normalize(std::array<double, 5> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  shs::StationaryDistribution out;
  out.pi.reserve(weights.size());
  for (double w : weights) out.pi.push_back(w / total);
  return out;
}

}  // namespace

std::string_view to_string(Primitive p) { return p == Primitive::kRcu ? "rcu" : "rwl"; }

std::string to_string(const PrimitiveKind& kind) {
  return std::string(to_string(kind.primitive)) + (kind.preemptive ? "-p" : "-np");
}

PrimitiveKind parse_kind(std::string_view text) {
  if (text == "rcu" || text == "rcu-p") return kRcuPreemptive;
  if (text == "rcu-np") return kRcuNonPreemptive;
  if (text == "rwl" || text == "rwl-p") return kRwlPreemptive;
  if (text == "rwl-np") return kRwlNonPreemptive;
  throw std::invalid_argument("unknown model kind: " + std::string(text));
}

std::span<const TableRow> transition_table(Primitive p) {
  if (p == Primitive::kRcu) return kRcuTable;
  return kRwlTable;
}

shs::ShsModel build_model(const PrimitiveKind& kind) {
  shs::ShsModel model;
  model.name = to_string(kind);
  model.num_states = 5;
  for (const auto& row : transition_table(kind.primitive)) {
    if (!kind.preemptive && std::ranges::find(kReaderPreemptionIds, row.id) != kReaderPreemptionIds.end()) {
      continue;
    }
    model.transitions.push_back({row.id, static_cast<std::size_t>(row.from),
                                 static_cast<std::size_t>(row.to), row.rate, to_map(row.app),
                                 to_map(row.loc)});
  }
  return model;
}

shs::StationaryDistribution rcu_stationary_closed_form(const RateParams& params) {
  params.require_positive();
  const double r = params.rho_hat();
  const double b = params.beta();
  const double s = params.sigma();
  auto out = normalize({s, r * s, b * r, b * s / (r + s), b * r / (r + s)});
  return out;
}

shs::StationaryDistribution rwl_stationary_closed_form(const RateParams& params) {
  params.require_positive();
  const double r = params.rho_hat();
  const double b = params.beta();
  const double s = params.sigma();
  return normalize({s * (r + s + b * s), r * s * (b + r + s), b * r * s * (b + r + s),
                    b * s * (1 + b + r), b * r * (1 + b + r)});
}

shs::StationaryDistribution stationary_closed_form(const PrimitiveKind& kind,
                                                   const RateParams& params) {
  return kind.primitive == Primitive::kRcu ? rcu_stationary_closed_form(params)
                                           : rwl_stationary_closed_form(params);
}

DeliveryProbability delivery_probability(const PrimitiveKind& kind, const RateParams& params) {
  if (!kind.preemptive) {
    throw Unsupported("no closed-form delivery probability for " + to_string(kind));
  }
  const auto pi = stationary_closed_form(kind, params).pi;
  // A read that starts on a fresh address delivers if it finishes before the
  // next location update or app arrival.
  const double read_wins = params.mu / (params.lambda_star() + params.mu);
  double p = 0.0;
  if (kind.primitive == Primitive::kRcu) {
    p = (pi[0] + pi[3]) * read_wins;
  } else {
    const double write_wins = params.mu_hat / (params.mu_hat + params.lambda);
    p = (pi[0] + (pi[1] + pi[2]) * write_wins + pi[3]) * read_wins;
  }
  return {std::clamp(p, 0.0, 1.0), kind};
}

Analysis analyze(const PrimitiveKind& kind, const RateParams& params) {
  Analysis a;
  a.kind = kind;
  a.params = params;
  const auto model = build_model(kind);
  a.pi = shs::stationary_distribution(model, params);
  const auto closed = stationary_closed_form(kind, params);
  for (std::size_t q = 0; q < a.pi.pi.size(); ++q) {
    a.closed_form_gap = std::max(a.closed_form_gap, std::abs(a.pi.pi[q] - closed.pi[q]));
  }
  a.location = shs::solve_age_balance(model, params, a.pi, shs::AgeProcess::kLocation);
  a.app = shs::solve_age_balance(model, params, a.pi, shs::AgeProcess::kApp);
  if (kind.preemptive) a.delivery = delivery_probability(kind, params).value;
  return a;
}

std::string export_table(const shs::ShsModel& model) {
  std::ostringstream out;
  out << "# model " << model.name << " states " << model.num_states << "\n";
  out << "# id from to rate a00 a01 a10 a11 h00 h01 h10 h11\n";
  for (const auto& t : model.transitions) {
    out << t.id << ' ' << t.from << ' ' << t.to << ' ' << to_string(t.rate_symbol);
    for (const auto* m : {&t.reset_app, &t.reset_loc}) {
      for (const auto& row : m->a) {
        for (int v : row) out << ' ' << v;
      }
    }
    out << '\n';
  }
  return out.str();
}

shs::ShsModel parse_table(std::string_view text) {
  shs::ShsModel model;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    if (line.front() == '#') {
      std::string hash, key;
      fields >> hash >> key;
      if (key == "model") {
        std::string states_kw;
        fields >> model.name >> states_kw >> model.num_states;
        if (!fields || states_kw != "states") {
          throw std::invalid_argument("line " + std::to_string(line_no) + ": bad model header");
        }
      }
      continue;
    }
    shs::Transition t;
    std::string symbol;
    std::array<int, 8> bits{};
    fields >> t.id >> t.from >> t.to >> symbol;
    for (int& b : bits) fields >> b;
    if (!fields) throw std::invalid_argument("line " + std::to_string(line_no) + ": malformed row");
    t.rate_symbol = parse_rate_symbol(symbol);
    t.reset_app = shs::ResetMap::from_bits(bits[0], bits[1], bits[2], bits[3]);
    t.reset_loc = shs::ResetMap::from_bits(bits[4], bits[5], bits[6], bits[7]);
    model.transitions.push_back(t);
  }
  return model;
}

}  // namespace aoi::sync
