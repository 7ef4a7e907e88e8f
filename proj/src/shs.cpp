#include "aoi/shs.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <sstream>

#include "aoi/errors.hpp"

namespace aoi::shs {

namespace {

std::vector<bool> reachable(const ShsModel& model, std::size_t start, bool reverse) {
  std::vector<bool> seen(model.num_states, false);
  std::queue<std::size_t> frontier;
  seen[start] = true;
  frontier.push(start);
  while (!frontier.empty()) {
    const std::size_t q = frontier.front();
    frontier.pop();
    for (const auto& t : model.transitions) {
      if (t.is_self_loop() || t.from >= model.num_states || t.to >= model.num_states) continue;
      const std::size_t src = reverse ? t.to : t.from;
      const std::size_t dst = reverse ? t.from : t.to;
      if (src == q && !seen[dst]) {
        seen[dst] = true;
        frontier.push(dst);
      }
    }
  }
  return seen;
}

void require_well_formed(const ShsModel& model) {
  if (model.num_states == 0) throw NonErgodic("model '" + model.name + "' has no states");
  for (const auto& t : model.transitions) {
    if (t.from >= model.num_states || t.to >= model.num_states) {
      throw NonErgodic("transition " + std::to_string(t.id) + " references a missing state");
    }
  }
}

std::vector<double> outgoing_rates(const ShsModel& model, const RateParams& params) {
  std::vector<double> out(model.num_states, 0.0);
  for (const auto& t : model.transitions) out[t.from] += params.rate(t.rate_symbol);
  return out;
}

}  // namespace

bool ResetMap::is_binary() const {
  for (const auto& row : a) {
    for (int v : row) {
      if (v != 0 && v != 1) return false;
    }
  }
  return true;
}

std::string to_string(AgeProcess p) { return p == AgeProcess::kApp ? "app" : "location"; }

const Transition* ShsModel::find(int id) const {
  auto it = std::find_if(transitions.begin(), transitions.end(),
                         [id](const Transition& t) { return t.id == id; });
  return it == transitions.end() ? nullptr : &*it;
}

bool is_strongly_connected(const ShsModel& model) {
  if (model.num_states == 0) return false;
  const auto fwd = reachable(model, 0, false);
  const auto bwd = reachable(model, 0, true);
  return std::all_of(fwd.begin(), fwd.end(), [](bool b) { return b; }) &&
         std::all_of(bwd.begin(), bwd.end(), [](bool b) { return b; });
}

double global_balance_residual(const ShsModel& model, const RateParams& params,
                               const std::vector<double>& pi) {
  std::vector<double> net(model.num_states, 0.0);
  for (const auto& t : model.transitions) {
    if (t.is_self_loop()) continue;
    const double flow = params.rate(t.rate_symbol) * pi[t.from];
    net[t.from] -= flow;
    net[t.to] += flow;
  }
  double worst = 0.0;
  for (double v : net) worst = std::max(worst, std::abs(v));
  return worst;
}

StationaryDistribution stationary_distribution(const ShsModel& model,
                                               const RateParams& params) {
  params.require_positive();
  require_well_formed(model);
  if (!is_strongly_connected(model)) {
    throw NonErgodic("model '" + model.name + "' is not strongly connected");
  }

  const auto n = static_cast<Eigen::Index>(model.num_states);
  // Rows are the balance equations (Q^T pi = 0); the last one is swapped for sum(pi) = 1.
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (const auto& t : model.transitions) {
    if (t.is_self_loop()) continue;
    const double r = params.rate(t.rate_symbol);
    const auto from = static_cast<Eigen::Index>(t.from);
    const auto to = static_cast<Eigen::Index>(t.to);
    a(to, from) += r;
    a(from, from) -= r;
  }
  a.row(n - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b(n - 1) = 1.0;

  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  if (!lu.isInvertible()) {
    throw SingularSystem("global-balance system of '" + model.name + "' is singular");
  }
  const Eigen::VectorXd x = lu.solve(b);

  StationaryDistribution out;
  out.pi.resize(model.num_states);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(x(i)) || x(i) < -1e-12) {
      throw SingularSystem("stationary solve of '" + model.name + "' produced pi[" +
                           std::to_string(i) + "] = " + std::to_string(x(i)));
    }
    out.pi[static_cast<std::size_t>(i)] = std::max(0.0, x(i));
    total += out.pi[static_cast<std::size_t>(i)];
  }
  for (double& p : out.pi) p /= total;
  out.residual = global_balance_residual(model, params, out.pi);
  return out;
}

double age_balance_residual(const ShsModel& model, const RateParams& params,
                            const StationaryDistribution& pi, AgeProcess process,
                            const std::vector<AgeVector>& v_bar) {
  const auto out_rate = outgoing_rates(model, params);
  std::vector<AgeVector> diff(model.num_states);
  for (std::size_t q = 0; q < model.num_states; ++q) {
    for (int j = 0; j < 2; ++j) diff[q][j] = out_rate[q] * v_bar[q][j] - pi.pi[q];
  }
  for (const auto& t : model.transitions) {
    const AgeVector moved = t.reset_for(process).apply(v_bar[t.from]);
    const double r = params.rate(t.rate_symbol);
    for (int j = 0; j < 2; ++j) diff[t.to][j] -= r * moved[j];
  }
  double worst = 0.0;
  for (const auto& d : diff) worst = std::max({worst, std::abs(d[0]), std::abs(d[1])});
  return worst;
}

AgeBalanceSolution solve_age_balance(const ShsModel& model, const RateParams& params,
                                     const StationaryDistribution& pi, AgeProcess process) {
  params.require_positive();
  require_well_formed(model);
  if (pi.pi.size() != model.num_states) {
    throw SingularSystem("stationary distribution does not match model '" + model.name + "'");
  }

  const auto n = static_cast<Eigen::Index>(model.num_states);
  const auto out_rate = outgoing_rates(model, params);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  Eigen::VectorXd rhs(2 * n);
  for (Eigen::Index q = 0; q < n; ++q) {
    for (Eigen::Index j = 0; j < 2; ++j) {
      m(2 * q + j, 2 * q + j) += out_rate[static_cast<std::size_t>(q)];
      rhs(2 * q + j) = pi.pi[static_cast<std::size_t>(q)];
    }
  }
  // Incoming term rate * v_from * A contributes A[k][j] * v_from[k] to component j.
  for (const auto& t : model.transitions) {
    const double r = params.rate(t.rate_symbol);
    const auto& a = t.reset_for(process).a;
    const auto from = static_cast<Eigen::Index>(t.from);
    const auto to = static_cast<Eigen::Index>(t.to);
    for (Eigen::Index j = 0; j < 2; ++j) {
      for (Eigen::Index k = 0; k < 2; ++k) {
        m(2 * to + j, 2 * from + k) -= r * a[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)];
      }
    }
  }

  Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
  if (!lu.isInvertible()) {
    throw SingularSystem("age-balance system of '" + model.name + "' (" + to_string(process) +
                         ") is singular");
  }
  const Eigen::VectorXd x = lu.solve(rhs);

  AgeBalanceSolution sol;
  sol.process = process;
  sol.v_bar.resize(model.num_states);
  for (Eigen::Index q = 0; q < n; ++q) {
    for (Eigen::Index j = 0; j < 2; ++j) {
      const double v = x(2 * q + j);
      if (!std::isfinite(v)) {
        throw SingularSystem("age-balance solve of '" + model.name + "' is not finite");
      }
      if (v < kNegativityThreshold) {
        std::ostringstream msg;
        msg << "negative fixed point v[" << q << "][" << j << "] = " << v << " in '"
            << model.name << "' (" << to_string(process) << ")";
        throw NegativeFixedPoint(msg.str());
      }
      sol.v_bar[static_cast<std::size_t>(q)][static_cast<std::size_t>(j)] = std::max(0.0, v);
    }
  }
  sol.average_age = average_age(sol);
  return sol;
}

double average_age(const AgeBalanceSolution& solution) {
  double sum = 0.0;
  for (const auto& v : solution.v_bar) sum += v[1];
  return sum;
}

std::vector<std::string> validate_model(const ShsModel& model) {
  std::vector<std::string> issues;
  if (model.num_states == 0) {
    issues.emplace_back("model has no states");
    return issues;
  }
  std::set<int> ids;
  bool dangling = false;
  for (const auto& t : model.transitions) {
    const std::string tag = "transition " + std::to_string(t.id);
    if (!ids.insert(t.id).second) issues.push_back(tag + ": duplicate id");
    if (t.from >= model.num_states || t.to >= model.num_states) {
      issues.push_back(tag + ": state index out of range");
      dangling = true;
    }
    if (!t.reset_app.is_binary()) issues.push_back(tag + ": app reset map is not binary");
    if (!t.reset_loc.is_binary()) issues.push_back(tag + ": location reset map is not binary");
    if (!t.reset_app.is_identity() && !t.reset_loc.is_identity()) {
      issues.push_back(tag + ": both reset maps differ from identity");
    }
  }
  if (!dangling) {
    const auto fwd = reachable(model, 0, false);
    const auto bwd = reachable(model, 0, true);
    for (std::size_t q = 0; q < model.num_states; ++q) {
      if (!fwd[q]) issues.push_back("connectivity: state " + std::to_string(q) + " unreachable from state 0");
      if (!bwd[q]) issues.push_back("connectivity: state 0 unreachable from state " + std::to_string(q));
    }
  }
  return issues;
}

}  // namespace aoi::shs
