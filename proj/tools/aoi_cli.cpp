// aoi: age-of-information analysis and simulation of an RCU / RWL packet forwarder.
//
//   aoi analyze  --model rcu|rwl [--no-preempt] --rho-hat R --beta B --sigma S
//   aoi simulate --model rcu|rwl [--no-preempt] --rho-hat R --beta B --sigma S [--horizon H --seed N]
//   aoi sweep    --models rcu,rwl --var rho_hat --range 0.005:0.1:20 --beta B
//                --sigma-rcu 10 --sigma-rwl 1 [--simulate --horizon H --seed N --batches 20] --out f.csv
//   aoi figure   3a|3b|4a|4b|5a|5b|6 --out f.csv
//   aoi verify   [--grid N] [--seed N]
//   aoi table    --model rcu|rwl [--no-preempt]
//
// Exit status: 0 success, 1 verification failure, 2 invalid arguments.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "aoi/errors.hpp"
#include "aoi/forwarder_sim.hpp"
#include "aoi/sweep.hpp"
#include "aoi/sync_models.hpp"
#include "aoi/verify.hpp"

namespace {

constexpr int kExitVerifyFailed = 1;
constexpr int kExitBadArgs = 2;

struct PointArgs {
  std::string model = "rcu";
  bool no_preempt = false;
  double rho_hat = 0.05;
  double beta = 10.0;
  double sigma = 10.0;
  double mu_hat = 1.0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--model", model, "rcu or rwl")->check(CLI::IsMember({"rcu", "rwl"}))->required();
    cmd->add_flag("--no-preempt", no_preempt, "disable reader-side preemption");
    cmd->add_option("--rho-hat", rho_hat, "lambda_hat / mu_hat")->required();
    cmd->add_option("--beta", beta, "lambda / mu_hat")->required();
    cmd->add_option("--sigma", sigma, "mu / mu_hat")->required();
    cmd->add_option("--mu-hat", mu_hat, "write speed (ages are in units of 1/mu_hat)")->capture_default_str();
  }

  aoi::sync::PrimitiveKind kind() const {
    auto k = aoi::sync::parse_kind(model);
    k.preemptive = !no_preempt;
    return k;
  }
  aoi::RateParams params() const { return aoi::RateParams::from_normalized(rho_hat, beta, sigma, mu_hat); }
};

nlohmann::json analysis_json(const aoi::sync::Analysis& a) {
  auto solution = [](const aoi::shs::AgeBalanceSolution& s) {
    nlohmann::json v = nlohmann::json::array();
    for (const auto& q : s.v_bar) v.push_back({q[0], q[1]});
    return nlohmann::json{{"average_age", s.average_age}, {"v_bar", v}};
  };
  nlohmann::json j{{"kind", aoi::sync::to_string(a.kind)},
                   {"rho_hat", a.params.rho_hat()},
                   {"beta", a.params.beta()},
                   {"sigma", a.params.sigma()},
                   {"mu_hat", a.params.mu_hat},
                   {"pi", a.pi.pi},
                   {"pi_residual", a.pi.residual},
                   {"pi_closed_form_gap", a.closed_form_gap},
                   {"age_app", a.age_app()},
                   {"age_location", a.age_location()},
                   {"app", solution(a.app)},
                   {"location", solution(a.location)}};
  j["p_delivery"] = a.delivery ? nlohmann::json(*a.delivery) : nlohmann::json(nullptr);
  return j;
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot open output file " + path);
  out << text;
}

std::vector<aoi::sync::PrimitiveKind> parse_models(const std::string& list) {
  std::vector<aoi::sync::PrimitiveKind> kinds;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) kinds.push_back(aoi::sync::parse_kind(item));
  }
  return kinds;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Age of Information of location and app updates in an RCU / RWL packet forwarder"};
  app.require_subcommand(1);

  PointArgs analyze_args;
  auto* analyze_cmd = app.add_subcommand("analyze", "stationary distribution, average ages and delivery probability");
  analyze_args.attach(analyze_cmd);

  PointArgs sim_args;
  aoi::sim::SimConfig sim_cfg;
  auto* sim_cmd = app.add_subcommand("simulate", "discrete-event simulation of one operating point (JSON)");
  sim_args.attach(sim_cmd);
  sim_cmd->add_option("--horizon", sim_cfg.horizon, "simulated time")->capture_default_str();
  sim_cmd->add_option("--seed", sim_cfg.seed, "random seed")->capture_default_str();
  sim_cmd->add_option("--batches", sim_cfg.batches, "batch-means batches")->capture_default_str();
  sim_cmd->add_option("--warmup", sim_cfg.warmup_fraction, "fraction of horizon discarded")->capture_default_str();

  aoi::sweep::SweepSpec spec;
  std::string models = "rcu,rwl";
  std::string variable = "rho_hat";
  std::string range = "0.005:0.1:20";
  std::string spacing = "linear";
  std::optional<double> sigma_both;
  bool simulate = false;
  std::string sweep_out;
  auto* sweep_cmd = app.add_subcommand("sweep", "parameter sweep to CSV");
  sweep_cmd->add_option("--models", models, "comma list of rcu, rwl, rcu-np, rwl-np")->capture_default_str();
  sweep_cmd->add_option("--var", variable, "swept variable")
      ->check(CLI::IsMember({"rho_hat", "beta", "sigma"}))
      ->capture_default_str();
  sweep_cmd->add_option("--range", range, "start:stop:points")->capture_default_str();
  sweep_cmd->add_option("--spacing", spacing, "linear or log")->check(CLI::IsMember({"linear", "log"}));
  sweep_cmd->add_option("--rho-hat", spec.rho_hat, "fixed rho_hat")->capture_default_str();
  sweep_cmd->add_option("--beta", spec.beta, "fixed beta")->capture_default_str();
  sweep_cmd->add_option("--sigma-rcu", spec.sigma_rcu, "fixed sigma for RCU")->capture_default_str();
  sweep_cmd->add_option("--sigma-rwl", spec.sigma_rwl, "fixed sigma for RWL")->capture_default_str();
  sweep_cmd->add_option("--sigma", sigma_both, "fixed sigma for both primitives");
  sweep_cmd->add_flag("--simulate", simulate, "add simulation columns");
  sweep_cmd->add_option("--horizon", spec.horizon, "simulated time per row")->capture_default_str();
  sweep_cmd->add_option("--seed", spec.seed, "base seed (row i uses seed + i)")->capture_default_str();
  sweep_cmd->add_option("--batches", spec.batches, "batch-means batches")->capture_default_str();
  sweep_cmd->add_option("--threads", spec.threads, "worker threads (0: all cores)");
  sweep_cmd->add_option("--out", sweep_out, "output CSV (default stdout)");

  std::string figure;
  std::string figure_out;
  auto* figure_cmd = app.add_subcommand("figure", "preset sweep for one figure, as CSV");
  figure_cmd->add_option("figure", figure, "3a 3b 4a 4b 5a 5b 6")->required();
  figure_cmd->add_option("--out", figure_out, "output CSV (default stdout)");

  aoi::verify::Options verify_opts;
  auto* verify_cmd = app.add_subcommand("verify", "self-check suite; JSON report, exit 1 on failure");
  verify_cmd->add_option("--grid", verify_opts.grid, "random parameter points")->capture_default_str();
  verify_cmd->add_option("--seed", verify_opts.seed, "seed")->capture_default_str();
  verify_cmd->add_option("--horizon", verify_opts.horizon, "simulated time per check")->capture_default_str();

  std::string table_model = "rcu";
  bool table_no_preempt = false;
  auto* table_cmd = app.add_subcommand("table", "print the SHS transition table");
  table_cmd->add_option("--model", table_model, "rcu or rwl")->check(CLI::IsMember({"rcu", "rwl"}))->required();
  table_cmd->add_flag("--no-preempt", table_no_preempt, "drop reader-side preemption self-loops");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitBadArgs;
  }

  try {
    if (*analyze_cmd) {
      const auto a = aoi::sync::analyze(analyze_args.kind(), analyze_args.params());
      std::cout << analysis_json(a).dump(2) << "\n";
    } else if (*sim_cmd) {
      sim_cfg.kind = sim_args.kind();
      sim_cfg.params = sim_args.params();
      const auto r = aoi::sim::run_sim(sim_cfg);
      std::cout << nlohmann::json{{"config", aoi::sim::to_json(sim_cfg)}, {"result", aoi::sim::to_json(r)}}.dump(2)
                << "\n";
    } else if (*sweep_cmd) {
      spec.kinds = parse_models(models);
      spec.variable = aoi::sweep::parse_variable(variable);
      spec.grid = aoi::sweep::Grid::parse(
          range, spacing == "log" ? aoi::sweep::Spacing::kLog : aoi::sweep::Spacing::kLinear);
      if (sigma_both) spec.sigma_rcu = spec.sigma_rwl = *sigma_both;
      spec.mode = simulate ? aoi::sweep::Mode::kBoth : aoi::sweep::Mode::kAnalytic;
      write_output(sweep_out, aoi::sweep::to_csv(aoi::sweep::run_sweep(spec)));
    } else if (*figure_cmd) {
      write_output(figure_out, aoi::sweep::figure_data(figure));
    } else if (*verify_cmd) {
      const auto report = aoi::verify::run(verify_opts);
      std::cout << report.to_json().dump(2) << "\n";
      return report.passed() ? 0 : kExitVerifyFailed;
    } else if (*table_cmd) {
      auto kind = aoi::sync::parse_kind(table_model);
      kind.preemptive = !table_no_preempt;
      std::cout << aoi::sync::export_table(aoi::sync::build_model(kind));
    }
  } catch (const aoi::UnknownFigure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadArgs;
  } catch (const aoi::InvalidConfig& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadArgs;
  } catch (const aoi::NonErgodic& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadArgs;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadArgs;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitVerifyFailed;
  }
  return 0;
}
