#pragma once

#include <cstdint>
#include <string_view>

namespace aoi {

// The four event rates that drive every model.
enum class RateSymbol : std::uint8_t {
  kLocationArrival,  // lambda_hat
  kAppArrival,       // lambda
  kWrite,            // mu_hat
  kRead,             // mu
};

std::string_view to_string(RateSymbol s);
// Parses "lambda_hat", "lambda", "mu_hat", "mu". Throws std::invalid_argument.
RateSymbol parse_rate_symbol(std::string_view text);

struct RateParams {
  double lambda_hat = 1.0;  // location-update arrivals
  double lambda = 1.0;      // app-update arrivals
  double mu_hat = 1.0;      // write speed
  double mu = 1.0;          // read speed

  // Builds raw rates from the normalized triple; ages are then in units of 1/mu_hat.
  static RateParams from_normalized(double rho_hat, double beta, double sigma,
                                    double mu_hat = 1.0) {
    return {rho_hat * mu_hat, beta * mu_hat, mu_hat, sigma * mu_hat};
  }

  double rho_hat() const { return lambda_hat / mu_hat; }
  double beta() const { return lambda / mu_hat; }
  double sigma() const { return mu / mu_hat; }
  double lambda_star() const { return lambda + lambda_hat; }
  double mu_star() const { return mu + mu_hat; }

  double rate(RateSymbol s) const {
    switch (s) {
      case RateSymbol::kLocationArrival: return lambda_hat;
      case RateSymbol::kAppArrival: return lambda;
      case RateSymbol::kWrite: return mu_hat;
      case RateSymbol::kRead: return mu;
    }
    return 0.0;
  }

  RateParams scaled(double c) const {
    return {lambda_hat * c, lambda * c, mu_hat * c, mu * c};
  }

  // True when all four rates are finite and strictly positive.
  bool all_positive() const;

  // Throws NonErgodic naming the first offending rate.
  void require_positive() const;
};

}  // namespace aoi
