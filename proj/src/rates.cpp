#include "aoi/rates.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "aoi/errors.hpp"

namespace aoi {

std::string_view to_string(RateSymbol s) {
  switch (s) {
    case RateSymbol::kLocationArrival: return "lambda_hat";
    case RateSymbol::kAppArrival: return "lambda";
    case RateSymbol::kWrite: return "mu_hat";
    case RateSymbol::kRead: return "mu";
  }
  return "?";
}

RateSymbol parse_rate_symbol(std::string_view text) {
  if (text == "lambda_hat") return RateSymbol::kLocationArrival;
  if (text == "lambda") return RateSymbol::kAppArrival;
  if (text == "mu_hat") return RateSymbol::kWrite;
  if (text == "mu") return RateSymbol::kRead;
  throw std::invalid_argument("unknown rate symbol: " + std::string(text));
}

bool RateParams::all_positive() const {
  for (double r : {lambda_hat, lambda, mu_hat, mu}) {
    if (!std::isfinite(r) || r <= 0.0) return false;
  }
  return true;
}

void RateParams::require_positive() const {
  for (auto s : {RateSymbol::kLocationArrival, RateSymbol::kAppArrival,
                 RateSymbol::kWrite, RateSymbol::kRead}) {
    const double r = rate(s);
    if (!std::isfinite(r) || r <= 0.0) {
      throw NonErgodic("rate " + std::string(to_string(s)) +
                       " must be finite and > 0, got " + std::to_string(r));
    }
  }
}

}  // namespace aoi
