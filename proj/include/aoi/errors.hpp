#pragma once

#include <stdexcept>
#include <string>

namespace aoi {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A rate is zero/non-finite or the discrete-state chain is not strongly connected.
class NonErgodic : public Error {
 public:
  using Error::Error;
};

class SingularSystem : public Error {
 public:
  using Error::Error;
};

// A solved age fixed point came out below the negativity threshold.
class NegativeFixedPoint : public Error {
 public:
  using Error::Error;
};

class Unsupported : public Error {
 public:
  using Error::Error;
};

class InvalidConfig : public Error {
 public:
  using Error::Error;
};

class UnknownFigure : public Error {
 public:
  using Error::Error;
};

}  // namespace aoi
