#pragma once

#include <stdexcept>
#include <string>

namespace congested {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Game data violates the model (bad shape, negative utility, ...).
struct InvalidGame : Error {
  using Error::Error;
};

// Exhaustive search would exceed the configured allocation cap.
struct InstanceTooLarge : Error {
  using Error::Error;
};

// The number-of-agents estimator has a non-positive log argument.
struct EstimateUndefined : Error {
  using Error::Error;
};

// Trials were recorded on different step grids and cannot be averaged.
struct MisalignedSeries : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

}  // namespace congested
