#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace uamtfl {

/// Base class for every error thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Tensor shapes do not satisfy an operation's contract.
struct DimensionError : Error {
  using Error::Error;
};

/// A computation produced (or was handed) a non-finite value.
struct NumericError : Error {
  using Error::Error;
};

/// An API precondition was violated by the caller.
struct ContractError : Error {
  using Error::Error;
};

/// Invalid model or experiment configuration.
struct ConfigError : Error {
  using Error::Error;
};

/// Malformed or inconsistent input data.
struct DataError : Error {
  using Error::Error;
};

/// A binary container (IDX file, checkpoint) violates its format.
struct FormatError : Error {
  using Error::Error;
};

/// Two data sources that must share sample identifiers do not line up.
struct AlignmentError : Error {
  using Error::Error;
};

/// A training run aborted. Carries the position of the failing step.
struct TrainingError : Error {
  TrainingError(const std::string& what, std::size_t epoch, std::size_t step)
      : Error(what), epoch(epoch), step(step) {}
  std::size_t epoch = 0;
  std::size_t step = 0;
};

}  // namespace uamtfl
