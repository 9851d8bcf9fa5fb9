#pragma once

#include <stdexcept>

namespace imgrid {

/// Invalid configuration: bad sizes, malformed config files, unusable paths.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// API misuse: dimension mismatches, stepping a finished episode, stale tapes.
struct UsageError : std::logic_error {
  using std::logic_error::logic_error;
};

/// Numerical failure during training (non-finite gradients or losses).
struct TrainingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Failure to obtain an LLM reward (exhausted retries, unusable response).
struct RewardError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A response that contains no usable score token.
struct ScoreParseError : RewardError {
  using RewardError::RewardError;
};

}  // namespace imgrid
