// Copyright 2026 The Resonance Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace resonance {

/// Invalid or inconsistent configuration (unknown flag value, unmatched LoRA
/// pattern, schema violation).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operation not allowed in the current state (double merge, stage 2 without
/// a stage-1 checkpoint, overwriting outputs without --force).
class StateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or rule-violating data (bad JSONL line, placeholder mismatch).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An operation that the given input's provenance cannot support.
class UnsupportedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A sequence longer than the model accepts. Never truncated silently.
class SequenceLengthError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Remote endpoint failure after exhausting retries.
class TransportError : public std::runtime_error {
 public:
  TransportError(const std::string& what, int attempts, int status = 0)
      : std::runtime_error(what), attempts_(attempts), status_(status) {}
  int attempts() const { return attempts_; }
  /// Last HTTP status, 0 when no response was received.
  int status() const { return status_; }

 private:
  int attempts_;
  int status_;
};

}  // namespace resonance
