// Copyright 2026 The Resonance Authors
// SPDX-License-Identifier: Apache-2.0
//
// The `resonance` command-line tool.

#pragma once

#include <ostream>

namespace resonance::cli {

/// Process exit codes; each maps one error class.
enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kDataInvalid = 3,
  kStateInvalid = 4,
  kCheckpointInvalid = 5,
  kTransportFailed = 6,
  kNumericFailure = 7,
  kUnsupported = 8,
  kVerificationFailed = 9,
};

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace resonance::cli
