// Copyright 2026 The Resonance Authors
// SPDX-License-Identifier: Apache-2.0
//
// Micro-scale end-to-end gradient verification of the full model.

#pragma once

#include <cstdint>
#include <string>

#include "resonance/grad_check.hpp"
#include "resonance/model.hpp"

namespace resonance {

struct PipelineGradcheckOptions {
  ModelConfig model = micro_model();
  std::uint64_t seed = 1;
  /// Clip embeddings per music and video input.
  std::size_t clips = 3;
  double epsilon = 1e-6;

  /// d_model 16, 2 LM layers, one fusion layer, LoRA rank 2.
  static ModelConfig micro_model();
};

struct PipelineGradcheckResult {
  GradCheckResult check;
  /// Parameter tensors covered; every parameter of the model, LoRA factors
  /// included.
  std::size_t parameters = 0;
  double seconds = 0.0;
};

/// Runs the finite-difference check at 64-bit on the masked target loss of a
/// random music + video + image + text input.
PipelineGradcheckResult run_pipeline_gradcheck(const PipelineGradcheckOptions& options = {});

}  // namespace resonance
