// Copyright 2026 The Resonance Authors
// SPDX-License-Identifier: Apache-2.0
//
// Fixed instruction and prompt strings of the instruction datasets.

#pragma once

#include <string_view>

namespace resonance::prompts {

/// Instruction shared by every music+image and music+video pair.
extern const std::string_view kMultiwayInstruction;
/// Closing instruction of the unified-caption prompt.
extern const std::string_view kUnifyInstruction;
/// First line of the user message of the flexible-input prompt.
extern const std::string_view kAny2TPreamble;
/// System message of the flexible-input prompt, guidelines and example.
extern const std::string_view kAny2TSystem;

}  // namespace resonance::prompts
