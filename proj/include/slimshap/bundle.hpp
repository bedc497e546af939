#pragma once

#include <string>

#include "slimshap/pipeline.hpp"

namespace slimshap {

inline constexpr int kBundleVersion = 1;

// Serializes a fitted pipeline — surrogate tree with its spline coefficients,
// per-node probability models, configuration and the training block — as a
// versioned JSON document.  Doubles are written in shortest round-trip form,
// so a reloaded pipeline reproduces attributions bit for bit.
std::string bundle_to_json(const FittedPipeline& pipe);
FittedPipeline bundle_from_json(const std::string& text);

// File variants; writing is atomic (temp file + rename).
void save_bundle(const FittedPipeline& pipe, const std::string& path);
FittedPipeline load_bundle(const std::string& path);

}  // namespace slimshap
