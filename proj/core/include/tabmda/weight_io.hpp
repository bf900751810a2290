#pragma once

#include <string>
#include <utility>

#include "tabmda/encoder.hpp"

namespace tabmda {

/// Weight file layout, all integers little-endian:
///   magic "PFNW" | u32 version (1) | u32 JSON header length | JSON header
///   (config fields + ordered tensor manifest of name/shape) | each tensor's
///   raw IEEE-754 LE doubles in manifest order | trailing u64 payload byte
///   count.
void save_weights(const EncoderConfig& cfg, const EncoderWeights& weights,
                  const std::string& path);

/// Errors: NotAWeightFile (bad magic), VersionError (unsupported version),
/// CorruptWeights (sizes disagree with the payload, truncation, bad manifest).
std::pair<EncoderConfig, EncoderWeights> load_weights(const std::string& path);

} // namespace tabmda
