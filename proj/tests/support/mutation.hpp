#pragma once

#include <random>
#include <string>

namespace xrf::testing {

/// One random edit of `text`: substitution, deletion, insertion, truncation
/// or a swap of two characters.
std::string mutate(const std::string& text, std::mt19937& rng);

/// Flips one bit inside the ek, iv or ct field of a challenge envelope and
/// re-encodes it, so the edit survives the outer Base64 and JSON layers.
std::string mutate_inner(const std::string& payload, std::mt19937& rng);

}  // namespace xrf::testing
