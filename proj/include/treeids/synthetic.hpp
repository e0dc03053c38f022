#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "treeids/ingest.hpp"

namespace treeids {

/// Generator for a CAN-like capture with four injected attack types.
///
/// Normal traffic cycles over a fixed set of ids, each with its own byte layout
/// (constant bytes, small-range sensor bytes, a rolling counter). DoS floods id 0x000
/// with zero payloads, fuzzy frames carry random ids and bytes, and the two spoofing
/// classes reuse the gear (0x43F) and RPM (0x316) ids with payloads outside the
/// normal ranges.
struct SyntheticCanOptions {
    std::size_t frames = 50000;
    /// Share of frames that are attacks, split evenly across the four attack types.
    double attack_share = 0.4;
    std::uint64_t seed = 0;
};

inline constexpr const char* kSyntheticLabels[] = {"Normal", "DoS", "Fuzzy", "Gear", "RPM"};

std::vector<CanFrame> generate_can_frames(const SyntheticCanOptions& options);

/// Writes frames in the capture CSV layout (flag R for normal, T otherwise).
void write_can_csv(const std::vector<CanFrame>& frames, std::ostream& out, const std::string& normal_label = "Normal");

} // namespace treeids
