#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>

#include "treeids/artifact.hpp"

namespace treeids {

inline constexpr const char* kParseErrorClass = "PARSE-ERROR";

struct DetectOptions {
    std::size_t batch_size = 1024;
    int threads = 1;
};

struct Verdict {
    std::size_t ordinal = 0;
    std::string predicted;
    double confidence = 0.0;
    double latency_us = 0.0;
};

struct DetectSummary {
    std::size_t records = 0;
    std::size_t parse_errors = 0;
    double mean_us = 0.0;
    double p99_us = 0.0;
    double records_per_sec = 0.0;
};

std::string format_verdict(const Verdict& verdict);
std::string format_summary(const DetectSummary& summary);

/// Scores a record feed line by line and writes one verdict per record, in input order,
/// followed by a "# ..." summary line.
///
/// CAN profiles read frame lines (the R/T flag is optional and ignored). The flow profile
/// expects a header row first; its columns are matched to the model schema by name and
/// any label column is ignored. Memory is bounded by the batch size.
DetectSummary detect_stream(const ModelArtifact& artifact, std::istream& in, std::ostream& out,
                            const DetectOptions& options = {});

} // namespace treeids
