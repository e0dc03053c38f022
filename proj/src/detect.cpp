#include "treeids/detect.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>

#include "treeids/error.hpp"
#include "treeids/ingest.hpp"
#include "treeids/parallel.hpp"

namespace treeids {
namespace {

using Clock = std::chrono::steady_clock;

// log-spaced latency histogram, 1% resolution from 0.01us to about 4s
class LatencyHistogram {
public:
    void add(double us) {
        total_ += us;
        ++count_;
        const double r = us <= kFloor ? 0.0 : std::log(us / kFloor) / std::log(kGrowth);
        ++bins_[std::min<std::size_t>(static_cast<std::size_t>(r), bins_.size() - 1)];
    }
    std::size_t count() const { return count_; }
    double mean() const { return count_ ? total_ / static_cast<double>(count_) : 0.0; }
    double quantile(double q) const {
        if (!count_) return 0.0;
        const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(count_)));
        std::size_t seen = 0;
        for (std::size_t b = 0; b < bins_.size(); ++b) {
            seen += bins_[b];
            if (seen >= rank) return kFloor * std::pow(kGrowth, static_cast<double>(b + 1));
        }
        return kFloor * std::pow(kGrowth, static_cast<double>(bins_.size()));
    }

private:
    static constexpr double kFloor = 0.01;
    static constexpr double kGrowth = 1.01;
    std::vector<std::size_t> bins_ = std::vector<std::size_t>(2200, 0);
    double total_ = 0.0;
    std::size_t count_ = 0;
};

bool is_blank(const std::string& line) {
    return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

// maps stream columns onto schema positions
struct FlowLayout {
    std::vector<std::size_t> source; // schema feature f is read from column source[f]
    std::size_t columns = 0;
};

FlowLayout flow_layout(const std::string& header, const FeatureSchema& schema) {
    auto names = split_csv_line(header);
    if (!names.empty() && names[0].starts_with("\xEF\xBB\xBF")) names[0].erase(0, 3);
    for (auto& n : names) {
        const auto b = n.find_first_not_of(" \t\r");
        const auto e = n.find_last_not_of(" \t\r");
        n = b == std::string::npos ? std::string() : n.substr(b, e - b + 1);
    }
    FlowLayout layout;
    layout.columns = names.size();
    for (const auto& feature : schema.names) {
        const auto it = std::find(names.begin(), names.end(), feature);
        if (it == names.end()) throw SchemaError("stream header lacks model feature '" + feature + "'");
        layout.source.push_back(static_cast<std::size_t>(it - names.begin()));
    }
    return layout;
}

class Decoder {
public:
    Decoder(const ModelArtifact& artifact) : artifact_(artifact), can_(artifact.profile != "flow") {
        can_options_.flag_optional = true;
        can_options_.label_hint = "Attack";
    }

    bool needs_header() const { return !can_ && !layout_; }
    void set_header(const std::string& line) { layout_ = flow_layout(line, artifact_.schema); }

    std::optional<std::vector<double>> decode(const std::string& line) const {
        std::vector<double> raw;
        if (can_) {
            std::optional<CanFrame> frame;
            try {
                frame = parse_can_line(line, can_options_);
            } catch (const InputError&) {
                return std::nullopt;
            }
            if (!frame) return std::nullopt;
            raw = encode_can_frame(*frame, artifact_.schema);
        } else {
            const auto cells = split_csv_line(line);
            if (cells.size() != layout_->columns) return std::nullopt;
            raw.reserve(layout_->source.size());
            for (std::size_t col : layout_->source) {
                const double v = parse_flow_cell(cells[col]);
                if (!std::isfinite(v)) return std::nullopt;
                raw.push_back(v);
            }
        }
        return artifact_.prepare_row(raw);
    }

private:
    const ModelArtifact& artifact_;
    bool can_;
    CanParseOptions can_options_;
    std::optional<FlowLayout> layout_;
};

} // namespace

std::string format_verdict(const Verdict& v) {
    char buf[96];
    std::snprintf(buf, sizeof buf, ",%.6f,%.3f", v.confidence, v.latency_us);
    return std::to_string(v.ordinal) + "," + v.predicted + buf;
}

std::string format_summary(const DetectSummary& s) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "# records=%zu parse_errors=%zu mean_us=%.3f p99_us=%.3f records_per_sec=%.1f",
                  s.records, s.parse_errors, s.mean_us, s.p99_us, s.records_per_sec);
    return buf;
}

DetectSummary detect_stream(const ModelArtifact& artifact, std::istream& in, std::ostream& out,
                            const DetectOptions& options) {
    if (artifact.profile != "flow" && artifact.profile != "can-numeric" && artifact.profile != "can-one-hot")
        throw SchemaError("artifact profile '" + artifact.profile + "' cannot be streamed");
    const std::size_t batch_size = std::max<std::size_t>(1, options.batch_size);
    const int threads = resolve_threads(options.threads);
    Decoder decoder(artifact);

    DetectSummary summary;
    LatencyHistogram latencies;
    std::vector<std::string> lines;
    std::vector<Verdict> verdicts;
    lines.reserve(batch_size);
    const auto started = Clock::now();

    const auto flush = [&] {
        verdicts.assign(lines.size(), Verdict{});
        parallel_for(lines.size(), threads, [&](std::size_t i) {
            const auto t0 = Clock::now();
            Verdict& v = verdicts[i];
            v.ordinal = summary.records + i;
            if (const auto row = decoder.decode(lines[i])) {
                const auto p = predict(artifact.model, *row);
                v.predicted = artifact.label_names[static_cast<std::size_t>(p.class_id)];
                v.confidence = p.distribution[static_cast<std::size_t>(p.class_id)];
            } else {
                v.predicted = kParseErrorClass;
            }
            v.latency_us = std::chrono::duration<double, std::micro>(Clock::now() - t0).count();
        });
        for (const auto& v : verdicts) {
            if (v.predicted == kParseErrorClass) ++summary.parse_errors;
            latencies.add(v.latency_us);
            out << format_verdict(v) << '\n';
        }
        summary.records += lines.size();
        lines.clear();
    };

    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (is_blank(line)) continue;
        if (decoder.needs_header()) {
            decoder.set_header(line);
            continue;
        }
        lines.push_back(line);
        if (lines.size() == batch_size) flush();
    }
    if (!lines.empty()) flush();

    const double wall = std::chrono::duration<double>(Clock::now() - started).count();
    if (latencies.count()) {
        summary.mean_us = latencies.mean();
        summary.p99_us = latencies.quantile(0.99);
        summary.records_per_sec = wall > 0.0 ? static_cast<double>(summary.records) / wall : 0.0;
    }
    out << format_summary(summary) << '\n';
    return summary;
}

} // namespace treeids
