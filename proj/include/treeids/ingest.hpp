#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "treeids/dataset.hpp"

namespace treeids {

// ---------------------------------------------------------------------------
// CAN frame logs
//
// One frame per line: timestamp,id,dlc,<dlc data bytes>,flag
// The id and data bytes are hex without a 0x prefix. Flag R marks a normal frame,
// T an injected one. Frames with dlc < 8 are padded with zero bytes.
// The whitespace-separated "Timestamp: ... ID: ... DLC: ..." layout used by the
// attack-free capture is accepted as well and is always labelled normal.
// ---------------------------------------------------------------------------

struct CanFrame {
    double timestamp = 0.0;
    std::uint16_t can_id = 0;
    std::uint8_t dlc = 0;
    std::array<std::uint8_t, 8> data{};
    std::string label;
};

struct CanParseOptions {
    /// Class assigned to T-flagged frames, e.g. "DoS" for the DoS capture.
    std::optional<std::string> label_hint;
    std::string normal_label = "Normal";
    /// Maximum fraction of malformed lines before parsing fails.
    double malformed_tolerance = 0.001;
    /// Allow frames without a trailing flag (detection streams). They are labelled normal.
    bool flag_optional = false;
};

struct CanParseResult {
    std::vector<CanFrame> frames;
    std::size_t lines = 0;
    std::size_t malformed = 0;
};

/// Parses one line. Returns nullopt for a malformed line.
std::optional<CanFrame> parse_can_line(std::string_view line, const CanParseOptions& options);

CanParseResult parse_can_csv(std::istream& in, const CanParseOptions& options);

enum class CanEncoding { numeric, one_hot_id };

inline constexpr std::string_view kCanIdFeature = "CAN ID";

/// numeric: "CAN ID", "DATA[0]".."DATA[7]".
/// one_hot_id: "DATA[0]".."DATA[7]" followed by one "CAN ID xxx" indicator per distinct id,
/// ascending, all in one-hot group 0.
Dataset encode_can_features(const std::vector<CanFrame>& frames, CanEncoding mode);

/// Encodes a single frame into a row laid out by `schema` (as produced by encode_can_features).
std::vector<double> encode_can_frame(const CanFrame& frame, const FeatureSchema& schema);

// ---------------------------------------------------------------------------
// Flow-feature CSV
// ---------------------------------------------------------------------------

inline constexpr std::size_t kFlowFeatureCount = 78;

struct FlowRecord {
    std::vector<double> features;
    std::string raw_label;
};

struct FlowTable {
    std::vector<std::string> feature_names;
    std::vector<FlowRecord> records;
};

struct FlowParseOptions {
    std::string label_column = "Label";
    /// Required feature column count; 0 accepts any width.
    std::size_t expected_features = kFlowFeatureCount;
};

/// Splits one CSV line, honouring double-quoted fields. Cells are trimmed.
std::vector<std::string> split_csv_line(std::string_view line);

/// Parses a numeric cell. Empty, NaN and infinite cells become NaN so that
/// drop_invalid_rows removes the row later.
double parse_flow_cell(std::string_view cell);

/// Header names are trimmed; a repeated name gets a ".1", ".2" ... suffix.
FlowTable parse_flow_csv(std::istream& in, const FlowParseOptions& options = {});

/// Appends `more` to `into`; both must carry the same header.
void append_flow_table(FlowTable& into, FlowTable&& more);

// ---------------------------------------------------------------------------
// Label consolidation
// ---------------------------------------------------------------------------

/// Ordered raw-label -> class rules. A pattern ending in '*' matches by prefix,
/// anything else must match exactly (after trimming). The first matching rule wins.
struct LabelMap {
    struct Rule {
        std::string pattern;
        std::string target;
    };
    std::vector<Rule> rules;

    std::optional<std::string> resolve(std::string_view raw) const;

    /// Reads `raw_label,consolidated_class` lines; blank lines and '#' comments are skipped.
    static LabelMap parse(std::istream& in);
    static LabelMap load(const std::string& path);
    /// Built-in table folding the CICIDS2017 raw labels into seven classes.
    static LabelMap cicids2017();
};

/// Maps raw labels to consolidated classes with dense ids in first-seen order.
Dataset consolidate_labels(const FlowTable& table, const LabelMap& map);

/// Column-schema for a flow table (all numeric).
FeatureSchema flow_schema(const FlowTable& table);

} // namespace treeids
