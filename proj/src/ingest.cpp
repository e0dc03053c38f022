#include "treeids/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "treeids/error.hpp"

namespace treeids {
namespace {

std::string_view trim(std::string_view s) {
    const auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
    while (!s.empty() && ws(s.front())) s.remove_prefix(1);
    while (!s.empty() && ws(s.back())) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_on(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::vector<std::string_view> split_whitespace(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        const std::size_t start = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

std::optional<unsigned> parse_hex(std::string_view token, unsigned max_value) {
    if (token.empty() || token.size() > 8) return std::nullopt;
    unsigned value = 0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value, 16);
    if (ec != std::errc{} || ptr != token.data() + token.size() || value > max_value) return std::nullopt;
    return value;
}

std::optional<double> parse_double(std::string_view token) {
    if (token.empty()) return std::nullopt;
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size()) return std::nullopt;
    return value;
}

std::optional<CanFrame> parse_text_log_line(std::string_view line, const CanParseOptions& options) {
    const auto tokens = split_whitespace(line);
    CanFrame frame;
    std::size_t i = 0;
    if (tokens.size() < 2 || tokens[0] != "Timestamp:") return std::nullopt;
    const auto ts = parse_double(tokens[1]);
    if (!ts) return std::nullopt;
    frame.timestamp = *ts;
    for (i = 2; i < tokens.size() && tokens[i] != "ID:"; ++i) {}
    if (i + 1 >= tokens.size()) return std::nullopt;
    const auto id = parse_hex(tokens[i + 1], 0x7FF);
    if (!id) return std::nullopt;
    frame.can_id = static_cast<std::uint16_t>(*id);
    for (; i < tokens.size() && tokens[i] != "DLC:"; ++i) {}
    if (i + 1 >= tokens.size()) return std::nullopt;
    const auto dlc = parse_hex(tokens[i + 1], 8);
    if (!dlc) return std::nullopt;
    frame.dlc = static_cast<std::uint8_t>(*dlc);
    if (tokens.size() != i + 2 + frame.dlc) return std::nullopt;
    for (unsigned b = 0; b < frame.dlc; ++b) {
        const auto byte = parse_hex(tokens[i + 2 + b], 0xFF);
        if (!byte) return std::nullopt;
        frame.data[b] = static_cast<std::uint8_t>(*byte);
    }
    frame.label = options.normal_label;
    return frame;
}

bool is_header_line(std::string_view line) {
    return line.size() >= 10 && (line.starts_with("Timestamp,") || line.starts_with("timestamp,"));
}

const std::string kDataNames[8] = {"DATA[0]", "DATA[1]", "DATA[2]", "DATA[3]",
                                   "DATA[4]", "DATA[5]", "DATA[6]", "DATA[7]"};

std::string one_hot_id_name(unsigned id) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "CAN ID %04X", id);
    return buf;
}

} // namespace

std::optional<CanFrame> parse_can_line(std::string_view line, const CanParseOptions& options) {
    line = trim(line);
    if (line.starts_with("Timestamp:")) return parse_text_log_line(line, options);

    const auto tokens = split_on(line, ',');
    if (tokens.size() < 3) return std::nullopt;
    CanFrame frame;
    const auto ts = parse_double(tokens[0]);
    const auto id = parse_hex(tokens[1], 0x7FF);
    const auto dlc = parse_hex(tokens[2], 8);
    if (!ts || !id || !dlc || tokens[2].size() > 2) return std::nullopt;
    frame.timestamp = *ts;
    frame.can_id = static_cast<std::uint16_t>(*id);
    frame.dlc = static_cast<std::uint8_t>(*dlc);

    const std::size_t with_flag = 3 + frame.dlc + 1;
    const bool has_flag = tokens.size() == with_flag;
    if (!has_flag && !(options.flag_optional && tokens.size() == with_flag - 1)) return std::nullopt;
    for (unsigned b = 0; b < frame.dlc; ++b) {
        const auto byte = parse_hex(tokens[3 + b], 0xFF);
        if (!byte || tokens[3 + b].size() > 2) return std::nullopt;
        frame.data[b] = static_cast<std::uint8_t>(*byte);
    }
    if (!has_flag) {
        frame.label = options.normal_label;
        return frame;
    }
    const auto flag = tokens.back();
    if (flag == "R") {
        frame.label = options.normal_label;
    } else if (flag == "T") {
        if (!options.label_hint) {
            if (!options.flag_optional) throw InputError("injected frame (flag T) but no attack label was given for this file");
            frame.label = "Attack";
        } else {
            frame.label = *options.label_hint;
        }
    } else {
        return std::nullopt;
    }
    return frame;
}

CanParseResult parse_can_csv(std::istream& in, const CanParseOptions& options) {
    CanParseResult result;
    std::string line;
    std::size_t line_no = 0;
    std::size_t first_bad = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto body = trim(line);
        if (body.empty()) continue;
        if (line_no == 1 && is_header_line(body)) continue;
        ++result.lines;
        if (auto frame = parse_can_line(body, options)) {
            result.frames.push_back(std::move(*frame));
        } else {
            if (result.malformed == 0) first_bad = line_no;
            ++result.malformed;
        }
    }
    if (static_cast<double>(result.malformed) > options.malformed_tolerance * static_cast<double>(result.lines)) {
        throw InputError(std::to_string(result.malformed) + " malformed CAN lines out of " +
                         std::to_string(result.lines) + " (first at line " + std::to_string(first_bad) + ")");
    }
    return result;
}

Dataset encode_can_features(const std::vector<CanFrame>& frames, CanEncoding mode) {
    if (frames.empty()) throw InputError("no CAN frames to encode");

    std::vector<std::string> label_names;
    std::unordered_map<std::string, ClassId> label_ids;
    std::vector<ClassId> labels;
    labels.reserve(frames.size());
    for (const auto& frame : frames) {
        auto [it, inserted] = label_ids.try_emplace(frame.label, static_cast<ClassId>(label_names.size()));
        if (inserted) label_names.push_back(frame.label);
        labels.push_back(it->second);
    }

    FeatureSchema schema;
    std::vector<double> values;
    if (mode == CanEncoding::numeric) {
        std::vector<std::string> names{std::string(kCanIdFeature)};
        names.insert(names.end(), std::begin(kDataNames), std::end(kDataNames));
        schema = FeatureSchema::numeric(std::move(names));
        values.reserve(frames.size() * 9);
        for (const auto& frame : frames) {
            values.push_back(frame.can_id);
            for (auto byte : frame.data) values.push_back(byte);
        }
    } else {
        std::set<unsigned> ids;
        for (const auto& frame : frames) ids.insert(frame.can_id);
        schema = FeatureSchema::numeric({std::begin(kDataNames), std::end(kDataNames)});
        std::map<unsigned, std::size_t> column;
        for (unsigned id : ids) {
            column[id] = schema.names.size();
            schema.names.push_back(one_hot_id_name(id));
            schema.kinds.push_back(FeatureKind::one_hot);
            schema.group_ids.emplace_back(0);
        }
        const std::size_t width = schema.size();
        values.assign(frames.size() * width, 0.0);
        for (std::size_t i = 0; i < frames.size(); ++i) {
            double* row = values.data() + i * width;
            for (std::size_t b = 0; b < 8; ++b) row[b] = frames[i].data[b];
            row[column[frames[i].can_id]] = 1.0;
        }
    }
    return Dataset(std::move(schema), std::move(values), std::move(labels), std::move(label_names));
}

std::vector<double> encode_can_frame(const CanFrame& frame, const FeatureSchema& schema) {
    std::vector<double> row(schema.size(), 0.0);
    const std::string own_id = one_hot_id_name(frame.can_id);
    for (std::size_t f = 0; f < schema.size(); ++f) {
        const std::string& name = schema.names[f];
        if (name == kCanIdFeature) {
            row[f] = frame.can_id;
        } else if (name.size() == 7 && name.starts_with("DATA[") && name[6] == ']' && name[5] >= '0' && name[5] <= '7') {
            row[f] = frame.data[static_cast<std::size_t>(name[5] - '0')];
        } else if (name.starts_with("CAN ID ")) {
            row[f] = name == own_id ? 1.0 : 0.0;
        } else {
            throw SchemaError("feature '" + name + "' cannot be derived from a CAN frame");
        }
    }
    return row;
}

std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cell += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cell += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.emplace_back(trim(cell));
            cell.clear();
        } else {
            cell += c;
        }
    }
    cells.emplace_back(trim(cell));
    return cells;
}

double parse_flow_cell(std::string_view cell) {
    cell = trim(cell);
    if (const auto v = parse_double(cell); v && std::isfinite(*v)) return *v;
    return std::numeric_limits<double>::quiet_NaN();
}

FlowTable parse_flow_csv(std::istream& in, const FlowParseOptions& options) {
    std::string line;
    if (!std::getline(in, line) || trim(line).empty()) throw InputError("flow CSV has no header row");
    // A UTF-8 byte-order mark would otherwise stick to the first column name.
    if (line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
    const auto header = split_csv_line(line);
    const auto label_it = std::find(header.begin(), header.end(), options.label_column);
    if (label_it == header.end()) throw InputError("flow CSV header has no '" + options.label_column + "' column");
    const auto label_col = static_cast<std::size_t>(label_it - header.begin());

    FlowTable table;
    std::unordered_map<std::string, int> repeats;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c == label_col) continue;
        std::string name = header[c];
        if (name.empty()) throw InputError("flow CSV header column " + std::to_string(c + 1) + " is empty");
        if (const int n = repeats[name]++; n > 0) name += "." + std::to_string(n);
        table.feature_names.push_back(std::move(name));
    }
    if (options.expected_features != 0 && table.feature_names.size() != options.expected_features) {
        throw InputError("flow CSV has " + std::to_string(table.feature_names.size()) + " feature columns, expected " +
                         std::to_string(options.expected_features));
    }

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            throw InputError("flow CSV line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                             " columns, header has " + std::to_string(header.size()));
        }
        FlowRecord record;
        record.features.reserve(table.feature_names.size());
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (c == label_col) {
                record.raw_label = std::move(cells[c]);
            } else {
                record.features.push_back(parse_flow_cell(cells[c]));
            }
        }
        table.records.push_back(std::move(record));
    }
    return table;
}

void append_flow_table(FlowTable& into, FlowTable&& more) {
    if (into.feature_names.empty() && into.records.empty()) {
        into = std::move(more);
        return;
    }
    if (into.feature_names != more.feature_names) throw InputError("flow CSV files have different headers");
    into.records.insert(into.records.end(), std::make_move_iterator(more.records.begin()),
                        std::make_move_iterator(more.records.end()));
}

std::optional<std::string> LabelMap::resolve(std::string_view raw) const {
    raw = trim(raw);
    for (const auto& rule : rules) {
        if (!rule.pattern.empty() && rule.pattern.back() == '*') {
            if (raw.starts_with(std::string_view(rule.pattern).substr(0, rule.pattern.size() - 1))) return rule.target;
        } else if (raw == rule.pattern) {
            return rule.target;
        }
    }
    return std::nullopt;
}

LabelMap LabelMap::parse(std::istream& in) {
    LabelMap map;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto body = trim(line);
        if (body.empty() || body.front() == '#') continue;
        const auto comma = body.rfind(',');
        if (comma == std::string_view::npos)
            throw InputError("label map line " + std::to_string(line_no) + ": expected raw_label,class");
        Rule rule{std::string(trim(body.substr(0, comma))), std::string(trim(body.substr(comma + 1)))};
        if (rule.pattern.empty() || rule.target.empty())
            throw InputError("label map line " + std::to_string(line_no) + ": empty field");
        map.rules.push_back(std::move(rule));
    }
    return map;
}

LabelMap LabelMap::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open label map '" + path + "'");
    return parse(in);
}

LabelMap LabelMap::cicids2017() {
    std::istringstream table(R"(BENIGN,BENIGN
DoS Hulk,DoS
DoS GoldenEye,DoS
DoS slowloris,DoS
DoS Slowhttptest,DoS
DDoS,DoS
Heartbleed,DoS
PortScan,Port-Scan
FTP-Patator,Brute-Force
SSH-Patator,Brute-Force
Web Attack*,Web-Attack
Bot,Botnet
Infiltration,Infiltration
)");
    return parse(table);
}

Dataset consolidate_labels(const FlowTable& table, const LabelMap& map) {
    std::vector<std::string> label_names;
    std::unordered_map<std::string, ClassId> ids;
    std::unordered_map<std::string, std::string> cache;
    std::vector<ClassId> labels;
    std::vector<double> values;
    labels.reserve(table.records.size());
    values.reserve(table.records.size() * table.feature_names.size());
    for (const auto& record : table.records) {
        auto cached = cache.find(record.raw_label);
        if (cached == cache.end()) {
            const auto target = map.resolve(record.raw_label);
            if (!target) throw InputError("raw label '" + record.raw_label + "' matches no label-map rule");
            cached = cache.emplace(record.raw_label, *target).first;
        }
        auto [it, inserted] = ids.try_emplace(cached->second, static_cast<ClassId>(label_names.size()));
        if (inserted) label_names.push_back(cached->second);
        labels.push_back(it->second);
        if (record.features.size() != table.feature_names.size()) throw InvariantError("flow record width mismatch");
        values.insert(values.end(), record.features.begin(), record.features.end());
    }
    return Dataset(flow_schema(table), std::move(values), std::move(labels), std::move(label_names));
}

FeatureSchema flow_schema(const FlowTable& table) { return FeatureSchema::numeric(table.feature_names); }

} // namespace treeids
