#include "treeids/commands.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "treeids/error.hpp"
#include "treeids/importance.hpp"
#include "treeids/ingest.hpp"
#include "treeids/rng.hpp"
#include "treeids/synthetic.hpp"

namespace treeids {
namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

constexpr int kPreparedVersion = 1;

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::ifstream open_input(const std::string& path) {
    if (!std::filesystem::exists(path)) throw InputError("no such file: '" + path + "'");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path + "'");
    return in;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write '" + path + "'");
    return out;
}

std::string fmt(double v, const char* format = "%.17g") {
    char buf[40];
    std::snprintf(buf, sizeof buf, format, v == 0.0 ? 0.0 : v);
    return buf;
}

// attack label for the injected frames of a capture file
std::pair<std::string, std::optional<std::string>> split_can_input(const std::string& spec) {
    const auto eq = spec.rfind('=');
    if (eq != std::string::npos && eq + 1 < spec.size()) return {spec.substr(0, eq), spec.substr(eq + 1)};
    const std::string name = lower(std::filesystem::path(spec).filename().string());
    if (name.find("dos") != std::string::npos) return {spec, "DoS"};
    if (name.find("fuzzy") != std::string::npos) return {spec, "Fuzzy"};
    if (name.find("gear") != std::string::npos) return {spec, "Gear"};
    if (name.find("rpm") != std::string::npos) return {spec, "RPM"};
    return {spec, std::nullopt};
}

PreparedData prepare_can(const PrepareOptions& o) {
    std::vector<CanFrame> frames;
    for (const auto& input : o.inputs) {
        const auto [path, hint] = split_can_input(input);
        auto in = open_input(path);
        CanParseOptions parse;
        parse.label_hint = hint;
        try {
            auto result = parse_can_csv(in, parse);
            frames.insert(frames.end(), std::make_move_iterator(result.frames.begin()),
                          std::make_move_iterator(result.frames.end()));
        } catch (const InputError& e) {
            throw InputError(path + ": " + e.what());
        }
    }
    if (frames.empty()) throw InputError("no CAN frames found in the inputs");
    PreparedData data;
    const bool one_hot = o.can_encoding == "one-hot";
    if (!one_hot && o.can_encoding != "numeric") throw InputError("unknown CAN encoding '" + o.can_encoding + "'");
    data.profile = one_hot ? "can-one-hot" : "can-numeric";
    data.dataset = encode_can_features(frames, one_hot ? CanEncoding::one_hot_id : CanEncoding::numeric);
    data.normal_label = "Normal";
    return data;
}

PreparedData prepare_flow(const PrepareOptions& o, std::ostream& out) {
    FlowTable table;
    FlowParseOptions parse;
    parse.label_column = o.label_column;
    parse.expected_features = o.flow_features;
    bool first = true;
    for (const auto& path : o.inputs) {
        auto in = open_input(path);
        FlowTable part;
        try {
            part = parse_flow_csv(in, parse);
        } catch (const InputError& e) {
            throw InputError(path + ": " + e.what());
        } catch (const SchemaError& e) {
            throw SchemaError(path + ": " + e.what());
        }
        if (first) {
            table = std::move(part);
            first = false;
        } else {
            append_flow_table(table, std::move(part));
        }
    }
    const LabelMap map = o.label_map ? LabelMap::load(*o.label_map) : LabelMap::cicids2017();
    auto labelled = consolidate_labels(table, map);
    auto cleaned = drop_invalid_rows(labelled);
    if (cleaned.removed) out << "removed " << cleaned.removed << " rows with missing or non-finite values\n";
    PreparedData data;
    data.profile = "flow";
    data.dataset = std::move(cleaned.dataset);
    data.normal_label = data.dataset.class_id("BENIGN") ? "BENIGN" : data.dataset.label_names().front();
    return data;
}

void print_class_counts(const Dataset& d, std::ostream& out) {
    const auto counts = d.class_counts();
    for (std::size_t c = 0; c < counts.size(); ++c) out << d.label_names()[c] << ',' << counts[c] << '\n';
    out << "total," << d.n_rows() << '\n';
}

Dataset relabel_to(const Dataset& d, const std::vector<std::string>& names) {
    std::vector<ClassId> map(d.n_classes());
    for (std::size_t c = 0; c < d.n_classes(); ++c) {
        const auto it = std::find(names.begin(), names.end(), d.label_names()[c]);
        if (it == names.end()) throw SchemaError("class '" + d.label_names()[c] + "' is unknown to the model");
        map[c] = static_cast<ClassId>(it - names.begin());
    }
    std::vector<ClassId> labels;
    labels.reserve(d.n_rows());
    for (ClassId l : d.labels()) labels.push_back(map[static_cast<std::size_t>(l)]);
    return Dataset(d.schema(), std::vector<double>(d.values().begin(), d.values().end()), std::move(labels), names);
}

Dataset normalized(const PreparedData& p) { return normalize(p.dataset, p.normalization); }

std::string profile_family(const std::string& profile) { return profile == "flow" ? "flow" : "can"; }

} // namespace

ClassId PreparedData::normal_class() const {
    const auto id = dataset.class_id(normal_label);
    if (!id) throw InputError("normal class '" + normal_label + "' missing from dataset");
    return *id;
}

ResampleMethod parse_resample_method(const std::string& text) {
    if (text == "none") return ResampleMethod::none;
    if (text == "random") return ResampleMethod::random;
    if (text == "smote") return ResampleMethod::smote;
    throw InputError("unknown oversampling method '" + text + "'");
}

void require_same_schema(const FeatureSchema& expected, const FeatureSchema& actual) {
    const std::size_t n = std::max(expected.size(), actual.size());
    for (std::size_t i = 0; i < n; ++i) {
        const std::string want = i < expected.size() ? expected.names[i] : "<none>";
        const std::string got = i < actual.size() ? actual.names[i] : "<none>";
        if (want != got)
            throw SchemaError("schema mismatch at feature " + std::to_string(i) + ": model expects '" + want +
                              "', data has '" + got + "'");
    }
}

// --- prepared dataset files ----------------------------------------------------

void save_prepared(const PreparedData& data, const std::string& path) {
    const Dataset& d = data.dataset;
    {
        auto out = open_output(path);
        for (const auto& name : d.schema().names) out << name << ',';
        out << "Label\n";
        std::string line;
        for (std::size_t i = 0; i < d.n_rows(); ++i) {
            line.clear();
            for (double v : d.row(i)) {
                line += fmt(v);
                line += ',';
            }
            line += d.label_names()[static_cast<std::size_t>(d.label(i))];
            line += '\n';
            out << line;
        }
        if (!out) throw InputError("failed writing '" + path + "'");
    }
    json kinds = json::array(), groups = json::array();
    for (std::size_t f = 0; f < d.n_features(); ++f) {
        kinds.push_back(d.schema().kinds[f] == FeatureKind::one_hot ? "one_hot" : "numeric");
        groups.push_back(d.schema().group_ids[f] ? json(*d.schema().group_ids[f]) : json(nullptr));
    }
    json degenerate = json::array();
    for (bool b : data.normalization.degenerate) degenerate.push_back(b);
    const auto counts = d.class_counts();
    json count_map = json::object();
    for (std::size_t c = 0; c < counts.size(); ++c) count_map[d.label_names()[c]] = counts[c];
    const json meta = {{"format_version", kPreparedVersion},
                       {"profile", data.profile},
                       {"normal_label", data.normal_label},
                       {"schema", {{"names", d.schema().names}, {"kinds", kinds}, {"groups", groups}}},
                       {"labels", d.label_names()},
                       {"normalization",
                        {{"min", data.normalization.mins}, {"max", data.normalization.maxs}, {"degenerate", degenerate}}},
                       {"class_counts", count_map},
                       {"rows", d.n_rows()}};
    auto out = open_output(path + ".meta.json");
    out << meta.dump(2) << '\n';
}

PreparedData load_prepared(const std::string& path) {
    json meta;
    {
        auto in = open_input(path + ".meta.json");
        try {
            meta = json::parse(in);
        } catch (const json::exception& e) {
            throw InputError(path + ".meta.json: " + e.what());
        }
    }
    PreparedData data;
    FeatureSchema schema;
    std::vector<std::string> labels;
    try {
        if (meta.at("format_version").get<int>() != kPreparedVersion)
            throw InputError(path + ": unsupported prepared-dataset version");
        data.profile = meta.at("profile").get<std::string>();
        data.normal_label = meta.at("normal_label").get<std::string>();
        schema.names = meta.at("schema").at("names").get<std::vector<std::string>>();
        for (const auto& k : meta.at("schema").at("kinds"))
            schema.kinds.push_back(k.get<std::string>() == "one_hot" ? FeatureKind::one_hot : FeatureKind::numeric);
        for (const auto& g : meta.at("schema").at("groups"))
            schema.group_ids.push_back(g.is_null() ? std::nullopt : std::optional<int>(g.get<int>()));
        labels = meta.at("labels").get<std::vector<std::string>>();
        data.normalization.mins = meta.at("normalization").at("min").get<std::vector<double>>();
        data.normalization.maxs = meta.at("normalization").at("max").get<std::vector<double>>();
        for (const auto& b : meta.at("normalization").at("degenerate")) data.normalization.degenerate.push_back(b.get<bool>());
    } catch (const json::exception& e) {
        throw InputError(path + ".meta.json: " + e.what());
    }
    schema.validate();

    std::unordered_map<std::string, ClassId> label_ids;
    for (std::size_t c = 0; c < labels.size(); ++c) label_ids.emplace(labels[c], static_cast<ClassId>(c));
    auto in = open_input(path);
    std::string line;
    if (!std::getline(in, line)) throw InputError(path + ": missing header");
    const std::size_t width = schema.size();
    std::vector<double> values;
    std::vector<ClassId> ids;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const char* p = line.data();
        const char* end = p + line.size();
        for (std::size_t f = 0; f < width; ++f) {
            double v = 0.0;
            const auto [next, ec] = std::from_chars(p, end, v);
            if (ec != std::errc() || next == end || *next != ',')
                throw InputError(path + ":" + std::to_string(line_no) + ": malformed value in column " + std::to_string(f + 1));
            values.push_back(v);
            p = next + 1;
        }
        const auto it = label_ids.find(std::string(p, end));
        if (it == label_ids.end())
            throw InputError(path + ":" + std::to_string(line_no) + ": unknown label '" + std::string(p, end) + "'");
        ids.push_back(it->second);
    }
    data.dataset = Dataset(std::move(schema), std::move(values), std::move(ids), std::move(labels));
    return data;
}

// --- commands -------------------------------------------------------------------

void cmd_prepare(const PrepareOptions& o, std::ostream& out, std::ostream& err) {
    if (o.inputs.empty()) throw InputError("no input files given");
    if (o.output.empty()) throw InputError("no output path given");
    PreparedData data;
    if (o.profile == "can") data = prepare_can(o);
    else if (o.profile == "flow") data = prepare_flow(o, out);
    else throw InputError("unknown profile '" + o.profile + "'");

    if (o.sample) data.dataset = stratified_sample(data.dataset, *o.sample, derive_seed(o.seed, "prepare-sample"));
    data.normalization = compute_min_max(data.dataset);
    save_prepared(data, o.output);
    print_class_counts(data.dataset, out);
    if (data.dataset.n_classes() < 2)
        err << "warning: only one class (" << data.dataset.label_names().front() << ") present; the data cannot train a classifier on its own\n";
}

ModelArtifact cmd_train(const TrainOptions& o, std::ostream& out) {
    const auto prepared = load_prepared(o.dataset);
    Dataset train = normalized(prepared);
    train.require_learnable();
    if (o.oversample != ResampleMethod::none) {
        const auto plan = equalizing_plan(train, o.oversample, o.target_ratio, o.smote_k, derive_seed(o.seed, "train-resample"));
        train = resample(train, plan, o.threads);
        out << "resampled to " << train.n_rows() << " rows\n";
    }

    ModelArtifact artifact;
    artifact.profile = prepared.profile;
    artifact.schema = prepared.dataset.schema();
    artifact.normalization = prepared.normalization;
    artifact.label_names = prepared.dataset.label_names();
    artifact.normal_label = prepared.normal_label;
    artifact.spec = o.spec;
    artifact.seed = o.seed;

    const auto started = Clock::now();
    if (o.feature_select) {
        ImportanceOptions io;
        io.spec = o.spec;
        const auto report = compute_importance(train, io, derive_seed(o.seed, "train-select"), o.threads);
        auto selected = select_features(report, o.fs_threshold);
        std::sort(selected.begin(), selected.end());
        out << "selected " << selected.size() << " of " << train.n_features() << " features:";
        for (std::size_t f : selected) out << " '" << train.schema().names[f] << "'";
        out << '\n';
        train = train.select_features(selected);
        artifact.selected_features = std::move(selected);
    }
    const auto fit_started = Clock::now();
    artifact.model = fit_model(o.spec, train, derive_seed(o.seed, "train-fit"), o.threads);
    const auto done = Clock::now();
    artifact.train_rows = train.n_rows();
    out << "trained " << to_string(o.spec.kind) << " on " << train.n_rows() << " rows x " << train.n_features()
        << " features in " << fmt(std::chrono::duration<double>(done - fit_started).count(), "%.3f") << " s";
    if (o.feature_select) out << " (" << fmt(std::chrono::duration<double>(done - started).count(), "%.3f") << " s with selection)";
    out << '\n';
    if (!o.output.empty()) {
        save_model(artifact, o.output);
        out << "model written to " << o.output << '\n';
    }
    return artifact;
}

void cmd_evaluate(const EvaluateOptions& o, std::ostream& out) {
    const auto prepared = load_prepared(o.dataset);
    if (o.artifact) {
        const auto artifact = load_model(*o.artifact);
        if (profile_family(artifact.profile) != profile_family(prepared.profile))
            throw SchemaError("model was trained on '" + artifact.profile + "' data, dataset is '" + prepared.profile + "'");
        require_same_schema(artifact.schema, prepared.dataset.schema());
        Dataset data = relabel_to(normalize(prepared.dataset, artifact.normalization), artifact.label_names);
        if (artifact.selected_features) data = data.select_features(*artifact.selected_features);
        ClassId normal = 0;
        if (artifact.normal_label) {
            const auto it = std::find(artifact.label_names.begin(), artifact.label_names.end(), *artifact.normal_label);
            normal = static_cast<ClassId>(it - artifact.label_names.begin());
        }
        const auto metrics = evaluate_model(artifact.model, data, normal, o.threads);
        out << format_metrics_table({{std::string(to_string(kind_of(artifact.model))), metrics}});
        return;
    }
    const Dataset data = normalized(prepared);
    CvOptions cv;
    cv.k = o.folds;
    cv.seed = o.seed;
    cv.resample = o.oversample;
    cv.target_ratio = o.target_ratio;
    cv.smote_k = o.smote_k;
    if (o.feature_select) cv.select_threshold = o.fs_threshold;
    cv.threads = o.threads;
    const auto report = cross_validate(o.spec, data, prepared.normal_class(), cv);
    std::vector<std::pair<std::string, MetricsReport>> rows;
    const std::string name(to_string(o.spec.kind));
    for (const auto& f : report.folds) rows.emplace_back(name + " fold " + std::to_string(f.fold + 1), f.metrics);
    rows.emplace_back(name + " mean", report.mean);
    rows.emplace_back(name + " pooled", report.pooled_metrics);
    out << format_metrics_table(rows);
}

void cmd_select_features(const SelectFeaturesOptions& o, std::ostream& out) {
    const auto prepared = load_prepared(o.dataset);
    const Dataset data = normalized(prepared);
    data.require_learnable();
    ImportanceOptions io;
    io.spec = o.spec;
    std::ostringstream table;
    if (!o.per_attack) {
        const auto report = compute_importance(data, io, derive_seed(o.seed, "select"), o.threads);
        const auto selected = select_features(report, o.fs_threshold);
        table << format_importance_table(report, data.schema());
        out << "selected " << selected.size() << " of " << data.n_features() << " features at threshold "
            << fmt(o.fs_threshold, "%g") << '\n';
        for (std::size_t i = 0; i < selected.size(); ++i)
            out << data.schema().names[selected[i]] << ',' << fmt(report.averaged[selected[i]], "%.6f") << '\n';
    } else {
        const ClassId normal = prepared.normal_class();
        const auto counts = data.class_counts();
        table << "label,feature,weight\n";
        out << "label,feature,weight\n";
        for (std::size_t c = 0; c < data.n_classes(); ++c) {
            if (static_cast<ClassId>(c) == normal || counts[c] == 0) continue;
            const auto ranked = per_attack_importance(data, static_cast<ClassId>(c), normal, io, o.seed, o.threads);
            for (std::size_t r = 0; r < ranked.size(); ++r) {
                const std::string row = data.label_names()[c] + "," + data.schema().names[ranked[r].first] + "," +
                                        fmt(ranked[r].second, "%.6f") + "\n";
                table << row;
                if (r < o.top) out << row;
            }
        }
    }
    if (o.output) {
        auto file = open_output(*o.output);
        file << table.str();
    } else if (!o.per_attack) {
        out << table.str();
    }
}

DetectSummary cmd_detect(const DetectCommandOptions& o, std::ostream& out) {
    const auto artifact = load_model(o.artifact);
    if (o.profile && *o.profile != profile_family(artifact.profile))
        throw SchemaError("model was trained on '" + artifact.profile + "' data, stream profile is '" + *o.profile + "'");
    DetectOptions d;
    d.batch_size = o.batch_size;
    d.threads = o.threads;
    if (o.input == "-") return detect_stream(artifact, std::cin, out, d);
    auto in = open_input(o.input);
    return detect_stream(artifact, in, out, d);
}

GridSearchResult cmd_grid_search(const GridSearchOptions& o, std::ostream& out) {
    const auto prepared = load_prepared(o.dataset);
    const Dataset data = normalized(prepared);
    CvOptions cv;
    cv.k = o.folds;
    cv.seed = o.seed;
    cv.threads = o.threads;
    const auto result = grid_search(o.spec, data, prepared.normal_class(), o.trees, o.depths, cv, o.tolerance);
    out << "trees,depth,accuracy,seconds\n";
    for (const auto& p : result.evaluated)
        out << p.trees << ',' << p.depth << ',' << fmt(p.accuracy, "%.6f") << ',' << fmt(p.seconds, "%.3f") << '\n';
    out << "chosen trees=" << result.chosen_trees << " depth=" << result.chosen_depth
        << " accuracy=" << fmt(result.chosen_accuracy, "%.6f")
        << " stop=" << (result.stop_reason == GridStop::accuracy_drop ? "accuracy_drop" : "exhausted") << '\n';
    return result;
}

void cmd_generate_can(const GenerateCanOptions& o, std::ostream& out) {
    SyntheticCanOptions so;
    so.frames = o.frames;
    so.attack_share = o.attack_share;
    so.seed = o.seed;
    const auto frames = generate_can_frames(so);
    // mirror the public capture layout: one file per attack, normal traffic spread across all
    const char* files[] = {"normal_run_data.csv", "DoS_dataset.csv", "Fuzzy_dataset.csv", "gear_dataset.csv", "RPM_dataset.csv"};
    std::filesystem::create_directories(o.output_dir);
    std::vector<std::vector<CanFrame>> parts(5);
    std::size_t normals = 0;
    for (const auto& f : frames) {
        std::size_t idx = 0;
        for (std::size_t c = 1; c < 5; ++c) {
            if (f.label == kSyntheticLabels[c]) idx = c;
        }
        if (idx == 0) idx = normals++ % 5;
        parts[idx].push_back(f);
    }
    for (std::size_t i = 0; i < 5; ++i) {
        const auto path = (std::filesystem::path(o.output_dir) / files[i]).string();
        auto file = open_output(path);
        write_can_csv(parts[i], file);
        out << path << ',' << parts[i].size() << '\n';
    }
}

} // namespace treeids
