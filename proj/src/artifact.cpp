#include "treeids/artifact.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "treeids/error.hpp"

namespace treeids {
namespace {

using json = nlohmann::json;

// --- canonical writer -------------------------------------------------------

void write_number(double v, std::string& out) {
    if (v == 0.0) {
        out += '0';
        return;
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
}

bool is_scalar_array(const json& j) {
    for (const auto& e : j) {
        if (e.is_structured()) return false;
    }
    return true;
}

void write_canonical(const json& j, std::string& out, int indent) {
    const auto newline = [&](int level) {
        out += '\n';
        out.append(static_cast<std::size_t>(level) * 2, ' ');
    };
    switch (j.type()) {
    case json::value_t::object: {
        if (j.empty()) {
            out += "{}";
            return;
        }
        out += '{';
        bool first = true;
        for (const auto& [key, value] : j.items()) {
            if (!first) out += ',';
            first = false;
            newline(indent + 1);
            out += json(key).dump();
            out += ": ";
            write_canonical(value, out, indent + 1);
        }
        newline(indent);
        out += '}';
        return;
    }
    case json::value_t::array: {
        out += '[';
        const bool inline_array = is_scalar_array(j);
        bool first = true;
        for (const auto& e : j) {
            if (!first) out += inline_array ? ", " : ",";
            first = false;
            if (!inline_array) newline(indent + 1);
            write_canonical(e, out, indent + 1);
        }
        if (!inline_array && !j.empty()) newline(indent);
        out += ']';
        return;
    }
    case json::value_t::number_float: write_number(j.get<double>(), out); return;
    case json::value_t::string: out += j.dump(-1, ' ', false, json::error_handler_t::replace); return;
    default: out += j.dump(); return;
    }
}

std::string canonical(const json& j) {
    std::string out;
    write_canonical(j, out, 0);
    out += '\n';
    return out;
}

// --- enums ------------------------------------------------------------------

const char* criterion_name(Criterion c) { return c == Criterion::gini ? "gini" : "entropy"; }
Criterion parse_criterion(const std::string& s) {
    if (s == "gini") return Criterion::gini;
    if (s == "entropy") return Criterion::entropy;
    throw InputError("unknown criterion '" + s + "'");
}

const char* max_features_mode(MaxFeatures::Mode m) {
    switch (m) {
    case MaxFeatures::Mode::all: return "all";
    case MaxFeatures::Mode::sqrt: return "sqrt";
    case MaxFeatures::Mode::fixed: return "fixed";
    }
    return "all";
}

json max_features_json(const MaxFeatures& m) { return {{"mode", max_features_mode(m.mode)}, {"count", m.count}}; }
MaxFeatures max_features_from(const json& j) {
    const auto mode = j.at("mode").get<std::string>();
    MaxFeatures m;
    m.count = j.at("count").get<std::size_t>();
    if (mode == "all") m.mode = MaxFeatures::Mode::all;
    else if (mode == "sqrt") m.mode = MaxFeatures::Mode::sqrt;
    else if (mode == "fixed") m.mode = MaxFeatures::Mode::fixed;
    else throw InputError("unknown max_features mode '" + mode + "'");
    return m;
}

// --- params -----------------------------------------------------------------

json tree_params_json(const TreeParams& p) {
    return {{"max_depth", p.max_depth},
            {"min_samples_split", p.min_samples_split},
            {"min_samples_leaf", p.min_samples_leaf},
            {"criterion", criterion_name(p.criterion)},
            {"max_features", max_features_json(p.max_features)},
            {"split_mode", p.split_mode == SplitMode::exact ? "exact" : "random_threshold"},
            {"seed", p.seed}};
}

TreeParams tree_params_from(const json& j) {
    TreeParams p;
    p.max_depth = j.at("max_depth").get<int>();
    p.min_samples_split = j.at("min_samples_split").get<std::size_t>();
    p.min_samples_leaf = j.at("min_samples_leaf").get<std::size_t>();
    p.criterion = parse_criterion(j.at("criterion").get<std::string>());
    p.max_features = max_features_from(j.at("max_features"));
    const auto mode = j.at("split_mode").get<std::string>();
    if (mode == "exact") p.split_mode = SplitMode::exact;
    else if (mode == "random_threshold") p.split_mode = SplitMode::random_threshold;
    else throw InputError("unknown split mode '" + mode + "'");
    p.seed = j.at("seed").get<std::uint64_t>();
    return p;
}

json boost_params_json(const BoostParams& p) {
    return {{"rounds", p.rounds},   {"max_depth", p.max_depth},         {"lambda", p.lambda},
            {"gamma", p.gamma},     {"learning_rate", p.learning_rate}, {"class_count", p.class_count},
            {"seed", p.seed}};
}

BoostParams boost_params_from(const json& j) {
    BoostParams p;
    p.rounds = j.at("rounds").get<std::size_t>();
    p.max_depth = j.at("max_depth").get<int>();
    p.lambda = j.at("lambda").get<double>();
    p.gamma = j.at("gamma").get<double>();
    p.learning_rate = j.at("learning_rate").get<double>();
    p.class_count = j.at("class_count").get<std::size_t>();
    p.seed = j.at("seed").get<std::uint64_t>();
    return p;
}

json spec_json(const ModelSpec& s) {
    json bases = json::array();
    for (auto k : s.stack_bases) bases.push_back(std::string(to_string(k)));
    return {{"kind", std::string(to_string(s.kind))},
            {"n_trees", s.n_trees},
            {"tree", tree_params_json(s.tree)},
            {"lambda", s.lambda},
            {"gamma", s.gamma},
            {"learning_rate", s.learning_rate},
            {"stack_bases", bases},
            {"stack_meta", std::string(to_string(s.stack_meta))},
            {"stack_folds", s.stack_folds}};
}

ModelSpec spec_from(const json& j) {
    ModelSpec s;
    s.kind = parse_model_kind(j.at("kind").get<std::string>());
    s.n_trees = j.at("n_trees").get<std::size_t>();
    s.tree = tree_params_from(j.at("tree"));
    s.lambda = j.at("lambda").get<double>();
    s.gamma = j.at("gamma").get<double>();
    s.learning_rate = j.at("learning_rate").get<double>();
    s.stack_bases.clear();
    for (const auto& b : j.at("stack_bases")) s.stack_bases.push_back(parse_model_kind(b.get<std::string>()));
    s.stack_meta = parse_model_kind(j.at("stack_meta").get<std::string>());
    s.stack_folds = j.at("stack_folds").get<std::size_t>();
    return s;
}

// --- trees ------------------------------------------------------------------

json node_json(const DecisionTree& tree, std::size_t index) {
    const auto& n = tree.nodes[index];
    json j = {{"samples", n.samples}, {"impurity", n.impurity}};
    if (!n.is_leaf()) {
        j["feature"] = n.feature;
        j["threshold"] = n.threshold;
        j["gain"] = n.gain;
        j["left"] = node_json(tree, static_cast<std::size_t>(n.left));
        j["right"] = node_json(tree, static_cast<std::size_t>(n.right));
    } else if (tree.task == TreeTask::boosting) {
        j["weight"] = n.weight;
    } else {
        j["counts"] = n.class_counts;
        j["class"] = n.predicted_class;
    }
    return j;
}

std::int32_t append_node(DecisionTree& tree, const json& j, std::size_t depth) {
    if (depth > static_cast<std::size_t>(TreeParams::kUnboundedDepth)) throw InputError("tree nesting too deep");
    const auto index = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    TreeNode node;
    node.samples = j.at("samples").get<std::size_t>();
    node.impurity = j.at("impurity").get<double>();
    if (j.contains("feature")) {
        node.feature = j.at("feature").get<std::int32_t>();
        if (node.feature < 0 || static_cast<std::size_t>(node.feature) >= tree.n_features)
            throw InputError("split feature out of range in model file");
        node.threshold = j.at("threshold").get<double>();
        node.gain = j.at("gain").get<double>();
        node.left = append_node(tree, j.at("left"), depth + 1);
        node.right = append_node(tree, j.at("right"), depth + 1);
    } else if (tree.task == TreeTask::boosting) {
        node.weight = j.at("weight").get<double>();
    } else {
        node.class_counts = j.at("counts").get<std::vector<std::uint32_t>>();
        node.predicted_class = j.at("class").get<ClassId>();
        if (node.class_counts.size() != tree.n_classes || node.predicted_class < 0 ||
            static_cast<std::size_t>(node.predicted_class) >= tree.n_classes)
            throw InputError("leaf class data inconsistent in model file");
    }
    tree.nodes[static_cast<std::size_t>(index)] = std::move(node);
    return index;
}

json tree_json(const DecisionTree& t) {
    return {{"type", "tree"},
            {"task", t.task == TreeTask::boosting ? "boosting" : "classification"},
            {"split_rule", "x <= threshold goes left"},
            {"n_features", t.n_features},
            {"n_classes", t.n_classes},
            {"schema_fingerprint", t.schema_fingerprint},
            {"params", tree_params_json(t.params)},
            {"root", node_json(t, 0)}};
}

DecisionTree tree_from(const json& j) {
    DecisionTree t;
    t.task = j.at("task").get<std::string>() == "boosting" ? TreeTask::boosting : TreeTask::classification;
    t.n_features = j.at("n_features").get<std::size_t>();
    t.n_classes = j.at("n_classes").get<std::size_t>();
    t.schema_fingerprint = j.at("schema_fingerprint").get<std::uint64_t>();
    t.params = tree_params_from(j.at("params"));
    append_node(t, j.at("root"), 0);
    return t;
}

// --- models -----------------------------------------------------------------

json base_json(const BaseModel& model);

json forest_json(const ForestModel& f) {
    json trees = json::array();
    for (const auto& t : f.trees) trees.push_back(tree_json(t));
    return {{"type", "forest"},
            {"kind", f.kind == ForestKind::random_forest ? "rf" : "et"},
            {"bootstrap", f.bootstrap},
            {"max_features", max_features_json(f.max_features)},
            {"seed", f.seed},
            {"n_features", f.n_features},
            {"n_classes", f.n_classes},
            {"trees", trees}};
}

json boost_json(const BoostedModel& m) {
    json stages = json::array();
    for (const auto& stage : m.stages) {
        json s = json::array();
        for (const auto& t : stage) s.push_back(tree_json(t));
        stages.push_back(s);
    }
    return {{"type", "boost"},
            {"params", boost_params_json(m.params)},
            {"base_score", m.base_score},
            {"n_features", m.n_features},
            {"n_classes", m.n_classes},
            {"stages", stages}};
}

json base_json(const BaseModel& model) {
    return std::visit(
        [](const auto& m) -> json {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, DecisionTree>) return tree_json(m);
            else if constexpr (std::is_same_v<T, ForestModel>) return forest_json(m);
            else return boost_json(m);
        },
        model);
}

json model_json(const Model& model) {
    if (const auto* s = std::get_if<StackingModel>(&model)) {
        json bases = json::array();
        for (const auto& b : s->base_models) bases.push_back(base_json(b));
        return {{"type", "stacking"},
                {"folds", s->oof_fold_count},
                {"offsets", s->meta_input_offsets},
                {"n_features", s->n_features},
                {"n_classes", s->n_classes},
                {"base", bases},
                {"meta", base_json(s->meta_model)}};
    }
    return std::visit(
        [](const auto& m) -> json {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, DecisionTree>) return tree_json(m);
            else if constexpr (std::is_same_v<T, ForestModel>) return forest_json(m);
            else if constexpr (std::is_same_v<T, BoostedModel>) return boost_json(m);
            else return {};
        },
        model);
}

BaseModel base_from(const json& j) {
    const auto type = j.at("type").get<std::string>();
    if (type == "tree") return tree_from(j);
    if (type == "forest") {
        ForestModel f;
        f.kind = j.at("kind").get<std::string>() == "rf" ? ForestKind::random_forest : ForestKind::extra_trees;
        f.bootstrap = j.at("bootstrap").get<bool>();
        f.max_features = max_features_from(j.at("max_features"));
        f.seed = j.at("seed").get<std::uint64_t>();
        f.n_features = j.at("n_features").get<std::size_t>();
        f.n_classes = j.at("n_classes").get<std::size_t>();
        for (const auto& t : j.at("trees")) f.trees.push_back(tree_from(t));
        if (f.trees.empty()) throw InputError("forest without trees in model file");
        return f;
    }
    if (type == "boost") {
        BoostedModel m;
        m.params = boost_params_from(j.at("params"));
        m.base_score = j.at("base_score").get<std::vector<double>>();
        m.n_features = j.at("n_features").get<std::size_t>();
        m.n_classes = j.at("n_classes").get<std::size_t>();
        for (const auto& stage : j.at("stages")) {
            auto& s = m.stages.emplace_back();
            for (const auto& t : stage) s.push_back(tree_from(t));
            if (s.size() != m.n_classes) throw InputError("boosting stage width mismatch in model file");
        }
        if (m.base_score.size() != m.n_classes) throw InputError("boosting base score width mismatch");
        return m;
    }
    throw InputError("unknown model type '" + type + "'");
}

Model model_from(const json& j) {
    if (j.at("type").get<std::string>() == "stacking") {
        StackingModel s;
        s.oof_fold_count = j.at("folds").get<std::size_t>();
        s.meta_input_offsets = j.at("offsets").get<std::vector<std::size_t>>();
        s.n_features = j.at("n_features").get<std::size_t>();
        s.n_classes = j.at("n_classes").get<std::size_t>();
        for (const auto& b : j.at("base")) s.base_models.push_back(base_from(b));
        s.meta_model = base_from(j.at("meta"));
        if (s.meta_input_offsets.size() != s.base_models.size()) throw InputError("stacking layout mismatch");
        return s;
    }
    return std::visit([](auto&& m) -> Model { return std::move(m); }, base_from(j));
}

const char* kind_name(FeatureKind k) { return k == FeatureKind::one_hot ? "one_hot" : "numeric"; }

} // namespace

std::vector<double> ModelArtifact::prepare_row(std::span<const double> raw) const {
    if (raw.size() != schema.size())
        throw SchemaError("record has " + std::to_string(raw.size()) + " features, model schema has " +
                          std::to_string(schema.size()));
    std::vector<double> row(raw.begin(), raw.end());
    normalize_row(row, schema, normalization);
    if (!selected_features) return row;
    std::vector<double> picked;
    picked.reserve(selected_features->size());
    for (std::size_t f : *selected_features) picked.push_back(row[f]);
    return picked;
}

std::string serialize_model(const Model& model) { return canonical(model_json(model)); }

std::string serialize_artifact(const ModelArtifact& a) {
    json kinds = json::array();
    json groups = json::array();
    for (std::size_t i = 0; i < a.schema.size(); ++i) {
        kinds.push_back(kind_name(a.schema.kinds[i]));
        groups.push_back(a.schema.group_ids[i] ? json(*a.schema.group_ids[i]) : json(nullptr));
    }
    json degenerate = json::array();
    for (bool d : a.normalization.degenerate) degenerate.push_back(d);
    json root = {
        {"format_version", a.format_version},
        {"profile", a.profile},
        {"schema", {{"names", a.schema.names}, {"kinds", kinds}, {"groups", groups}}},
        {"normalization", {{"min", a.normalization.mins}, {"max", a.normalization.maxs}, {"degenerate", degenerate}}},
        {"labels", a.label_names},
        {"normal_label", a.normal_label ? json(*a.normal_label) : json(nullptr)},
        {"selected_features", a.selected_features ? json(*a.selected_features) : json(nullptr)},
        {"metadata", {{"seed", a.seed}, {"train_rows", a.train_rows}, {"spec", spec_json(a.spec)}}},
        {"model", model_json(a.model)},
    };
    return canonical(root);
}

ModelArtifact parse_artifact(std::string_view text) {
    json root;
    try {
        root = json::parse(text.begin(), text.end());
    } catch (const json::exception& e) {
        throw InputError(std::string("corrupt model file: ") + e.what());
    }
    try {
        ModelArtifact a;
        a.format_version = root.at("format_version").get<int>();
        if (a.format_version != ModelArtifact::kFormatVersion)
            throw InputError("model format version " + std::to_string(a.format_version) + " is not supported (expected " +
                             std::to_string(ModelArtifact::kFormatVersion) + ")");
        a.profile = root.at("profile").get<std::string>();
        const auto& schema = root.at("schema");
        a.schema.names = schema.at("names").get<std::vector<std::string>>();
        for (const auto& k : schema.at("kinds"))
            a.schema.kinds.push_back(k.get<std::string>() == "one_hot" ? FeatureKind::one_hot : FeatureKind::numeric);
        for (const auto& g : schema.at("groups"))
            a.schema.group_ids.push_back(g.is_null() ? std::nullopt : std::optional<int>(g.get<int>()));
        a.schema.validate();
        const auto& norm = root.at("normalization");
        a.normalization.mins = norm.at("min").get<std::vector<double>>();
        a.normalization.maxs = norm.at("max").get<std::vector<double>>();
        for (const auto& d : norm.at("degenerate")) a.normalization.degenerate.push_back(d.get<bool>());
        if (a.normalization.size() != a.schema.size() || a.normalization.maxs.size() != a.schema.size() ||
            a.normalization.degenerate.size() != a.schema.size())
            throw InputError("normalization width does not match schema");
        a.label_names = root.at("labels").get<std::vector<std::string>>();
        if (!root.at("normal_label").is_null()) a.normal_label = root.at("normal_label").get<std::string>();
        if (!root.at("selected_features").is_null())
            a.selected_features = root.at("selected_features").get<std::vector<std::size_t>>();
        const auto& meta = root.at("metadata");
        a.seed = meta.at("seed").get<std::uint64_t>();
        a.train_rows = meta.at("train_rows").get<std::size_t>();
        a.spec = spec_from(meta.at("spec"));
        a.model = model_from(root.at("model"));
        const std::size_t width = a.selected_features ? a.selected_features->size() : a.schema.size();
        if (n_features_of(a.model) != width) throw InputError("model width does not match schema and feature mask");
        if (a.selected_features) {
            for (std::size_t f : *a.selected_features) {
                if (f >= a.schema.size()) throw InputError("selected feature index out of range");
            }
        }
        return a;
    } catch (const json::exception& e) {
        throw InputError(std::string("corrupt model file: ") + e.what());
    }
}

void save_model(const ModelArtifact& artifact, const std::string& path) {
    const std::string text = serialize_artifact(artifact);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write model file '" + path + "'");
    out << text;
    if (!out) throw InputError("failed writing model file '" + path + "'");
}

ModelArtifact load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open model file '" + path + "'");
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_artifact(text);
}

} // namespace treeids
