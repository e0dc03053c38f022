#include "treeids/model.hpp"

#include "treeids/error.hpp"
#include "treeids/rng.hpp"

namespace treeids {

std::string_view to_string(ModelKind kind) {
    switch (kind) {
    case ModelKind::dt: return "dt";
    case ModelKind::rf: return "rf";
    case ModelKind::et: return "et";
    case ModelKind::boost: return "boost";
    case ModelKind::stacking: return "stacking";
    }
    return "?";
}

ModelKind parse_model_kind(std::string_view text) {
    for (auto kind : {ModelKind::dt, ModelKind::rf, ModelKind::et, ModelKind::boost, ModelKind::stacking}) {
        if (text == to_string(kind)) return kind;
    }
    throw InputError("unknown model kind '" + std::string(text) + "' (expected dt|rf|et|boost|stacking)");
}

ForestParams ModelSpec::forest_params() const {
    ForestParams params;
    params.n_trees = n_trees;
    params.tree = tree;
    params.max_features = MaxFeatures::sqrt();
    params.bootstrap = true;
    return params;
}

BoostParams ModelSpec::boost_params() const {
    BoostParams params;
    params.rounds = n_trees;
    params.max_depth = tree.max_depth;
    params.lambda = lambda;
    params.gamma = gamma;
    params.learning_rate = learning_rate;
    params.seed = tree.seed;
    return params;
}

ModelSpec ModelSpec::with_kind(ModelKind k) const {
    ModelSpec copy = *this;
    copy.kind = k;
    return copy;
}

ModelKind kind_of(const BaseModel& model) {
    if (std::holds_alternative<DecisionTree>(model)) return ModelKind::dt;
    if (const auto* forest = std::get_if<ForestModel>(&model))
        return forest->kind == ForestKind::random_forest ? ModelKind::rf : ModelKind::et;
    return ModelKind::boost;
}

BaseModel fit_base_model(const ModelSpec& spec, const Dataset& dataset, std::uint64_t seed, int threads) {
    switch (spec.kind) {
    case ModelKind::dt: {
        dataset.require_learnable();
        TreeParams params = spec.tree;
        params.seed = derive_seed(seed, "dt");
        return fit_tree(dataset, params);
    }
    case ModelKind::rf: return fit_random_forest(dataset, spec.forest_params(), seed, threads);
    case ModelKind::et: return fit_extra_trees(dataset, spec.forest_params(), seed, threads);
    case ModelKind::boost: {
        BoostParams params = spec.boost_params();
        params.seed = seed;
        return fit_boosted(dataset, params, threads);
    }
    case ModelKind::stacking: break;
    }
    throw InputError("stacking is not a base model kind");
}

Prediction predict_base(const BaseModel& model, std::span<const double> row) {
    return std::visit(
        [&](const auto& m) -> Prediction {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, DecisionTree>) return predict_tree(m, row);
            else if constexpr (std::is_same_v<T, ForestModel>) return majority_vote(m, row);
            else return predict_boosted(m, row);
        },
        model);
}

std::vector<double> base_feature_importance(const BaseModel& model) {
    return std::visit(
        [](const auto& m) -> std::vector<double> {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, DecisionTree>) return tree_feature_importance(m);
            else if constexpr (std::is_same_v<T, ForestModel>) return forest_feature_importance(m);
            else return boosted_feature_importance(m);
        },
        model);
}

std::size_t n_features_of(const BaseModel& model) {
    return std::visit([](const auto& m) { return m.n_features; }, model);
}

std::size_t n_classes_of(const BaseModel& model) {
    return std::visit([](const auto& m) { return m.n_classes; }, model);
}

} // namespace treeids
