#include "treeids/estimator.hpp"

#include "treeids/error.hpp"
#include "treeids/parallel.hpp"
#include "treeids/rng.hpp"

namespace treeids {

ModelKind kind_of(const Model& model) {
    return std::visit(
        [](const auto& m) -> ModelKind {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, StackingModel>) return ModelKind::stacking;
            else if constexpr (std::is_same_v<T, DecisionTree>) return ModelKind::dt;
            else if constexpr (std::is_same_v<T, BoostedModel>) return ModelKind::boost;
            else return m.kind == ForestKind::random_forest ? ModelKind::rf : ModelKind::et;
        },
        model);
}

std::size_t n_features_of(const Model& model) {
    return std::visit([](const auto& m) { return m.n_features; }, model);
}

std::size_t n_classes_of(const Model& model) {
    return std::visit([](const auto& m) { return m.n_classes; }, model);
}

Model fit_model(const ModelSpec& spec, const Dataset& dataset, std::uint64_t seed, int threads) {
    if (spec.kind != ModelKind::stacking) {
        return std::visit([](auto&& m) -> Model { return std::move(m); }, fit_base_model(spec, dataset, seed, threads));
    }
    dataset.require_learnable();
    std::vector<ModelSpec> bases;
    for (ModelKind kind : spec.stack_bases) bases.push_back(spec.with_kind(kind));
    if (bases.size() < 2) throw InputError("stacking needs at least two base models");
    return fit_stacking(dataset, bases, spec.with_kind(spec.stack_meta), spec.stack_folds, seed, threads);
}

Prediction predict(const Model& model, std::span<const double> row) {
    return std::visit(
        [&](const auto& m) -> Prediction {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, DecisionTree>) return predict_tree(m, row);
            else if constexpr (std::is_same_v<T, ForestModel>) return majority_vote(m, row);
            else if constexpr (std::is_same_v<T, BoostedModel>) return predict_boosted(m, row);
            else return predict_stacking(m, row);
        },
        model);
}

std::vector<Prediction> predict_rows(const Model& model, const Dataset& dataset, int threads) {
    if (dataset.n_features() != n_features_of(model))
        throw SchemaError("dataset has " + std::to_string(dataset.n_features()) + " features, model expects " +
                          std::to_string(n_features_of(model)));
    std::vector<Prediction> out(dataset.n_rows());
    constexpr std::size_t kChunk = 256;
    const std::size_t chunks = (dataset.n_rows() + kChunk - 1) / kChunk;
    parallel_for(chunks, threads, [&](std::size_t c) {
        const std::size_t end = std::min(dataset.n_rows(), (c + 1) * kChunk);
        for (std::size_t i = c * kChunk; i < end; ++i) out[i] = predict(model, dataset.row(i));
    });
    return out;
}

std::vector<ClassId> predict_labels(const Model& model, const Dataset& dataset, int threads) {
    const auto preds = predict_rows(model, dataset, threads);
    std::vector<ClassId> labels(preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i) labels[i] = preds[i].class_id;
    return labels;
}

} // namespace treeids
