#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "treeids/boosting.hpp"
#include "treeids/cart.hpp"
#include "treeids/forest.hpp"

namespace treeids {

enum class ModelKind { dt, rf, et, boost, stacking };

/// Fixed order used for tie-breaking: dt < rf < et < boost.
inline constexpr ModelKind kSingularKinds[] = {ModelKind::dt, ModelKind::rf, ModelKind::et, ModelKind::boost};

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view text);

/// Everything needed to fit one model. Tree-count and depth apply to forests and boosting.
struct ModelSpec {
    ModelKind kind = ModelKind::rf;
    std::size_t n_trees = 200;
    TreeParams tree;
    double lambda = 1.0;
    double gamma = 0.0;
    double learning_rate = 0.3;
    std::vector<ModelKind> stack_bases{ModelKind::dt, ModelKind::rf, ModelKind::et};
    ModelKind stack_meta = ModelKind::rf;
    std::size_t stack_folds = 5;

    ForestParams forest_params() const;
    BoostParams boost_params() const;
    /// Copy with a different kind, everything else kept.
    ModelSpec with_kind(ModelKind k) const;

    bool operator==(const ModelSpec&) const = default;
};

using BaseModel = std::variant<DecisionTree, ForestModel, BoostedModel>;

ModelKind kind_of(const BaseModel& model);

/// Fits a non-stacking model.
BaseModel fit_base_model(const ModelSpec& spec, const Dataset& dataset, std::uint64_t seed, int threads = 1);

Prediction predict_base(const BaseModel& model, std::span<const double> row);

std::vector<double> base_feature_importance(const BaseModel& model);

std::size_t n_features_of(const BaseModel& model);
std::size_t n_classes_of(const BaseModel& model);

} // namespace treeids
