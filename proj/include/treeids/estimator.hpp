#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "treeids/model.hpp"
#include "treeids/stacking.hpp"

namespace treeids {

using Model = std::variant<DecisionTree, ForestModel, BoostedModel, StackingModel>;

ModelKind kind_of(const Model& model);
std::size_t n_features_of(const Model& model);
std::size_t n_classes_of(const Model& model);

/// Fits any kind, stacking included (bases and meta taken from the spec).
Model fit_model(const ModelSpec& spec, const Dataset& dataset, std::uint64_t seed, int threads = 1);

Prediction predict(const Model& model, std::span<const double> row);

/// Scores every row; rows are split across workers, output order is row order.
std::vector<Prediction> predict_rows(const Model& model, const Dataset& dataset, int threads = 1);
std::vector<ClassId> predict_labels(const Model& model, const Dataset& dataset, int threads = 1);

} // namespace treeids
