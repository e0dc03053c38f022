#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "treeids/cart.hpp"

namespace treeids {

enum class ForestKind { random_forest, extra_trees };

struct ForestParams {
    std::size_t n_trees = 200;
    TreeParams tree;
    MaxFeatures max_features = MaxFeatures::sqrt();
    /// Random forests only; extra trees always fit on the full sample.
    bool bootstrap = true;

    bool operator==(const ForestParams&) const = default;
};

struct ForestModel {
    ForestKind kind = ForestKind::random_forest;
    std::vector<DecisionTree> trees;
    bool bootstrap = true;
    MaxFeatures max_features;
    std::uint64_t seed = 0;
    std::size_t n_features = 0;
    std::size_t n_classes = 0;
};

/// Seed of tree `index` in a forest trained with `seed`.
std::uint64_t forest_tree_seed(std::uint64_t seed, std::size_t index);

/// The N-draw bootstrap multiset (sorted) used for tree `index`.
std::vector<std::size_t> bootstrap_rows(std::size_t n_rows, std::uint64_t seed, std::size_t index);

/// Trees are the unit of parallel work; the result does not depend on `threads`.
ForestModel fit_random_forest(const Dataset& dataset, const ForestParams& params, std::uint64_t seed, int threads = 1);
ForestModel fit_extra_trees(const Dataset& dataset, const ForestParams& params, std::uint64_t seed, int threads = 1);

/// One vote per tree; ties go to the lowest class id. The distribution is the vote share.
Prediction majority_vote(const ForestModel& forest, std::span<const double> row);

/// Mean of the per-tree importance vectors, renormalised.
std::vector<double> forest_feature_importance(const ForestModel& forest);

} // namespace treeids
