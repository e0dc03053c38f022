#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "treeids/dataset.hpp"
#include "treeids/rng.hpp"

namespace treeids {

enum class Criterion { gini, entropy };
enum class SplitMode { exact, random_threshold };

/// How many features a node may consider.
struct MaxFeatures {
    enum class Mode { all, sqrt, fixed };
    Mode mode = Mode::all;
    std::size_t count = 0;

    static MaxFeatures all() { return {}; }
    static MaxFeatures sqrt() { return {Mode::sqrt, 0}; }
    static MaxFeatures fixed(std::size_t n) { return {Mode::fixed, n}; }

    std::size_t resolve(std::size_t n_features) const;
    bool operator==(const MaxFeatures&) const = default;
};

struct TreeParams {
    static constexpr int kUnboundedDepth = 1 << 20;

    int max_depth = 8;
    std::size_t min_samples_split = 8;
    std::size_t min_samples_leaf = 3;
    Criterion criterion = Criterion::gini;
    MaxFeatures max_features = MaxFeatures::all();
    SplitMode split_mode = SplitMode::exact;
    std::uint64_t seed = 0;

    void validate() const;
    bool operator==(const TreeParams&) const = default;
};

struct SplitCandidate {
    std::size_t feature = 0;
    double threshold = 0.0;
    double impurity_decrease = 0.0;
    std::size_t left_count = 0;
    std::size_t right_count = 0;
};

/// Flat node. Splits send x[feature] <= threshold to `left`.
struct TreeNode {
    static constexpr std::int32_t kLeaf = -1;

    std::int32_t feature = kLeaf;
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    double impurity = 0.0;
    std::size_t samples = 0;
    /// Impurity decrease (classification) or structure-score gain (boosting) of the split.
    double gain = 0.0;
    /// Classification leaves.
    std::vector<std::uint32_t> class_counts;
    ClassId predicted_class = 0;
    /// Boosting leaves.
    double weight = 0.0;

    bool is_leaf() const { return feature == kLeaf; }
};

enum class TreeTask { classification, boosting };

/// Nodes are stored in preorder; nodes[0] is the root.
struct DecisionTree {
    std::vector<TreeNode> nodes;
    TreeParams params;
    TreeTask task = TreeTask::classification;
    std::size_t n_features = 0;
    std::size_t n_classes = 0;
    std::uint64_t schema_fingerprint = 0;

    std::size_t leaf_index(std::span<const double> row) const;
    std::size_t depth() const;
    std::size_t leaf_count() const;
};

struct Prediction {
    ClassId class_id = 0;
    std::vector<double> distribution;
};

double gini_impurity(std::span<const double> class_counts);
double entropy_impurity(std::span<const double> class_counts);

/// Best split of `rows` (indices into dataset, duplicates allowed) over the given
/// candidate features. Exact mode evaluates midpoints between consecutive distinct
/// values; random-threshold mode draws one threshold per feature from `rng`. Ties go to
/// the lowest feature index, then the lowest threshold.
std::optional<SplitCandidate> best_split(const Dataset& dataset, std::span<const std::size_t> rows,
                                         const TreeParams& params, std::span<const std::size_t> features, Rng& rng);

DecisionTree fit_tree(const Dataset& dataset, const TreeParams& params);
/// Fits on a row multiset (bootstrap samples repeat indices).
DecisionTree fit_tree(const Dataset& dataset, std::span<const std::size_t> rows, const TreeParams& params);

Prediction predict_tree(const DecisionTree& tree, std::span<const double> row);

/// Misclassification rate on `eval` plus alpha times the leaf count.
double cost_complexity(const DecisionTree& tree, double alpha, const Dataset& eval);

/// Sample-weighted impurity decrease per feature, normalised to sum 1 (all zero for a stump).
std::vector<double> tree_feature_importance(const DecisionTree& tree);

/// Renumbers nodes into preorder.
void canonicalize_preorder(DecisionTree& tree);

} // namespace treeids
