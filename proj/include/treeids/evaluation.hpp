#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "treeids/dataset.hpp"
#include "treeids/estimator.hpp"
#include "treeids/resample.hpp"

namespace treeids {

/// Rows are true classes, columns predicted classes.
struct ConfusionMatrix {
    std::size_t k = 0;
    std::vector<std::size_t> counts;

    std::size_t at(std::size_t truth, std::size_t predicted) const { return counts[truth * k + predicted]; }
    std::size_t total() const;
    ConfusionMatrix& operator+=(const ConfusionMatrix& other);
};

ConfusionMatrix confusion_matrix(std::span<const ClassId> truth, std::span<const ClassId> predicted, std::size_t k);

struct ClassMetrics {
    std::optional<double> precision;
    std::optional<double> recall;
    double f1 = 0.0;
    std::size_t support = 0;
};

/// Undefined ratios (0/0) are left empty rather than reported as 0.
struct MetricsReport {
    double accuracy = 0.0;
    /// Attack rows predicted as any attack / attack rows.
    std::optional<double> detection_rate;
    /// Normal rows predicted as any attack / normal rows.
    std::optional<double> false_alarm_rate;
    /// Binary (attack vs normal) precision and F1 of the attack side.
    std::optional<double> attack_precision;
    std::optional<double> attack_f1;
    double f1_weighted = 0.0;
    double f1_macro = 0.0;
    std::vector<ClassMetrics> per_class;
    double train_seconds = 0.0;
    double predict_seconds = 0.0;
};

MetricsReport compute_metrics(const ConfusionMatrix& cm, ClassId normal_class);

/// Holdout scoring of a fitted model; fills predict_seconds.
MetricsReport evaluate_model(const Model& model, const Dataset& dataset, ClassId normal_class, int threads = 1,
                             ConfusionMatrix* confusion = nullptr);

struct CvOptions {
    std::size_t k = 5;
    std::uint64_t seed = 0;
    /// Applied to the training portion of each fold only.
    ResampleMethod resample = ResampleMethod::none;
    double target_ratio = 1.0;
    std::size_t smote_k = 5;
    /// Fixed column subset applied to every fold.
    std::optional<std::vector<std::size_t>> feature_subset;
    /// When set, features are selected per fold from the training portion with this threshold.
    std::optional<double> select_threshold;
    int threads = 1;
};

struct FoldReport {
    std::size_t fold = 0;
    MetricsReport metrics;
    ConfusionMatrix confusion;
    std::size_t train_rows = 0;
    std::size_t test_rows = 0;
    std::vector<std::size_t> features;
};

struct CvReport {
    std::vector<FoldReport> folds;
    /// Mean over folds; train/predict seconds are summed.
    MetricsReport mean;
    ConfusionMatrix pooled;
    MetricsReport pooled_metrics;
};

CvReport cross_validate(const ModelSpec& spec, const Dataset& dataset, ClassId normal_class, const CvOptions& options);

struct GridScore {
    double accuracy = 0.0;
    double seconds = 0.0;
};

struct GridPoint {
    std::size_t trees = 0;
    int depth = 0;
    double accuracy = 0.0;
    double seconds = 0.0;
};

enum class GridStop { exhausted, accuracy_drop };

struct GridSearchResult {
    std::vector<GridPoint> evaluated;
    std::size_t chosen_trees = 0;
    int chosen_depth = 0;
    double chosen_accuracy = 0.0;
    GridStop stop_reason = GridStop::exhausted;
};

using GridEvaluator = std::function<GridScore(std::size_t trees, int depth)>;

/// Depth-major, tree-count-minor march over ascending grids. A dimension stops early once
/// accuracy falls more than `tolerance` below the best seen along it.
GridSearchResult grid_search(std::span<const std::size_t> tree_grid, std::span<const int> depth_grid,
                             const GridEvaluator& evaluate, double tolerance = 0.001);

/// Same, scoring each point with cross-validated accuracy.
GridSearchResult grid_search(const ModelSpec& spec, const Dataset& dataset, ClassId normal_class,
                             std::span<const std::size_t> tree_grid, std::span<const int> depth_grid,
                             const CvOptions& options, double tolerance = 0.001);

/// Aligned table: Method, Acc (%), DR (%), FAR (%), F1, Execution Time (s).
std::string format_metrics_table(const std::vector<std::pair<std::string, MetricsReport>>& rows);

} // namespace treeids
