#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "treeids/cart.hpp"

namespace treeids {

struct BoostParams {
    std::size_t rounds = 200;
    int max_depth = 8;
    /// L2 penalty on leaf weights.
    double lambda = 1.0;
    /// Per-leaf penalty.
    double gamma = 0.0;
    double learning_rate = 0.3;
    /// 0 takes the class count from the dataset.
    std::size_t class_count = 0;
    std::uint64_t seed = 0;

    void validate() const;
    bool operator==(const BoostParams&) const = default;
};

/// Sums of first- and second-order gradients over a set of rows.
struct GradStats {
    double g = 0.0;
    double h = 0.0;

    GradStats& operator+=(const GradStats& o) {
        g += o.g;
        h += o.h;
        return *this;
    }
    friend GradStats operator-(GradStats a, const GradStats& b) { return {a.g - b.g, a.h - b.h}; }
};

/// Regularised objective contribution of one leaf: -G^2 / (2 (H + lambda)) + gamma.
double leaf_objective(GradStats stats, double lambda, double gamma);

/// Objective reduction from splitting a leaf into `left` and `right`:
/// 1/2 [G_L^2/(H_L+lambda) + G_R^2/(H_R+lambda) - (G_L+G_R)^2/(H_L+H_R+lambda)] - gamma.
double split_gain(GradStats left, GradStats right, double lambda, double gamma);

/// Optimal (unscaled) leaf weight -G / (H + lambda); 0 when the denominator vanishes.
double optimal_leaf_weight(GradStats stats, double lambda);

/// stages[round][class] is the regression tree added to class `class` in `round`.
struct BoostedModel {
    std::vector<std::vector<DecisionTree>> stages;
    std::vector<double> base_score;
    BoostParams params;
    std::size_t n_features = 0;
    std::size_t n_classes = 0;
};

struct BoostTrace {
    /// Mean multiclass log-loss on the training rows before round 0 and after every round.
    std::vector<double> train_loss;
};

/// Softmax gradient boosting with exact greedy splits. Per-class trees of one round are
/// independent and fitted in parallel; the model does not depend on `threads`.
BoostedModel fit_boosted(const Dataset& dataset, const BoostParams& params, int threads = 1,
                         BoostTrace* trace = nullptr);

std::vector<double> boosted_scores(const BoostedModel& model, std::span<const double> row);
Prediction predict_boosted(const BoostedModel& model, std::span<const double> row);

/// Numerically stable softmax.
std::vector<double> softmax(std::span<const double> scores);

/// Total split gain per feature over every tree, normalised to sum 1.
std::vector<double> boosted_feature_importance(const BoostedModel& model);

} // namespace treeids
