#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "treeids/dataset.hpp"
#include "treeids/model.hpp"

namespace treeids {

/// Two-layer ensemble: per-class probability vectors of the base models, concatenated in
/// base order, are the meta model's features.
struct StackingModel {
    std::vector<BaseModel> base_models;
    BaseModel meta_model;
    std::size_t oof_fold_count = 5;
    /// meta_input_offsets[b] is the first meta column fed by base model b.
    std::vector<std::size_t> meta_input_offsets;
    std::size_t n_features = 0;
    std::size_t n_classes = 0;
};

/// Which rows each out-of-fold fit was trained on and which it scored.
struct OofFitRecord {
    std::size_t fold = 0;
    std::size_t base = 0;
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> scored_rows;
};

struct OofResult {
    Dataset meta;
    std::vector<std::size_t> offsets;
    std::vector<OofFitRecord> fits;
};

/// Stratified k-fold: each base spec is fitted on k-1 folds and scores the held-out fold.
OofResult generate_oof_features(const Dataset& dataset, std::span<const ModelSpec> base_specs, std::size_t k,
                                std::uint64_t seed, int threads = 1);

StackingModel fit_stacking(const Dataset& dataset, std::span<const ModelSpec> base_specs, const ModelSpec& meta_spec,
                           std::size_t k, std::uint64_t seed, int threads = 1);

/// Concatenated base probability vectors for one row.
std::vector<double> stacking_meta_features(const StackingModel& model, std::span<const double> row);

Prediction predict_stacking(const StackingModel& model, std::span<const double> row);

struct SingularReport {
    ModelKind kind = ModelKind::dt;
    double accuracy = 0.0;
    double seconds = 0.0;
    /// Optional secondary criterion for accuracy ties (lower is better).
    std::optional<double> false_alarm_rate;
};

struct StackingChoice {
    std::vector<ModelKind> bases;
    ModelKind meta = ModelKind::dt;
};

/// Keeps the three most accurate of the four singular kinds and uses the most accurate
/// one as meta learner. Accuracy ties fall back to lower false-alarm rate (when reported
/// for both), then lower execution time, then the fixed order dt < rf < et < boost.
/// Bases come back in that fixed order.
StackingChoice select_base_and_meta(std::span<const SingularReport> reports);

} // namespace treeids
