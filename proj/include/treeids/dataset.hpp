#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace treeids {

using ClassId = std::int32_t;

enum class FeatureKind { numeric, one_hot };

/// Ordered column description. One-hot columns derived from the same source field
/// share a group id; numeric columns carry none.
struct FeatureSchema {
    std::vector<std::string> names;
    std::vector<FeatureKind> kinds;
    std::vector<std::optional<int>> group_ids;

    static FeatureSchema numeric(std::vector<std::string> names);

    std::size_t size() const { return names.size(); }
    void validate() const;
    std::uint64_t fingerprint() const;
    std::optional<std::size_t> index_of(std::string_view name) const;
    FeatureSchema select(std::span<const std::size_t> columns) const;

    bool operator==(const FeatureSchema&) const = default;
};

/// Row-major N x P feature matrix with dense class ids in [0, label_names.size()).
class Dataset {
public:
    Dataset() = default;
    Dataset(FeatureSchema schema, std::vector<double> values, std::vector<ClassId> labels,
            std::vector<std::string> label_names);

    std::size_t n_rows() const { return labels_.size(); }
    std::size_t n_features() const { return schema_.size(); }
    std::size_t n_classes() const { return label_names_.size(); }
    bool empty() const { return labels_.empty(); }

    std::span<const double> row(std::size_t i) const {
        return {values_.data() + i * n_features(), n_features()};
    }
    double value(std::size_t i, std::size_t feature) const { return values_[i * n_features() + feature]; }
    ClassId label(std::size_t i) const { return labels_[i]; }

    std::span<const double> values() const { return values_; }
    std::span<const ClassId> labels() const { return labels_; }
    const std::vector<std::string>& label_names() const { return label_names_; }
    const FeatureSchema& schema() const { return schema_; }

    std::optional<ClassId> class_id(std::string_view name) const;
    std::vector<std::size_t> class_counts() const;

    /// Rows in the given order (duplicates allowed). Label names are kept whole.
    Dataset subset(std::span<const std::size_t> rows) const;
    /// Columns in the given order.
    Dataset select_features(std::span<const std::size_t> columns) const;

    /// Throws unless every value is finite and the dataset is non-empty. Learners call this.
    void require_learnable() const;

private:
    FeatureSchema schema_;
    std::vector<double> values_;
    std::vector<ClassId> labels_;
    std::vector<std::string> label_names_;
};

/// Per-feature extrema for min-max scaling onto [0, 1].
struct NormalizationParams {
    std::vector<double> mins;
    std::vector<double> maxs;
    std::vector<bool> degenerate;

    std::size_t size() const { return mins.size(); }
    bool operator==(const NormalizationParams&) const = default;
};

NormalizationParams compute_min_max(const Dataset& dataset);

/// Scales numeric columns with (x - min) / (max - min), clamped to [0, 1]. Degenerate
/// columns map to 0. One-hot columns pass through.
Dataset normalize(const Dataset& dataset, const NormalizationParams& params);

/// In-place variant for a single row laid out by `schema`.
void normalize_row(std::span<double> row, const FeatureSchema& schema, const NormalizationParams& params);

struct CleanResult {
    Dataset dataset;
    std::size_t removed = 0;
};

/// Removes rows containing any non-finite cell, preserving order of the survivors.
CleanResult drop_invalid_rows(const Dataset& dataset);

struct FoldPlan {
    std::size_t k = 0;
    std::vector<std::size_t> assignments;

    std::vector<std::size_t> train_rows(std::size_t fold) const;
    std::vector<std::size_t> test_rows(std::size_t fold) const;
};

/// Seeded stratified k-fold assignment. Each class is shuffled, then dealt round-robin
/// continuing from where the previous class stopped, so both per-class and overall fold
/// sizes differ by at most one.
FoldPlan stratified_folds(const Dataset& dataset, std::size_t k, std::uint64_t seed);

/// Keeps round(fraction * n_c) rows of every class c (at least one), in original row order.
Dataset stratified_sample(const Dataset& dataset, double fraction, std::uint64_t seed);

} // namespace treeids
