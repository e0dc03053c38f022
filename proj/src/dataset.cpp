#include "treeids/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "treeids/error.hpp"
#include "treeids/rng.hpp"

namespace treeids {

FeatureSchema FeatureSchema::numeric(std::vector<std::string> names) {
    FeatureSchema schema;
    schema.kinds.assign(names.size(), FeatureKind::numeric);
    schema.group_ids.assign(names.size(), std::nullopt);
    schema.names = std::move(names);
    return schema;
}

void FeatureSchema::validate() const {
    if (kinds.size() != names.size() || group_ids.size() != names.size())
        throw InvariantError("feature schema columns have inconsistent lengths");
    std::unordered_set<std::string_view> seen;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i].empty()) throw InputError("feature " + std::to_string(i) + " has an empty name");
        if (!seen.insert(names[i]).second) throw InputError("duplicate feature name '" + names[i] + "'");
        const bool one_hot = kinds[i] == FeatureKind::one_hot;
        if (one_hot != group_ids[i].has_value())
            throw InputError("feature '" + names[i] + "': one-hot columns need a group id, numeric columns none");
    }
}

std::uint64_t FeatureSchema::fingerprint() const {
    std::uint64_t hash = fnv1a("schema");
    for (std::size_t i = 0; i < names.size(); ++i) {
        hash = fnv1a(names[i], hash);
        hash = fnv1a(kinds[i] == FeatureKind::one_hot ? "\x01" : "\x02", hash);
    }
    return hash;
}

std::optional<std::size_t> FeatureSchema::index_of(std::string_view name) const {
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) return std::nullopt;
    return static_cast<std::size_t>(it - names.begin());
}

FeatureSchema FeatureSchema::select(std::span<const std::size_t> columns) const {
    FeatureSchema out;
    for (std::size_t c : columns) {
        if (c >= names.size()) throw InputError("feature index " + std::to_string(c) + " out of range");
        out.names.push_back(names[c]);
        out.kinds.push_back(kinds[c]);
        out.group_ids.push_back(group_ids[c]);
    }
    return out;
}

Dataset::Dataset(FeatureSchema schema, std::vector<double> values, std::vector<ClassId> labels,
                 std::vector<std::string> label_names)
    : schema_(std::move(schema)), values_(std::move(values)), labels_(std::move(labels)),
      label_names_(std::move(label_names)) {
    schema_.validate();
    if (values_.size() != labels_.size() * schema_.size())
        throw InvariantError("dataset matrix size does not match rows x features");
    for (ClassId id : labels_) {
        if (id < 0 || static_cast<std::size_t>(id) >= label_names_.size())
            throw InvariantError("label id " + std::to_string(id) + " has no name");
    }
}

std::optional<ClassId> Dataset::class_id(std::string_view name) const {
    const auto it = std::find(label_names_.begin(), label_names_.end(), name);
    if (it == label_names_.end()) return std::nullopt;
    return static_cast<ClassId>(it - label_names_.begin());
}

std::vector<std::size_t> Dataset::class_counts() const {
    std::vector<std::size_t> counts(n_classes(), 0);
    for (ClassId id : labels_) ++counts[static_cast<std::size_t>(id)];
    return counts;
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
    const std::size_t p = n_features();
    std::vector<double> values;
    values.reserve(rows.size() * p);
    std::vector<ClassId> labels;
    labels.reserve(rows.size());
    for (std::size_t r : rows) {
        if (r >= n_rows()) throw InvariantError("row index out of range in subset");
        const auto src = row(r);
        values.insert(values.end(), src.begin(), src.end());
        labels.push_back(labels_[r]);
    }
    return Dataset(schema_, std::move(values), std::move(labels), label_names_);
}

Dataset Dataset::select_features(std::span<const std::size_t> columns) const {
    FeatureSchema schema = schema_.select(columns);
    std::vector<double> values;
    values.reserve(n_rows() * columns.size());
    for (std::size_t i = 0; i < n_rows(); ++i) {
        for (std::size_t c : columns) values.push_back(value(i, c));
    }
    return Dataset(std::move(schema), std::move(values), labels_, label_names_);
}

void Dataset::require_learnable() const {
    if (n_rows() == 0) throw InputError("dataset has no rows");
    if (n_features() == 0) throw InputError("dataset has no features");
    for (double v : values_) {
        if (!std::isfinite(v)) throw InputError("dataset contains non-finite values; clean it first");
    }
}

NormalizationParams compute_min_max(const Dataset& dataset) {
    if (dataset.empty()) throw InputError("no rows");
    const std::size_t p = dataset.n_features();
    NormalizationParams params;
    params.mins.assign(p, 0.0);
    params.maxs.assign(p, 0.0);
    const auto first = dataset.row(0);
    std::copy(first.begin(), first.end(), params.mins.begin());
    std::copy(first.begin(), first.end(), params.maxs.begin());
    for (std::size_t i = 1; i < dataset.n_rows(); ++i) {
        const auto r = dataset.row(i);
        for (std::size_t f = 0; f < p; ++f) {
            params.mins[f] = std::min(params.mins[f], r[f]);
            params.maxs[f] = std::max(params.maxs[f], r[f]);
        }
    }
    params.degenerate.resize(p);
    for (std::size_t f = 0; f < p; ++f) params.degenerate[f] = params.mins[f] == params.maxs[f];
    return params;
}

void normalize_row(std::span<double> row, const FeatureSchema& schema, const NormalizationParams& params) {
    for (std::size_t f = 0; f < row.size(); ++f) {
        if (schema.kinds[f] == FeatureKind::one_hot) continue;
        if (params.degenerate[f]) {
            row[f] = 0.0;
            continue;
        }
        const double scaled = (row[f] - params.mins[f]) / (params.maxs[f] - params.mins[f]);
        row[f] = std::clamp(scaled, 0.0, 1.0);
    }
}

Dataset normalize(const Dataset& dataset, const NormalizationParams& params) {
    if (params.size() != dataset.n_features() || params.maxs.size() != params.size() ||
        params.degenerate.size() != params.size())
        throw SchemaError("normalization params cover " + std::to_string(params.size()) + " features, dataset has " +
                          std::to_string(dataset.n_features()));
    std::vector<double> values(dataset.values().begin(), dataset.values().end());
    const std::size_t p = dataset.n_features();
    for (std::size_t i = 0; i < dataset.n_rows(); ++i) {
        normalize_row(std::span<double>(values.data() + i * p, p), dataset.schema(), params);
    }
    return Dataset(dataset.schema(), std::move(values), {dataset.labels().begin(), dataset.labels().end()},
                   dataset.label_names());
}

CleanResult drop_invalid_rows(const Dataset& dataset) {
    std::vector<std::size_t> keep;
    keep.reserve(dataset.n_rows());
    for (std::size_t i = 0; i < dataset.n_rows(); ++i) {
        const auto r = dataset.row(i);
        if (std::all_of(r.begin(), r.end(), [](double v) { return std::isfinite(v); })) keep.push_back(i);
    }
    if (keep.empty()) throw InputError("dataset empty after cleaning");
    CleanResult result;
    result.removed = dataset.n_rows() - keep.size();
    result.dataset = result.removed == 0 ? dataset : dataset.subset(keep);
    return result;
}

std::vector<std::size_t> FoldPlan::train_rows(std::size_t fold) const {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < assignments.size(); ++i) {
        if (assignments[i] != fold) rows.push_back(i);
    }
    return rows;
}

std::vector<std::size_t> FoldPlan::test_rows(std::size_t fold) const {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < assignments.size(); ++i) {
        if (assignments[i] == fold) rows.push_back(i);
    }
    return rows;
}

FoldPlan stratified_folds(const Dataset& dataset, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw InputError("fold count must be at least 2");
    if (k > dataset.n_rows())
        throw InputError("fold count " + std::to_string(k) + " exceeds row count " + std::to_string(dataset.n_rows()));

    std::vector<std::vector<std::size_t>> members(dataset.n_classes());
    for (std::size_t i = 0; i < dataset.n_rows(); ++i)
        members[static_cast<std::size_t>(dataset.label(i))].push_back(i);

    FoldPlan plan;
    plan.k = k;
    plan.assignments.assign(dataset.n_rows(), 0);
    std::size_t offset = 0;
    for (std::size_t c = 0; c < members.size(); ++c) {
        auto& rows = members[c];
        Rng rng(derive_seed(seed, "folds", c));
        for (std::size_t i = rows.size(); i > 1; --i) std::swap(rows[i - 1], rows[rng.index(i)]);
        for (std::size_t j = 0; j < rows.size(); ++j) plan.assignments[rows[j]] = (offset + j) % k;
        offset = (offset + rows.size()) % k;
    }
    return plan;
}

Dataset stratified_sample(const Dataset& dataset, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction <= 1.0)) throw InputError("sample fraction must lie in (0, 1]");
    std::vector<std::vector<std::size_t>> members(dataset.n_classes());
    for (std::size_t i = 0; i < dataset.n_rows(); ++i)
        members[static_cast<std::size_t>(dataset.label(i))].push_back(i);
    std::vector<std::size_t> keep;
    for (std::size_t c = 0; c < members.size(); ++c) {
        auto& rows = members[c];
        if (rows.empty()) continue;
        const auto take = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(rows.size()))));
        Rng rng(derive_seed(seed, "sample", c));
        // partial Fisher-Yates: the first `take` slots end up a uniform draw
        for (std::size_t i = 0; i < take; ++i) std::swap(rows[i], rows[i + rng.index(rows.size() - i)]);
        keep.insert(keep.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(take));
    }
    std::sort(keep.begin(), keep.end());
    return dataset.subset(keep);
}

} // namespace treeids
