#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "treeids/dataset.hpp"
#include "treeids/model.hpp"

namespace treeids {

struct NamedImportance {
    std::string model;
    std::vector<double> values;
};

struct ImportanceReport {
    std::vector<NamedImportance> per_model;
    std::vector<double> averaged;
    /// Feature indices by descending averaged importance, ascending index on ties.
    std::vector<std::size_t> ranking;
    std::vector<std::size_t> selected;
};

/// Mean over the non-zero vectors, renormalised, then ranked. `selected` is filled with
/// the 0.9 rule.
ImportanceReport average_importance(std::vector<NamedImportance> per_model);

/// Shortest prefix of the ranking whose importance sum reaches `threshold`.
std::vector<std::size_t> select_features(const ImportanceReport& report, double threshold = 0.9);

/// Settings for the four learners whose importances are averaged.
struct ImportanceOptions {
    ModelSpec spec;
};

/// Fits dt, rf, et and boost on `dataset` and averages their importance vectors.
ImportanceReport compute_importance(const Dataset& dataset, const ImportanceOptions& options, std::uint64_t seed,
                                    int threads = 1);

/// Restricts to {normal, attack}, relabels to a binary problem, and ranks the averaged
/// importance. Returns (feature index, weight) pairs, strongest first.
std::vector<std::pair<std::size_t, double>> per_attack_importance(const Dataset& dataset, ClassId attack,
                                                                  ClassId normal, const ImportanceOptions& options,
                                                                  std::uint64_t seed, int threads = 1);

/// Two-column "feature,weight" table, ranking order.
std::string format_importance_table(const ImportanceReport& report, const FeatureSchema& schema);

} // namespace treeids
