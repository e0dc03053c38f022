#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "treeids/dataset.hpp"
#include "treeids/rng.hpp"

namespace testutil {

using treeids::ClassId;
using treeids::Dataset;
using treeids::FeatureSchema;

inline std::vector<std::string> feature_names(std::size_t p) {
    std::vector<std::string> names;
    for (std::size_t f = 0; f < p; ++f) names.push_back("f" + std::to_string(f));
    return names;
}

inline std::vector<std::string> class_names(std::size_t k) {
    std::vector<std::string> names;
    for (std::size_t c = 0; c < k; ++c) names.push_back("c" + std::to_string(c));
    return names;
}

inline Dataset make_dataset(const std::vector<std::vector<double>>& rows, const std::vector<ClassId>& labels,
                            std::size_t k = 0) {
    const std::size_t p = rows.empty() ? 1 : rows.front().size();
    std::vector<double> values;
    for (const auto& r : rows) values.insert(values.end(), r.begin(), r.end());
    if (k == 0) {
        for (ClassId l : labels) k = std::max<std::size_t>(k, static_cast<std::size_t>(l) + 1);
    }
    return Dataset(FeatureSchema::numeric(feature_names(p)), std::move(values), labels, class_names(k));
}

// small integer-valued features so ties and duplicate values are common
inline Dataset random_dataset(std::uint64_t seed, std::size_t n, std::size_t p, std::size_t k, int levels = 6) {
    treeids::Rng rng(seed);
    std::vector<double> values;
    std::vector<ClassId> labels;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t f = 0; f < p; ++f) values.push_back(static_cast<double>(rng.index(static_cast<std::size_t>(levels))));
        labels.push_back(static_cast<ClassId>(i < k ? i : rng.index(k)));
    }
    return Dataset(FeatureSchema::numeric(feature_names(p)), std::move(values), std::move(labels), class_names(k));
}

// k Gaussian-ish blobs far apart; any reasonable tree learner separates them
inline Dataset blobs(std::uint64_t seed, std::size_t n, std::size_t p, std::size_t k) {
    treeids::Rng rng(seed);
    std::vector<double> values;
    std::vector<ClassId> labels;
    for (std::size_t i = 0; i < n; ++i) {
        const auto c = static_cast<ClassId>(i % k);
        for (std::size_t f = 0; f < p; ++f) {
            const double centre = (f == 0 || f == 1) ? 10.0 * static_cast<double>(c) : 0.0;
            values.push_back(centre + rng.uniform() * 3.0);
        }
        labels.push_back(c);
    }
    return Dataset(FeatureSchema::numeric(feature_names(p)), std::move(values), std::move(labels), class_names(k));
}

inline std::vector<double> random_row(treeids::Rng& rng, std::size_t p) {
    std::vector<double> row(p);
    for (auto& v : row) v = rng.uniform() * 1.2 - 0.1;
    return row;
}

} // namespace testutil
