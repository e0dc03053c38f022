#pragma once

#include <cstddef>
#include <cstdint>
#include <map>

#include "treeids/dataset.hpp"

namespace treeids {

enum class ResampleMethod { none, random, smote };

struct ResamplePlan {
    /// class id -> requested row count; classes not listed are left alone.
    std::map<ClassId, std::size_t> targets;
    ResampleMethod method = ResampleMethod::none;
    std::size_t k_neighbors = 5;
    std::uint64_t seed = 0;
};

/// Raises every class to at least ceil(target_ratio * largest class size).
ResamplePlan equalizing_plan(const Dataset& dataset, ResampleMethod method, double target_ratio = 1.0,
                             std::size_t k_neighbors = 5, std::uint64_t seed = 0);

/// Pads each listed class to its target by copying its rows uniformly with replacement.
Dataset random_oversample(const Dataset& dataset, const ResamplePlan& plan, int threads = 1);

/// SMOTE: each synthetic row interpolates a random class member toward one of its
/// k nearest same-class neighbours (exact Euclidean search).
Dataset smote_oversample(const Dataset& dataset, const ResamplePlan& plan, int threads = 1);

/// Dispatches on plan.method; `none` returns the dataset unchanged.
Dataset resample(const Dataset& dataset, const ResamplePlan& plan, int threads = 1);

} // namespace treeids
