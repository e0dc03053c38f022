#include "treeids/resample.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include "treeids/error.hpp"
#include "treeids/parallel.hpp"
#include "treeids/rng.hpp"

namespace treeids {
namespace {

struct ClassJob {
    ClassId id;
    std::vector<std::size_t> members;
    std::size_t needed;
};

std::vector<ClassJob> plan_jobs(const Dataset& dataset, const ResamplePlan& plan) {
    std::vector<std::vector<std::size_t>> members(dataset.n_classes());
    for (std::size_t i = 0; i < dataset.n_rows(); ++i) members[static_cast<std::size_t>(dataset.label(i))].push_back(i);

    std::vector<ClassJob> jobs;
    for (const auto& [id, target] : plan.targets) {
        if (id < 0 || static_cast<std::size_t>(id) >= dataset.n_classes())
            throw InputError("resample plan names unknown class id " + std::to_string(id));
        auto& rows = members[static_cast<std::size_t>(id)];
        if (target < rows.size()) {
            throw InputError("resample target " + std::to_string(target) + " for class '" +
                             dataset.label_names()[static_cast<std::size_t>(id)] + "' is below its current count " +
                             std::to_string(rows.size()));
        }
        if (target == rows.size()) continue;
        if (rows.empty()) throw InputError("cannot oversample empty class '" + dataset.label_names()[id] + "'");
        const std::size_t needed = target - rows.size();
        jobs.push_back({id, std::move(rows), needed});
    }
    return jobs;
}

Dataset append_rows(const Dataset& dataset, const std::vector<ClassJob>& jobs,
                    const std::vector<std::vector<double>>& synthetic) {
    std::vector<double> values(dataset.values().begin(), dataset.values().end());
    std::vector<ClassId> labels(dataset.labels().begin(), dataset.labels().end());
    for (std::size_t j = 0; j < jobs.size(); ++j) {
        values.insert(values.end(), synthetic[j].begin(), synthetic[j].end());
        labels.insert(labels.end(), jobs[j].needed, jobs[j].id);
    }
    return Dataset(dataset.schema(), std::move(values), std::move(labels), dataset.label_names());
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double sum = 0.0;
    for (std::size_t f = 0; f < a.size(); ++f) {
        const double d = a[f] - b[f];
        sum += d * d;
    }
    return sum;
}

} // namespace

ResamplePlan equalizing_plan(const Dataset& dataset, ResampleMethod method, double target_ratio,
                             std::size_t k_neighbors, std::uint64_t seed) {
    if (!(target_ratio > 0.0)) throw InputError("target ratio must be positive");
    ResamplePlan plan;
    plan.method = method;
    plan.k_neighbors = k_neighbors;
    plan.seed = seed;
    const auto counts = dataset.class_counts();
    const std::size_t largest = counts.empty() ? 0 : *std::max_element(counts.begin(), counts.end());
    const auto goal = static_cast<std::size_t>(std::ceil(target_ratio * static_cast<double>(largest)));
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] > 0 && counts[c] < goal) plan.targets[static_cast<ClassId>(c)] = goal;
    }
    return plan;
}

Dataset random_oversample(const Dataset& dataset, const ResamplePlan& plan, int threads) {
    const auto jobs = plan_jobs(dataset, plan);
    const std::size_t p = dataset.n_features();
    std::vector<std::vector<double>> synthetic(jobs.size());
    parallel_for(jobs.size(), threads, [&](std::size_t j) {
        const auto& job = jobs[j];
        Rng rng(derive_seed(plan.seed, "random-oversample", static_cast<std::uint64_t>(job.id)));
        auto& out = synthetic[j];
        out.reserve(job.needed * p);
        for (std::size_t n = 0; n < job.needed; ++n) {
            const auto src = dataset.row(job.members[rng.index(job.members.size())]);
            out.insert(out.end(), src.begin(), src.end());
        }
    });
    return append_rows(dataset, jobs, synthetic);
}

Dataset smote_oversample(const Dataset& dataset, const ResamplePlan& plan, int threads) {
    const auto jobs = plan_jobs(dataset, plan);
    for (const auto& job : jobs) {
        if (job.members.size() < 2) {
            throw InputError("class '" + dataset.label_names()[static_cast<std::size_t>(job.id)] +
                             "' has fewer than 2 rows; SMOTE needs a neighbour, use random oversampling");
        }
    }
    if (plan.k_neighbors == 0) throw InputError("SMOTE needs k_neighbors >= 1");

    const std::size_t p = dataset.n_features();
    std::vector<std::vector<double>> synthetic(jobs.size());
    parallel_for(jobs.size(), threads, [&](std::size_t j) {
        const auto& job = jobs[j];
        const std::size_t n = job.members.size();
        const std::size_t k = std::min(plan.k_neighbors, n - 1);
        Rng rng(derive_seed(plan.seed, "smote", static_cast<std::uint64_t>(job.id)));

        // Neighbour lists are computed lazily, only for rows drawn as seeds.
        std::unordered_map<std::size_t, std::vector<std::size_t>> neighbours;
        std::vector<std::pair<double, std::size_t>> scratch(n - 1);
        const auto nearest = [&](std::size_t local) -> const std::vector<std::size_t>& {
            auto it = neighbours.find(local);
            if (it != neighbours.end()) return it->second;
            const auto x = dataset.row(job.members[local]);
            std::size_t w = 0;
            for (std::size_t o = 0; o < n; ++o) {
                if (o != local) scratch[w++] = {squared_distance(x, dataset.row(job.members[o])), o};
            }
            std::partial_sort(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(k), scratch.end());
            std::vector<std::size_t> ids(k);
            for (std::size_t i = 0; i < k; ++i) ids[i] = scratch[i].second;
            return neighbours.emplace(local, std::move(ids)).first->second;
        };

        auto& out = synthetic[j];
        out.reserve(job.needed * p);
        for (std::size_t s = 0; s < job.needed; ++s) {
            const std::size_t seed_local = rng.index(n);
            const auto& nn = nearest(seed_local);
            const std::size_t neighbour_local = nn[rng.index(nn.size())];
            const double u = rng.uniform();
            const auto x = dataset.row(job.members[seed_local]);
            const auto y = dataset.row(job.members[neighbour_local]);
            for (std::size_t f = 0; f < p; ++f) out.push_back(x[f] + u * (y[f] - x[f]));
        }
    });
    return append_rows(dataset, jobs, synthetic);
}

Dataset resample(const Dataset& dataset, const ResamplePlan& plan, int threads) {
    switch (plan.method) {
    case ResampleMethod::none: return dataset;
    case ResampleMethod::random: return random_oversample(dataset, plan, threads);
    case ResampleMethod::smote: return smote_oversample(dataset, plan, threads);
    }
    throw InvariantError("unknown resample method");
}

} // namespace treeids
