#include "treeids/forest.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "treeids/error.hpp"
#include "treeids/parallel.hpp"
#include "treeids/rng.hpp"

namespace treeids {
namespace {

ForestModel fit_forest(const Dataset& dataset, const ForestParams& params, ForestKind kind, std::uint64_t seed,
                       int threads) {
    if (params.n_trees < 1) throw InputError("a forest needs at least one tree");
    params.tree.validate();
    dataset.require_learnable();

    ForestModel forest;
    forest.kind = kind;
    forest.bootstrap = kind == ForestKind::random_forest && params.bootstrap;
    forest.max_features = params.max_features;
    forest.seed = seed;
    forest.n_features = dataset.n_features();
    forest.n_classes = dataset.n_classes();
    forest.trees.resize(params.n_trees);

    TreeParams tree_params = params.tree;
    tree_params.max_features = params.max_features;
    tree_params.split_mode = kind == ForestKind::extra_trees ? SplitMode::random_threshold : SplitMode::exact;

    parallel_for(params.n_trees, threads, [&](std::size_t t) {
        TreeParams own = tree_params;
        own.seed = forest_tree_seed(seed, t);
        if (forest.bootstrap) {
            const auto rows = bootstrap_rows(dataset.n_rows(), seed, t);
            forest.trees[t] = fit_tree(dataset, rows, own);
        } else {
            forest.trees[t] = fit_tree(dataset, own);
        }
    });
    return forest;
}

} // namespace

std::uint64_t forest_tree_seed(std::uint64_t seed, std::size_t index) { return derive_seed(seed, "forest-tree", index); }

std::vector<std::size_t> bootstrap_rows(std::size_t n_rows, std::uint64_t seed, std::size_t index) {
    Rng rng(derive_seed(seed, "bootstrap", index));
    std::vector<std::size_t> rows(n_rows);
    for (auto& r : rows) r = rng.index(n_rows);
    std::sort(rows.begin(), rows.end());
    return rows;
}

ForestModel fit_random_forest(const Dataset& dataset, const ForestParams& params, std::uint64_t seed, int threads) {
    return fit_forest(dataset, params, ForestKind::random_forest, seed, threads);
}

ForestModel fit_extra_trees(const Dataset& dataset, const ForestParams& params, std::uint64_t seed, int threads) {
    return fit_forest(dataset, params, ForestKind::extra_trees, seed, threads);
}

Prediction majority_vote(const ForestModel& forest, std::span<const double> row) {
    if (forest.trees.empty()) throw InvariantError("empty forest");
    if (row.size() != forest.n_features)
        throw SchemaError("row has " + std::to_string(row.size()) + " features, forest expects " +
                          std::to_string(forest.n_features));
    Prediction out;
    out.distribution.assign(forest.n_classes, 0.0);
    for (const auto& tree : forest.trees) {
        const auto& leaf = tree.nodes[tree.leaf_index(row)];
        out.distribution[static_cast<std::size_t>(leaf.predicted_class)] += 1.0;
    }
    const auto winner = std::max_element(out.distribution.begin(), out.distribution.end());
    out.class_id = static_cast<ClassId>(winner - out.distribution.begin());
    const double n = static_cast<double>(forest.trees.size());
    for (double& v : out.distribution) v /= n;
    return out;
}

std::vector<double> forest_feature_importance(const ForestModel& forest) {
    std::vector<double> mean(forest.n_features, 0.0);
    for (const auto& tree : forest.trees) {
        const auto imp = tree_feature_importance(tree);
        for (std::size_t f = 0; f < mean.size(); ++f) mean[f] += imp[f];
    }
    const double sum = std::accumulate(mean.begin(), mean.end(), 0.0);
    if (sum > 0.0) {
        for (double& v : mean) v /= sum;
    }
    return mean;
}

} // namespace treeids
