#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "oracles.hpp"
#include "support.hpp"
#include "treeids/boosting.hpp"
#include "treeids/error.hpp"
#include "treeids/forest.hpp"

using namespace treeids;
using testutil::make_dataset;

namespace {

template <class Predict>
double accuracy(const Dataset& d, Predict&& predict) {
    std::size_t ok = 0;
    for (std::size_t i = 0; i < d.n_rows(); ++i) ok += predict(d.row(i)).class_id == d.label(i);
    return static_cast<double>(ok) / static_cast<double>(d.n_rows());
}

bool same_tree(const DecisionTree& a, const DecisionTree& b) {
    if (a.nodes.size() != b.nodes.size()) return false;
    for (std::size_t i = 0; i < a.nodes.size(); ++i) {
        const auto& x = a.nodes[i];
        const auto& y = b.nodes[i];
        if (x.feature != y.feature || x.threshold != y.threshold || x.left != y.left || x.right != y.right ||
            x.class_counts != y.class_counts || x.weight != y.weight || x.gain != y.gain)
            return false;
    }
    return true;
}

} // namespace

TEST_CASE("one unrestricted tree without bootstrap equals a plain tree") {
    const auto d = testutil::random_dataset(5, 80, 4, 3);
    ForestParams fp;
    fp.n_trees = 1;
    fp.bootstrap = false;
    fp.max_features = MaxFeatures::all();
    const auto forest = fit_random_forest(d, fp, 99);
    const auto tree = fit_tree(d, fp.tree);
    for (std::size_t i = 0; i < d.n_rows(); ++i)
        CHECK(majority_vote(forest, d.row(i)).class_id == predict_tree(tree, d.row(i)).class_id);
}

TEST_CASE("one extra tree equals a random-threshold tree with the same seed") {
    const auto d = testutil::random_dataset(6, 80, 4, 3, 50);
    ForestParams fp;
    fp.n_trees = 1;
    const auto forest = fit_extra_trees(d, fp, 7);
    CHECK_FALSE(forest.bootstrap);
    TreeParams tp = fp.tree;
    tp.split_mode = SplitMode::random_threshold;
    tp.max_features = fp.max_features;
    tp.seed = forest_tree_seed(7, 0);
    CHECK(same_tree(forest.trees[0], fit_tree(d, tp)));
    CHECK(forest.trees[0].nodes[0].samples == d.n_rows());
}

TEST_CASE("forests fit separable data") {
    const auto d = testutil::blobs(3, 200, 5, 4);
    ForestParams fp;
    fp.n_trees = 10;
    const auto rf = fit_random_forest(d, fp, 1);
    CHECK(accuracy(d, [&](auto row) { return majority_vote(rf, row); }) == 1.0);
    fp.n_trees = 20;
    const auto et = fit_extra_trees(d, fp, 1);
    CHECK(accuracy(d, [&](auto row) { return majority_vote(et, row); }) == 1.0);
    for (const auto& t : et.trees) CHECK(t.nodes[0].samples == d.n_rows());
}

TEST_CASE("forest is independent of the worker count") {
    const auto d = testutil::random_dataset(8, 150, 6, 3);
    ForestParams fp;
    fp.n_trees = 12;
    const auto a = fit_random_forest(d, fp, 42, 1);
    const auto b = fit_random_forest(d, fp, 42, 4);
    REQUIRE(a.trees.size() == b.trees.size());
    for (std::size_t t = 0; t < a.trees.size(); ++t) CHECK(same_tree(a.trees[t], b.trees[t]));
    const auto c = fit_extra_trees(d, fp, 42, 1);
    const auto e = fit_extra_trees(d, fp, 42, 3);
    for (std::size_t t = 0; t < c.trees.size(); ++t) CHECK(same_tree(c.trees[t], e.trees[t]));
}

TEST_CASE("every bootstrap leaves rows out") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        for (std::size_t t = 0; t < 20; ++t) {
            const auto rows = bootstrap_rows(10, seed, t);
            CHECK(rows.size() == 10);
            CHECK(std::set<std::size_t>(rows.begin(), rows.end()).size() < 10);
        }
    }
}

TEST_CASE("majority vote rules") {
    const auto d = make_dataset({{0}, {1}}, {0, 1});
    TreeParams tp;
    tp.min_samples_split = 2;
    tp.min_samples_leaf = 1;
    const auto says0 = fit_tree(make_dataset({{0}, {1}}, {0, 0}, 2), tp);
    const auto says1 = fit_tree(make_dataset({{0}, {1}}, {1, 1}, 2), tp);
    ForestModel f;
    f.n_features = 1;
    f.n_classes = 2;
    f.trees = {says1, says1, says1};
    auto v = majority_vote(f, d.row(0));
    CHECK(v.class_id == 1);
    CHECK(v.distribution[1] == 1.0);

    f.trees = {says1, says0, says1, says0};
    v = majority_vote(f, d.row(0));
    CHECK(v.class_id == 0);
    CHECK(v.distribution[0] + v.distribution[1] == 1.0);

    // reordering trees changes nothing
    const auto big = testutil::random_dataset(1, 100, 3, 3);
    ForestParams fp;
    fp.n_trees = 9;
    auto forest = fit_random_forest(big, fp, 3);
    std::vector<ClassId> before;
    for (std::size_t i = 0; i < big.n_rows(); ++i) before.push_back(majority_vote(forest, big.row(i)).class_id);
    std::reverse(forest.trees.begin(), forest.trees.end());
    std::rotate(forest.trees.begin(), forest.trees.begin() + 4, forest.trees.end());
    for (std::size_t i = 0; i < big.n_rows(); ++i) CHECK(majority_vote(forest, big.row(i)).class_id == before[i]);
    CHECK_THROWS_AS(majority_vote(forest, std::vector<double>{1.0}), SchemaError);
}

TEST_CASE("forest importance") {
    const auto d = make_dataset({{0, 0, 0, 0}, {0, 0, 0, 1}, {0, 0, 0, 2}, {0, 0, 0, 3}}, {0, 0, 1, 1});
    TreeParams tp;
    tp.min_samples_split = 2;
    tp.min_samples_leaf = 1;
    tp.max_depth = 1;
    ForestModel f;
    f.n_features = 4;
    f.n_classes = 2;
    f.trees = {fit_tree(d, tp), fit_tree(d, tp), fit_tree(d, tp)};
    CHECK(forest_feature_importance(f) == std::vector<double>{0, 0, 0, 1});

    const auto r = testutil::random_dataset(2, 120, 5, 3);
    ForestParams fp;
    fp.n_trees = 15;
    const auto imp = forest_feature_importance(fit_random_forest(r, fp, 1));
    CHECK(std::abs(std::accumulate(imp.begin(), imp.end(), 0.0) - 1.0) < 1e-9);
}

TEST_CASE("boosting leaf weights on the 4-row example") {
    const auto d = make_dataset({{0}, {1}, {2}, {3}}, {0, 0, 1, 1});
    BoostParams bp;
    bp.rounds = 1;
    bp.max_depth = 1;
    bp.lambda = 0;
    bp.learning_rate = 1;
    const auto m = fit_boosted(d, bp);
    REQUIRE(m.stages.size() == 1);
    // class-1 tree: rows 0,1 have g = 0.5, rows 2,3 have g = -0.5, every h = 0.25
    const auto& t1 = m.stages[0][1];
    REQUIRE(t1.nodes.size() == 3);
    CHECK(t1.nodes[0].threshold == 1.5);
    const double g_left = 0.5 + 0.5, h_left = 0.25 + 0.25;
    CHECK(t1.nodes[static_cast<std::size_t>(t1.nodes[0].left)].weight == -g_left / h_left);
    CHECK(t1.nodes[static_cast<std::size_t>(t1.nodes[0].right)].weight == g_left / h_left);
    const auto& t0 = m.stages[0][0];
    CHECK(t0.nodes[static_cast<std::size_t>(t0.nodes[0].left)].weight == 2.0);
    CHECK(t0.nodes[static_cast<std::size_t>(t0.nodes[0].right)].weight == -2.0);
}

TEST_CASE("gain equals the objective difference") {
    Rng rng(123);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng.index(30);
        std::vector<double> g(n), h(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double p = rng.uniform();
            g[i] = rng.uniform() < 0.5 ? p - 1.0 : p;
            h[i] = p * (1.0 - p);
        }
        const double lambda = rng.uniform() * 3.0;
        const double gamma = rng.uniform();
        const std::size_t cut = 1 + rng.index(n - 1);
        std::vector<std::size_t> all(n), left, right;
        std::iota(all.begin(), all.end(), 0);
        GradStats gl, gr;
        for (std::size_t i = 0; i < n; ++i) {
            (i < cut ? left : right).push_back(i);
            (i < cut ? gl : gr) += {g[i], h[i]};
        }
        const double brute = oracle::brute_leaf_objective(g, h, all, lambda, gamma) -
                             (oracle::brute_leaf_objective(g, h, left, lambda, gamma) + oracle::brute_leaf_objective(g, h, right, lambda, gamma));
        CHECK(std::abs(split_gain(gl, gr, lambda, gamma) - brute) < 1e-9);
    }
}

TEST_CASE("leaf weight limits") {
    CHECK(optimal_leaf_weight({0.0, 3.0}, 1.0) == 0.0);
    CHECK(std::abs(optimal_leaf_weight({5.0, 2.0}, 1e12)) < 1e-10);
    const auto d = testutil::random_dataset(3, 60, 3, 3);
    BoostParams bp;
    bp.rounds = 3;
    bp.lambda = 1e15;
    const auto m = fit_boosted(d, bp);
    for (const auto& stage : m.stages) {
        for (const auto& t : stage) {
            for (const auto& node : t.nodes) {
                if (node.is_leaf()) CHECK(std::abs(node.weight) < 1e-10);
            }
        }
    }
}

TEST_CASE("zero rounds predict uniformly") {
    const auto d = testutil::random_dataset(1, 30, 2, 4);
    BoostParams bp;
    bp.rounds = 0;
    const auto m = fit_boosted(d, bp);
    const auto p = predict_boosted(m, d.row(0));
    for (double v : p.distribution) CHECK(v == doctest::Approx(0.25));
    CHECK(p.class_id == 0);
}

TEST_CASE("boosted probabilities, argmax shift invariance and fit") {
    const auto d = testutil::blobs(4, 120, 3, 3);
    BoostParams bp;
    bp.rounds = 10;
    bp.max_depth = 3;
    const auto m = fit_boosted(d, bp);
    CHECK(accuracy(d, [&](auto row) { return predict_boosted(m, row); }) == 1.0);
    Rng rng(4);
    for (int i = 0; i < 50; ++i) {
        const auto row = testutil::random_row(rng, 3);
        const auto p = predict_boosted(m, row);
        CHECK(std::abs(std::accumulate(p.distribution.begin(), p.distribution.end(), 0.0) - 1.0) < 1e-9);
        auto scores = boosted_scores(m, row);
        for (double& s : scores) s += 17.5;
        const auto shifted = softmax(scores);
        CHECK(std::max_element(shifted.begin(), shifted.end()) - shifted.begin() == p.class_id);
    }
    const auto imp = boosted_feature_importance(m);
    CHECK(std::abs(std::accumulate(imp.begin(), imp.end(), 0.0) - 1.0) < 1e-9);
    CHECK_THROWS_AS(predict_boosted(m, std::vector<double>{1.0}), SchemaError);
}

TEST_CASE("training loss never increases") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto d = testutil::random_dataset(seed, 40 + seed * 5, 3, 2 + seed % 3, 8);
        BoostParams bp;
        bp.rounds = 30;
        bp.learning_rate = 0.3;
        bp.max_depth = 3;
        BoostTrace trace;
        fit_boosted(d, bp, 1, &trace);
        REQUIRE(trace.train_loss.size() == 31);
        for (std::size_t r = 1; r < trace.train_loss.size(); ++r) {
            CAPTURE(seed);
            CAPTURE(r);
            CHECK(trace.train_loss[r] <= trace.train_loss[r - 1] + 1e-12);
        }
    }
}

TEST_CASE("boosting errors and determinism") {
    const auto one = make_dataset({{0}, {1}}, {0, 0});
    CHECK_THROWS(fit_boosted(one, BoostParams{}));
    const auto d = testutil::random_dataset(1, 50, 3, 3);
    BoostParams bp;
    bp.class_count = 2;
    CHECK_THROWS_AS(fit_boosted(d, bp), InputError);
    bp.class_count = 0;
    bp.rounds = 5;
    const auto a = fit_boosted(d, bp, 1);
    const auto b = fit_boosted(d, bp, 3);
    for (std::size_t r = 0; r < a.stages.size(); ++r) {
        for (std::size_t c = 0; c < a.stages[r].size(); ++c) CHECK(same_tree(a.stages[r][c], b.stages[r][c]));
    }
}
