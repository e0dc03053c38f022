#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "support.hpp"
#include "treeids/error.hpp"
#include "treeids/resample.hpp"

using namespace treeids;

namespace {

} // namespace

TEST_CASE("random oversampling pads minorities with copies") {
    const auto d = testutil::random_dataset(1, 40, 3, 2, 1000);
    const auto counts = d.class_counts();
    ResamplePlan plan;
    plan.method = ResampleMethod::random;
    plan.targets[0] = counts[0] + 15;
    plan.seed = 4;
    const auto r = random_oversample(d, plan);
    CHECK(r.n_rows() == d.n_rows() + 15);
    CHECK(r.class_counts()[0] == counts[0] + 15);
    CHECK(r.class_counts()[1] == counts[1]);
    for (std::size_t i = 0; i < d.n_rows(); ++i) CHECK(std::equal(d.row(i).begin(), d.row(i).end(), r.row(i).begin()));
    for (std::size_t i = d.n_rows(); i < r.n_rows(); ++i) {
        CHECK(r.label(i) == 0);
        bool found = false;
        for (std::size_t j = 0; j < d.n_rows() && !found; ++j)
            found = d.label(j) == 0 && std::equal(d.row(j).begin(), d.row(j).end(), r.row(i).begin());
        CHECK(found);
    }

    plan.targets[0] = counts[0];
    CHECK(random_oversample(d, plan).n_rows() == d.n_rows());
    plan.targets[0] = counts[0] - 1;
    CHECK_THROWS_AS(random_oversample(d, plan), InputError);
}

TEST_CASE("equalizing plan raises every class to the largest") {
    const auto d = testutil::make_dataset({{0}, {1}, {2}, {3}, {4}, {5}}, {0, 0, 0, 0, 1, 2});
    const auto plan = equalizing_plan(d, ResampleMethod::random, 1.0, 5, 0);
    const auto r = resample(d, plan);
    CHECK(r.class_counts() == std::vector<std::size_t>{4, 4, 4});
}

TEST_CASE("SMOTE on duplicate points reproduces them") {
    const auto d = testutil::make_dataset({{0, 0}, {1, 1}, {2, 2}, {5, 7}, {5, 7}}, {0, 0, 0, 1, 1});
    ResamplePlan plan;
    plan.method = ResampleMethod::smote;
    plan.targets[1] = 9;
    plan.seed = 2;
    const auto r = smote_oversample(d, plan);
    REQUIRE(r.n_rows() == 12);
    for (std::size_t i = 5; i < r.n_rows(); ++i) {
        CHECK(r.value(i, 0) == 5);
        CHECK(r.value(i, 1) == 7);
    }
}

TEST_CASE("SMOTE counts, class bounding box and k reduction") {
    const auto d = testutil::random_dataset(9, 30, 4, 2, 100);
    std::vector<std::size_t> rows;
    std::size_t taken = 0;
    for (std::size_t i = 0; i < d.n_rows(); ++i) {
        if (d.label(i) == 0 || taken++ < 10) rows.push_back(i);
    }
    const auto sub = d.subset(rows);
    const auto counts = sub.class_counts();
    REQUIRE(counts[1] == 10);
    ResamplePlan plan;
    plan.method = ResampleMethod::smote;
    plan.targets[1] = 20;
    plan.k_neighbors = 5;
    plan.seed = 3;
    const auto r = smote_oversample(sub, plan);
    CHECK(r.class_counts()[1] == 20);
    std::vector<double> lo(4, 1e300), hi(4, -1e300);
    for (std::size_t i = 0; i < sub.n_rows(); ++i) {
        if (sub.label(i) != 1) continue;
        for (std::size_t f = 0; f < 4; ++f) {
            lo[f] = std::min(lo[f], sub.value(i, f));
            hi[f] = std::max(hi[f], sub.value(i, f));
        }
    }
    for (std::size_t i = sub.n_rows(); i < r.n_rows(); ++i) {
        CHECK(r.label(i) == 1);
        for (std::size_t f = 0; f < 4; ++f) {
            CHECK(r.value(i, f) >= lo[f]);
            CHECK(r.value(i, f) <= hi[f]);
        }
    }

    // tiny class: k silently shrinks; a singleton cannot be interpolated
    const auto tiny = testutil::make_dataset({{0}, {1}, {2}, {9}, {10}}, {0, 0, 0, 1, 1});
    ResamplePlan big_k;
    big_k.method = ResampleMethod::smote;
    big_k.targets[1] = 3;
    big_k.k_neighbors = 50;
    CHECK(smote_oversample(tiny, big_k).class_counts()[1] == 3);
    const auto single = testutil::make_dataset({{0}, {1}, {9}}, {0, 0, 1});
    ResamplePlan one;
    one.method = ResampleMethod::smote;
    one.targets[1] = 2;
    CHECK_THROWS_WITH_AS(smote_oversample(single, one), doctest::Contains("random"), InputError);
}

TEST_CASE("SMOTE points lie on nearest-neighbour segments") {
    const auto d = testutil::random_dataset(17, 60, 3, 3, 1000);
    const auto counts = d.class_counts();
    ResamplePlan plan;
    plan.method = ResampleMethod::smote;
    plan.k_neighbors = 4;
    plan.seed = 5;
    plan.targets[1] = counts[1] + 40;
    plan.targets[2] = counts[2] + 25;
    const auto r = smote_oversample(d, plan);
    CHECK(r.class_counts()[1] == counts[1] + 40);
    CHECK(r.class_counts()[2] == counts[2] + 25);
    for (std::size_t i = d.n_rows(); i < r.n_rows(); ++i) CHECK(oracle::on_knn_segment(d, r.label(i), r.row(i), 4));
}

TEST_CASE("resampling is independent of thread count") {
    const auto d = testutil::random_dataset(2, 80, 3, 4, 1000);
    const auto plan = equalizing_plan(d, ResampleMethod::smote, 1.0, 5, 12);
    const auto a = resample(d, plan, 1);
    const auto b = resample(d, plan, 4);
    CHECK(std::equal(a.values().begin(), a.values().end(), b.values().begin(), b.values().end()));
    CHECK(std::equal(a.labels().begin(), a.labels().end(), b.labels().begin(), b.labels().end()));
}
