#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "support.hpp"
#include "treeids/error.hpp"
#include "treeids/estimator.hpp"
#include "treeids/importance.hpp"
#include "treeids/stacking.hpp"

using namespace treeids;

namespace {

ModelSpec small_spec(ModelKind kind) {
    ModelSpec s;
    s.kind = kind;
    s.n_trees = 10;
    s.tree.max_depth = 6;
    return s;
}

ImportanceReport report_from(std::vector<double> averaged) {
    ImportanceReport r;
    r.averaged = std::move(averaged);
    r.ranking.resize(r.averaged.size());
    std::iota(r.ranking.begin(), r.ranking.end(), 0);
    std::stable_sort(r.ranking.begin(), r.ranking.end(),
                     [&](std::size_t a, std::size_t b) { return r.averaged[a] > r.averaged[b]; });
    return r;
}

double prefix_sum(const ImportanceReport& r, std::size_t len) {
    double s = 0;
    for (std::size_t i = 0; i < len; ++i) s += r.averaged[r.ranking[i]];
    return s;
}

} // namespace

TEST_CASE("out-of-fold layout and hygiene") {
    const auto d = testutil::random_dataset(11, 150, 4, 5);
    const std::vector<ModelSpec> specs{small_spec(ModelKind::dt), small_spec(ModelKind::rf)};
    const auto oof = generate_oof_features(d, specs, 5, 3);
    CHECK(oof.meta.n_features() == 10);
    CHECK(oof.meta.n_rows() == d.n_rows());
    CHECK(oof.offsets == std::vector<std::size_t>{0, 5});
    for (std::size_t i = 0; i < d.n_rows(); ++i) {
        CHECK(oof.meta.label(i) == d.label(i));
        const auto row = oof.meta.row(i);
        for (std::size_t b = 0; b < 2; ++b) {
            const double s = std::accumulate(row.begin() + static_cast<std::ptrdiff_t>(b * 5),
                                             row.begin() + static_cast<std::ptrdiff_t>(b * 5 + 5), 0.0);
            CHECK(std::abs(s - 1.0) < 1e-9);
        }
    }
    // every row is scored exactly once per base, never by a fit that saw it
    CHECK(oof.fits.size() == 10);
    std::vector<int> scored(d.n_rows() * 2, 0);
    for (const auto& fit : oof.fits) {
        const std::set<std::size_t> train(fit.train_rows.begin(), fit.train_rows.end());
        for (std::size_t r : fit.scored_rows) {
            CHECK(train.count(r) == 0);
            ++scored[r * 2 + fit.base];
        }
        CHECK(fit.train_rows.size() + fit.scored_rows.size() == d.n_rows());
    }
    CHECK(std::all_of(scored.begin(), scored.end(), [](int c) { return c == 1; }));
}

TEST_CASE("perfect base predictions give one-hot meta blocks") {
    const auto d = testutil::blobs(2, 100, 3, 4);
    const std::vector<ModelSpec> specs{small_spec(ModelKind::dt)};
    const auto oof = generate_oof_features(d, specs, 4, 1);
    for (std::size_t i = 0; i < d.n_rows(); ++i) {
        const auto row = oof.meta.row(i);
        for (std::size_t c = 0; c < 4; ++c) CHECK(row[c] == (static_cast<ClassId>(c) == d.label(i) ? 1.0 : 0.0));
    }
}

TEST_CASE("oof errors") {
    const auto d = testutil::random_dataset(1, 40, 2, 2);
    const std::vector<ModelSpec> specs{small_spec(ModelKind::dt)};
    CHECK_THROWS_AS(generate_oof_features(d, specs, 1, 0), InputError);
    CHECK_THROWS_AS(generate_oof_features(d, std::vector<ModelSpec>{}, 5, 0), InputError);
    // boosting cannot fit a fold that holds one class
    const auto single = testutil::make_dataset({{0}, {1}, {2}, {3}}, {0, 0, 0, 0});
    try {
        generate_oof_features(single, std::vector<ModelSpec>{small_spec(ModelKind::boost)}, 2, 0);
        FAIL("expected an error");
    } catch (const InputError& e) {
        CHECK(std::string(e.what()).find("boost") != std::string::npos);
    }
}

TEST_CASE("stacking fits separable data and composes") {
    const auto d = testutil::blobs(5, 150, 4, 3);
    const std::vector<ModelSpec> specs{small_spec(ModelKind::dt), small_spec(ModelKind::rf), small_spec(ModelKind::et)};
    const auto m = fit_stacking(d, specs, small_spec(ModelKind::rf), 5, 9);
    CHECK(m.base_models.size() == 3);
    CHECK(n_features_of(m.meta_model) == 9);
    Rng rng(2);
    for (std::size_t i = 0; i < d.n_rows(); ++i) CHECK(predict_stacking(m, d.row(i)).class_id == d.label(i));
    for (int i = 0; i < 40; ++i) {
        const auto row = testutil::random_row(rng, 4);
        std::vector<double> manual;
        for (const auto& b : m.base_models) {
            const auto p = predict_base(b, row);
            manual.insert(manual.end(), p.distribution.begin(), p.distribution.end());
        }
        const auto expect = predict_base(m.meta_model, manual);
        const auto got = predict_stacking(m, row);
        CHECK(got.class_id == expect.class_id);
        CHECK(got.distribution == expect.distribution);
        CHECK(std::abs(std::accumulate(got.distribution.begin(), got.distribution.end(), 0.0) - 1.0) < 1e-9);
    }
    CHECK_THROWS_AS(predict_stacking(m, std::vector<double>{1, 2}), SchemaError);

    const auto again = fit_stacking(d, specs, small_spec(ModelKind::rf), 5, 9, 3);
    for (int i = 0; i < 40; ++i) {
        const auto row = testutil::random_row(rng, 4);
        CHECK(predict_stacking(m, row).distribution == predict_stacking(again, row).distribution);
    }
}

TEST_CASE("single-class data gives constant predictions") {
    const auto base = testutil::random_dataset(4, 30, 3, 1);
    const std::vector<ModelSpec> specs{small_spec(ModelKind::dt), small_spec(ModelKind::rf), small_spec(ModelKind::et)};
    const auto m = fit_stacking(base, specs, small_spec(ModelKind::dt), 3, 1);
    Rng rng(7);
    for (int i = 0; i < 20; ++i) {
        const auto row = testutil::random_row(rng, 3);
        for (const auto& b : m.base_models) CHECK(predict_base(b, row).class_id == 0);
        CHECK(predict_stacking(m, row).class_id == 0);
    }
}

TEST_CASE("single base with a plain tree meta reproduces the base on training data") {
    // informative features, one label in ten flipped
    const auto clean = testutil::blobs(6, 200, 4, 3);
    std::vector<ClassId> noisy(clean.labels().begin(), clean.labels().end());
    for (std::size_t i = 0; i < noisy.size(); i += 10) noisy[i] = (noisy[i] + 1) % 3;
    const Dataset d(clean.schema(), {clean.values().begin(), clean.values().end()}, noisy, clean.label_names());
    ModelSpec dt = small_spec(ModelKind::dt);
    dt.tree.max_depth = 64;
    dt.tree.min_samples_leaf = 1;
    dt.tree.min_samples_split = 2;
    const std::vector<ModelSpec> specs{dt};
    const auto m = fit_stacking(d, specs, dt, 5, 2);
    const auto base_only = fit_base_model(dt, d, 0);
    std::size_t base_ok = 0, stack_ok = 0;
    for (std::size_t i = 0; i < d.n_rows(); ++i) {
        base_ok += predict_base(base_only, d.row(i)).class_id == d.label(i);
        stack_ok += predict_stacking(m, d.row(i)).class_id == d.label(i);
    }
    CHECK(base_ok == d.n_rows());
    CHECK(stack_ok == base_ok);

    ModelSpec spec = small_spec(ModelKind::stacking);
    spec.stack_bases = {ModelKind::dt};
    CHECK_THROWS_AS(fit_model(spec, d, 0), InputError);
}

TEST_CASE("base and meta selection") {
    SUBCASE("CAN table with false-alarm rates") {
        const std::vector<SingularReport> r{{ModelKind::dt, 0.9999, 328.0, 0.00006},
                                            {ModelKind::rf, 0.9999, 506.8, 0.000003},
                                            {ModelKind::et, 0.9999, 216.3, 0.000005},
                                            {ModelKind::boost, 0.9998, 3499.1, 0.00012}};
        const auto c = select_base_and_meta(r);
        CHECK(c.bases == std::vector<ModelKind>{ModelKind::dt, ModelKind::rf, ModelKind::et});
        CHECK(c.meta == ModelKind::rf);
    }
    SUBCASE("CAN table by time alone") {
        const std::vector<SingularReport> r{{ModelKind::dt, 0.9999, 328.0, {}},
                                            {ModelKind::rf, 0.9999, 506.8, {}},
                                            {ModelKind::et, 0.9999, 216.3, {}},
                                            {ModelKind::boost, 0.9998, 3499.1, {}}};
        const auto c = select_base_and_meta(r);
        CHECK(c.bases == std::vector<ModelKind>{ModelKind::dt, ModelKind::rf, ModelKind::et});
        CHECK(c.meta == ModelKind::et);
    }
    SUBCASE("flow table") {
        const std::vector<SingularReport> r{{ModelKind::dt, 0.9972, 126.7, {}},
                                            {ModelKind::rf, 0.9837, 2421.6, {}},
                                            {ModelKind::et, 0.9343, 2349.6, {}},
                                            {ModelKind::boost, 0.9978, 1637.2, {}}};
        const auto c = select_base_and_meta(r);
        CHECK(c.bases == std::vector<ModelKind>{ModelKind::dt, ModelKind::rf, ModelKind::boost});
        CHECK(c.meta == ModelKind::boost);
    }
    SUBCASE("all equal") {
        std::vector<SingularReport> r{{ModelKind::boost, 0.9, 1.0, {}},
                                      {ModelKind::et, 0.9, 1.0, {}},
                                      {ModelKind::rf, 0.9, 1.0, {}},
                                      {ModelKind::dt, 0.9, 1.0, {}}};
        const auto c = select_base_and_meta(r);
        CHECK(c.bases == std::vector<ModelKind>{ModelKind::dt, ModelKind::rf, ModelKind::et});
        CHECK(c.meta == ModelKind::dt);
    }
}

TEST_CASE("importance averaging") {
    auto r = average_importance({{"a", {0.2, 0.5, 0.3}}, {"b", {0.2, 0.5, 0.3}}});
    for (std::size_t f = 0; f < 3; ++f) CHECK(std::abs(r.averaged[f] - std::vector<double>{0.2, 0.5, 0.3}[f]) < 1e-12);
    CHECK(r.ranking == std::vector<std::size_t>{1, 2, 0});

    r = average_importance({{"a", {1, 0}}, {"b", {0, 1}}});
    CHECK(r.averaged == std::vector<double>{0.5, 0.5});
    CHECK(r.ranking == std::vector<std::size_t>{0, 1});

    // all-zero vectors are left out of the mean
    r = average_importance({{"a", {0.25, 0.75}}, {"b", {0, 0}}});
    CHECK(r.averaged == std::vector<double>{0.25, 0.75});
    CHECK_THROWS_AS(average_importance({{"a", {0, 0}}, {"b", {0, 0}}}), InputError);
    CHECK_THROWS_AS(average_importance({{"a", {1}}, {"b", {0.5, 0.5}}}), InputError);

    Rng rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<NamedImportance> in;
        const std::size_t p = 2 + rng.index(10);
        for (int m = 0; m < 4; ++m) {
            std::vector<double> v(p);
            double s = 0;
            for (double& x : v) s += x = rng.uniform();
            for (double& x : v) x /= s;
            in.push_back({"m", v});
        }
        const auto rep = average_importance(in);
        double total = 0;
        for (std::size_t f = 0; f < p; ++f) {
            double mean = 0;
            for (const auto& m : in) mean += m.values[f];
            mean /= 4;
            CHECK(std::abs(rep.averaged[f] - mean) < 1e-12);
            total += rep.averaged[f];
        }
        CHECK(std::abs(total - 1.0) < 1e-9);
        CHECK(std::equal(rep.selected.begin(), rep.selected.end(), rep.ranking.begin()));
    }
}

TEST_CASE("selection by cumulative importance") {
    CHECK(select_features(report_from({0.5, 0.3, 0.15, 0.05})) == std::vector<std::size_t>{0, 1, 2});
    CHECK(select_features(report_from({0.05, 0.15, 0.5, 0.3})) == std::vector<std::size_t>{2, 3, 1});
    CHECK(select_features(report_from({0, 1, 0})) == std::vector<std::size_t>{1});
    CHECK(select_features(report_from(std::vector<double>(10, 0.1))).size() == 9);

    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t p = 1 + rng.index(15);
        std::vector<double> v(p);
        double s = 0;
        for (double& x : v) s += x = rng.uniform() * rng.uniform();
        for (double& x : v) x /= s;
        const auto rep = report_from(v);
        std::vector<std::size_t> previous;
        for (double t = 0.05; t <= 0.951; t += 0.05) {
            const auto sel = select_features(rep, t);
            CHECK(std::equal(sel.begin(), sel.end(), rep.ranking.begin()));
            CHECK(sel.size() >= previous.size());
            CHECK(std::equal(previous.begin(), previous.end(), sel.begin()));
            CHECK(prefix_sum(rep, sel.size()) >= t - 1e-9);
            if (sel.size() > 1) CHECK(prefix_sum(rep, sel.size() - 1) < t);
            previous = sel;
        }
    }
}

TEST_CASE("per-attack importance finds the separating feature") {
    Rng rng(8);
    std::vector<std::vector<double>> rows;
    std::vector<ClassId> labels;
    for (int i = 0; i < 300; ++i) {
        const auto cls = static_cast<ClassId>(i % 3);
        // feature 2 separates normal (0) from attack 2; feature 0 separates attack 1
        rows.push_back({cls == 1 ? 5.0 + rng.uniform() : rng.uniform(), rng.uniform(),
                        cls == 2 ? 5.0 + rng.uniform() : rng.uniform(), rng.uniform()});
        labels.push_back(cls);
    }
    const auto d = testutil::make_dataset(rows, labels);
    ImportanceOptions opt;
    opt.spec = small_spec(ModelKind::rf);
    const auto ranked = per_attack_importance(d, 2, 0, opt, 1);
    REQUIRE(ranked.size() == 4);
    CHECK(ranked[0].first == 2);
    CHECK(ranked[0].second > 0.9);
    const auto other = per_attack_importance(d, 1, 0, opt, 1);
    CHECK(other[0].first == 0);
    CHECK_THROWS_AS(per_attack_importance(d, 0, 0, opt, 1), InputError);
    CHECK_THROWS_AS(per_attack_importance(d, 5, 0, opt, 1), InputError);

    const auto rep = compute_importance(d, opt, 3);
    CHECK(rep.per_model.size() == 4);
    const auto table = format_importance_table(rep, d.schema());
    CHECK(table.rfind("feature,weight\n", 0) == 0);
}

TEST_CASE("threshold 1.0 keeps exactly the features with weight") {
    CHECK(select_features(report_from({0.1, 0.0, 0.3, 0.2, 0.4, 0.0}), 1.0) == std::vector<std::size_t>{4, 2, 3, 0});
    Rng rng(12);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t p = 2 + rng.index(30);
        std::vector<double> v(p);
        double s = 0;
        for (double& x : v) s += x = rng.uniform() < 0.3 ? 0.0 : rng.uniform();
        if (s == 0) continue;
        for (double& x : v) x /= s;
        const auto n = static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [](double x) { return x > 0; }));
        CHECK(select_features(report_from(v), 1.0).size() == n);
    }
}
