#include "treeids/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <limits>
#include <sstream>

#include "treeids/error.hpp"
#include "treeids/importance.hpp"
#include "treeids/rng.hpp"

namespace treeids {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::optional<double> ratio(std::size_t num, std::size_t den) {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

double harmonic(const std::optional<double>& p, const std::optional<double>& r) {
    if (!p || !r || *p + *r == 0.0) return 0.0;
    return 2.0 * *p * *r / (*p + *r);
}

std::optional<double> mean_defined(const std::vector<FoldReport>& folds,
                                   std::optional<double> MetricsReport::*field) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& f : folds) {
        if (const auto& v = f.metrics.*field) {
            sum += *v;
            ++n;
        }
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
}

} // namespace

std::size_t ConfusionMatrix::total() const {
    std::size_t sum = 0;
    for (auto c : counts) sum += c;
    return sum;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
    if (k == 0 && counts.empty()) {
        *this = other;
        return *this;
    }
    if (other.k != k) throw InvariantError("confusion matrices of different sizes");
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
    return *this;
}

ConfusionMatrix confusion_matrix(std::span<const ClassId> truth, std::span<const ClassId> predicted, std::size_t k) {
    if (truth.size() != predicted.size()) throw InputError("label vectors differ in length");
    ConfusionMatrix cm;
    cm.k = k;
    cm.counts.assign(k * k, 0);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const auto t = truth[i];
        const auto p = predicted[i];
        if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= k || static_cast<std::size_t>(p) >= k)
            throw InputError("label out of range [0, " + std::to_string(k) + ")");
        ++cm.counts[static_cast<std::size_t>(t) * k + static_cast<std::size_t>(p)];
    }
    return cm;
}

MetricsReport compute_metrics(const ConfusionMatrix& cm, ClassId normal_class) {
    const std::size_t total = cm.total();
    if (total == 0) throw InputError("confusion matrix is empty");
    if (normal_class < 0 || static_cast<std::size_t>(normal_class) >= cm.k) throw InputError("normal class out of range");
    const auto normal = static_cast<std::size_t>(normal_class);

    MetricsReport report;
    std::size_t trace = 0;
    std::size_t attack_rows = 0, detected = 0, normal_rows = 0, false_alarms = 0, predicted_attack = 0;
    for (std::size_t t = 0; t < cm.k; ++t) {
        trace += cm.at(t, t);
        for (std::size_t p = 0; p < cm.k; ++p) {
            const std::size_t c = cm.at(t, p);
            if (t != normal) attack_rows += c;
            if (t != normal && p != normal) detected += c;
            if (t == normal) normal_rows += c;
            if (t == normal && p != normal) false_alarms += c;
            if (p != normal) predicted_attack += c;
        }
    }
    report.accuracy = static_cast<double>(trace) / static_cast<double>(total);
    report.detection_rate = ratio(detected, attack_rows);
    report.false_alarm_rate = ratio(false_alarms, normal_rows);
    report.attack_precision = ratio(detected, predicted_attack);
    if (report.attack_precision && report.detection_rate)
        report.attack_f1 = harmonic(report.attack_precision, report.detection_rate);

    report.per_class.resize(cm.k);
    double weighted = 0.0, macro = 0.0;
    std::size_t macro_n = 0;
    for (std::size_t c = 0; c < cm.k; ++c) {
        std::size_t support = 0, predicted = 0;
        for (std::size_t o = 0; o < cm.k; ++o) {
            support += cm.at(c, o);
            predicted += cm.at(o, c);
        }
        auto& m = report.per_class[c];
        m.support = support;
        m.precision = ratio(cm.at(c, c), predicted);
        m.recall = ratio(cm.at(c, c), support);
        m.f1 = harmonic(m.precision, m.recall);
        weighted += m.f1 * static_cast<double>(support);
        if (support > 0 || predicted > 0) {
            macro += m.f1;
            ++macro_n;
        }
    }
    report.f1_weighted = weighted / static_cast<double>(total);
    report.f1_macro = macro_n ? macro / static_cast<double>(macro_n) : 0.0;
    return report;
}

MetricsReport evaluate_model(const Model& model, const Dataset& dataset, ClassId normal_class, int threads,
                             ConfusionMatrix* confusion) {
    const auto start = Clock::now();
    const auto predicted = predict_labels(model, dataset, threads);
    const double elapsed = seconds_since(start);
    const auto cm = confusion_matrix(dataset.labels(), predicted, dataset.n_classes());
    auto report = compute_metrics(cm, normal_class);
    report.predict_seconds = elapsed;
    if (confusion) *confusion = cm;
    return report;
}

CvReport cross_validate(const ModelSpec& spec, const Dataset& dataset, ClassId normal_class, const CvOptions& options) {
    if (options.k < 2) throw InputError("cross-validation needs k >= 2");
    const auto plan = stratified_folds(dataset, options.k, derive_seed(options.seed, "cv-folds"));

    CvReport report;
    for (std::size_t fold = 0; fold < options.k; ++fold) {
        Dataset train = dataset.subset(plan.train_rows(fold));
        Dataset test = dataset.subset(plan.test_rows(fold));
        if (options.resample != ResampleMethod::none) {
            const auto resample_plan = equalizing_plan(train, options.resample, options.target_ratio, options.smote_k,
                                                       derive_seed(options.seed, "cv-resample", fold));
            train = resample(train, resample_plan, options.threads);
        }

        std::vector<std::size_t> features;
        if (options.feature_subset) {
            features = *options.feature_subset;
        } else if (options.select_threshold) {
            const auto importance = compute_importance(train, {spec.kind == ModelKind::stacking ? spec.with_kind(ModelKind::rf) : spec},
                                                       derive_seed(options.seed, "cv-select", fold), options.threads);
            features = select_features(importance, *options.select_threshold);
            std::sort(features.begin(), features.end());
        }
        if (!features.empty()) {
            train = train.select_features(features);
            test = test.select_features(features);
        }

        const auto start = Clock::now();
        const Model model = fit_model(spec, train, derive_seed(options.seed, "cv-fit", fold), options.threads);
        const double train_seconds = seconds_since(start);

        FoldReport fr;
        fr.fold = fold;
        fr.metrics = evaluate_model(model, test, normal_class, options.threads, &fr.confusion);
        fr.metrics.train_seconds = train_seconds;
        fr.train_rows = train.n_rows();
        fr.test_rows = test.n_rows();
        fr.features = std::move(features);
        report.pooled += fr.confusion;
        report.folds.push_back(std::move(fr));
    }

    auto& mean = report.mean;
    const double n = static_cast<double>(report.folds.size());
    for (const auto& f : report.folds) {
        mean.accuracy += f.metrics.accuracy / n;
        mean.f1_weighted += f.metrics.f1_weighted / n;
        mean.f1_macro += f.metrics.f1_macro / n;
        mean.train_seconds += f.metrics.train_seconds;
        mean.predict_seconds += f.metrics.predict_seconds;
    }
    mean.detection_rate = mean_defined(report.folds, &MetricsReport::detection_rate);
    mean.false_alarm_rate = mean_defined(report.folds, &MetricsReport::false_alarm_rate);
    mean.attack_precision = mean_defined(report.folds, &MetricsReport::attack_precision);
    mean.attack_f1 = mean_defined(report.folds, &MetricsReport::attack_f1);
    report.pooled_metrics = compute_metrics(report.pooled, normal_class);
    report.pooled_metrics.train_seconds = mean.train_seconds;
    report.pooled_metrics.predict_seconds = mean.predict_seconds;
    mean.per_class = report.pooled_metrics.per_class;
    return report;
}

GridSearchResult grid_search(std::span<const std::size_t> tree_grid, std::span<const int> depth_grid,
                             const GridEvaluator& evaluate, double tolerance) {
    if (tree_grid.empty() || depth_grid.empty()) throw InputError("grid search needs non-empty grids");
    if (!std::is_sorted(tree_grid.begin(), tree_grid.end()) ||
        std::adjacent_find(tree_grid.begin(), tree_grid.end()) != tree_grid.end() ||
        !std::is_sorted(depth_grid.begin(), depth_grid.end()) ||
        std::adjacent_find(depth_grid.begin(), depth_grid.end()) != depth_grid.end())
        throw InputError("grid values must be strictly ascending");

    GridSearchResult result;
    result.chosen_accuracy = -std::numeric_limits<double>::infinity();
    double best_depth_row = -std::numeric_limits<double>::infinity();
    bool dropped = false;
    for (int depth : depth_grid) {
        double row_best = -std::numeric_limits<double>::infinity();
        for (std::size_t trees : tree_grid) {
            const auto score = evaluate(trees, depth);
            result.evaluated.push_back({trees, depth, score.accuracy, score.seconds});
            if (score.accuracy > result.chosen_accuracy) {
                result.chosen_accuracy = score.accuracy;
                result.chosen_trees = trees;
                result.chosen_depth = depth;
            }
            if (score.accuracy > row_best) {
                row_best = score.accuracy;
            } else if (score.accuracy < row_best - tolerance) {
                dropped = true;
                break;
            }
        }
        if (row_best > best_depth_row) {
            best_depth_row = row_best;
        } else if (row_best < best_depth_row - tolerance) {
            dropped = true;
            break;
        }
    }
    result.stop_reason = dropped ? GridStop::accuracy_drop : GridStop::exhausted;
    return result;
}

GridSearchResult grid_search(const ModelSpec& spec, const Dataset& dataset, ClassId normal_class,
                             std::span<const std::size_t> tree_grid, std::span<const int> depth_grid,
                             const CvOptions& options, double tolerance) {
    return grid_search(
        tree_grid, depth_grid,
        [&](std::size_t trees, int depth) {
            ModelSpec point = spec;
            point.n_trees = trees;
            point.tree.max_depth = depth;
            const auto cv = cross_validate(point, dataset, normal_class, options);
            return GridScore{cv.mean.accuracy, cv.mean.train_seconds};
        },
        tolerance);
}

std::string format_metrics_table(const std::vector<std::pair<std::string, MetricsReport>>& rows) {
    std::size_t name_width = 6;
    for (const auto& [name, _] : rows) name_width = std::max(name_width, name.size());
    const auto pct = [](const std::optional<double>& v) {
        if (!v) return std::string("n/a");
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4f", *v * 100.0);
        return std::string(buf);
    };
    std::ostringstream out;
    char line[256];
    std::snprintf(line, sizeof line, "%-*s %10s %10s %10s %8s %20s\n", static_cast<int>(name_width), "Method",
                  "Acc (%)", "DR (%)", "FAR (%)", "F1", "Execution Time (s)");
    out << line;
    for (const auto& [name, m] : rows) {
        char f1[32], secs[32];
        std::snprintf(f1, sizeof f1, "%.4f", m.f1_weighted);
        std::snprintf(secs, sizeof secs, "%.3f", m.train_seconds);
        std::snprintf(line, sizeof line, "%-*s %10s %10s %10s %8s %20s\n", static_cast<int>(name_width), name.c_str(),
                      pct(m.accuracy).c_str(), pct(m.detection_rate).c_str(), pct(m.false_alarm_rate).c_str(), f1, secs);
        out << line;
    }
    return out.str();
}

} // namespace treeids
