#include "treeids/importance.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "treeids/error.hpp"
#include "treeids/rng.hpp"

namespace treeids {
namespace {

// Neumaier-compensated running sum, so that e.g. ten weights of 0.1 reach 0.9 after nine.
struct CompensatedSum {
    double sum = 0.0;
    double carry = 0.0;

    void add(double x) {
        const double t = sum + x;
        carry += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
        sum = t;
    }
    double value() const { return sum + carry; }
};

} // namespace

ImportanceReport average_importance(std::vector<NamedImportance> per_model) {
    if (per_model.empty()) throw InputError("no importance vectors to average");
    const std::size_t p = per_model.front().values.size();
    std::vector<double> mean(p, 0.0);
    std::size_t used = 0;
    for (const auto& named : per_model) {
        if (named.values.size() != p) throw InputError("importance vectors differ in length");
        if (std::all_of(named.values.begin(), named.values.end(), [](double v) { return v == 0.0; })) continue;
        for (std::size_t f = 0; f < p; ++f) mean[f] += named.values[f];
        ++used;
    }
    if (used == 0) throw InputError("no splits anywhere");
    for (double& v : mean) v /= static_cast<double>(used);
    const double sum = std::accumulate(mean.begin(), mean.end(), 0.0);
    for (double& v : mean) v /= sum;

    ImportanceReport report;
    report.per_model = std::move(per_model);
    report.averaged = std::move(mean);
    report.ranking.resize(p);
    std::iota(report.ranking.begin(), report.ranking.end(), 0);
    std::stable_sort(report.ranking.begin(), report.ranking.end(),
                     [&](std::size_t a, std::size_t b) { return report.averaged[a] > report.averaged[b]; });
    report.selected = select_features(report);
    return report;
}

std::vector<std::size_t> select_features(const ImportanceReport& report, double threshold) {
    std::vector<std::size_t> selected;
    CompensatedSum running;
    for (std::size_t f : report.ranking) {
        // zero-weight tail cannot raise the sum
        if (!selected.empty() && report.averaged[f] == 0.0) break;
        selected.push_back(f);
        running.add(report.averaged[f]);
        if (running.value() >= threshold) break;
    }
    return selected;
}

ImportanceReport compute_importance(const Dataset& dataset, const ImportanceOptions& options, std::uint64_t seed,
                                    int threads) {
    std::vector<NamedImportance> per_model;
    for (ModelKind kind : kSingularKinds) {
        const auto model = fit_base_model(options.spec.with_kind(kind), dataset,
                                          derive_seed(seed, "importance", static_cast<std::uint64_t>(kind)), threads);
        per_model.push_back({std::string(to_string(kind)), base_feature_importance(model)});
    }
    return average_importance(std::move(per_model));
}

std::vector<std::pair<std::size_t, double>> per_attack_importance(const Dataset& dataset, ClassId attack,
                                                                  ClassId normal, const ImportanceOptions& options,
                                                                  std::uint64_t seed, int threads) {
    const auto counts = dataset.class_counts();
    const auto present = [&](ClassId c) {
        return c >= 0 && static_cast<std::size_t>(c) < counts.size() && counts[static_cast<std::size_t>(c)] > 0;
    };
    if (!present(attack) || !present(normal)) throw InputError("per-attack analysis needs both classes present");
    if (attack == normal) throw InputError("attack and normal class must differ");

    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < dataset.n_rows(); ++i) {
        if (dataset.label(i) == attack || dataset.label(i) == normal) rows.push_back(i);
    }
    const Dataset pair = dataset.subset(rows);
    std::vector<double> values(pair.values().begin(), pair.values().end());
    std::vector<ClassId> labels;
    labels.reserve(pair.n_rows());
    for (ClassId id : pair.labels()) labels.push_back(id == attack ? 1 : 0);
    const Dataset binary(pair.schema(), std::move(values), std::move(labels),
                         {dataset.label_names()[static_cast<std::size_t>(normal)],
                          dataset.label_names()[static_cast<std::size_t>(attack)]});

    const auto report = compute_importance(binary, options, derive_seed(seed, "per-attack", static_cast<std::uint64_t>(attack)), threads);
    std::vector<std::pair<std::size_t, double>> ranked;
    for (std::size_t f : report.ranking) ranked.emplace_back(f, report.averaged[f]);
    return ranked;
}

std::string format_importance_table(const ImportanceReport& report, const FeatureSchema& schema) {
    std::ostringstream out;
    out << "feature,weight\n";
    char buf[32];
    for (std::size_t f : report.ranking) {
        std::snprintf(buf, sizeof buf, "%.6f", report.averaged[f]);
        out << schema.names[f] << ',' << buf << '\n';
    }
    return out.str();
}

} // namespace treeids
