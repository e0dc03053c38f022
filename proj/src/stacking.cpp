#include "treeids/stacking.hpp"

#include <algorithm>
#include <string>

#include "treeids/error.hpp"
#include "treeids/rng.hpp"

namespace treeids {
namespace {

std::uint64_t base_seed(std::uint64_t seed, std::size_t base) { return derive_seed(seed, "stack-base", base); }

Dataset meta_dataset(const Dataset& source, std::span<const ModelSpec> specs, std::vector<double> values) {
    std::vector<std::string> names;
    for (std::size_t b = 0; b < specs.size(); ++b) {
        for (const auto& label : source.label_names())
            names.push_back(std::to_string(b) + ":" + std::string(to_string(specs[b].kind)) + ":" + label);
    }
    return Dataset(FeatureSchema::numeric(std::move(names)), std::move(values),
                   {source.labels().begin(), source.labels().end()}, source.label_names());
}

} // namespace

OofResult generate_oof_features(const Dataset& dataset, std::span<const ModelSpec> base_specs, std::size_t k,
                                std::uint64_t seed, int threads) {
    if (k < 2) throw InputError("out-of-fold generation needs k >= 2");
    if (base_specs.empty()) throw InputError("stacking needs at least one base model");
    for (const auto& spec : base_specs) {
        if (spec.kind == ModelKind::stacking) throw InputError("a stacking model cannot be a stacking base");
    }
    const std::size_t classes = dataset.n_classes();
    const std::size_t width = base_specs.size() * classes;
    const auto plan = stratified_folds(dataset, k, derive_seed(seed, "oof-folds"));

    OofResult result;
    for (std::size_t b = 0; b < base_specs.size(); ++b) result.offsets.push_back(b * classes);
    std::vector<double> values(dataset.n_rows() * width, 0.0);
    for (std::size_t fold = 0; fold < k; ++fold) {
        const auto train = plan.train_rows(fold);
        const auto test = plan.test_rows(fold);
        const Dataset train_set = dataset.subset(train);
        for (std::size_t b = 0; b < base_specs.size(); ++b) {
            BaseModel model;
            try {
                model = fit_base_model(base_specs[b], train_set, derive_seed(base_seed(seed, b), "oof", fold), threads);
            } catch (const std::exception& e) {
                throw InputError("out-of-fold fit of base " + std::to_string(b) + " (" +
                                 std::string(to_string(base_specs[b].kind)) + ") failed on fold " +
                                 std::to_string(fold) + ": " + e.what());
            }
            for (std::size_t r : test) {
                const auto pred = predict_base(model, dataset.row(r));
                std::copy(pred.distribution.begin(), pred.distribution.end(),
                          values.begin() + static_cast<std::ptrdiff_t>(r * width + result.offsets[b]));
            }
            result.fits.push_back({fold, b, train, test});
        }
    }
    result.meta = meta_dataset(dataset, base_specs, std::move(values));
    return result;
}

StackingModel fit_stacking(const Dataset& dataset, std::span<const ModelSpec> base_specs, const ModelSpec& meta_spec,
                           std::size_t k, std::uint64_t seed, int threads) {
    if (meta_spec.kind == ModelKind::stacking) throw InputError("the meta learner cannot itself be a stacking model");
    auto oof = generate_oof_features(dataset, base_specs, k, seed, threads);

    StackingModel model;
    model.oof_fold_count = k;
    model.meta_input_offsets = std::move(oof.offsets);
    model.n_features = dataset.n_features();
    model.n_classes = dataset.n_classes();
    model.meta_model = fit_base_model(meta_spec, oof.meta, derive_seed(seed, "stack-meta"), threads);
    for (std::size_t b = 0; b < base_specs.size(); ++b)
        model.base_models.push_back(fit_base_model(base_specs[b], dataset, base_seed(seed, b), threads));
    return model;
}

std::vector<double> stacking_meta_features(const StackingModel& model, std::span<const double> row) {
    if (row.size() != model.n_features)
        throw SchemaError("row has " + std::to_string(row.size()) + " features, stacking model expects " +
                          std::to_string(model.n_features));
    std::vector<double> meta(model.base_models.size() * model.n_classes, 0.0);
    for (std::size_t b = 0; b < model.base_models.size(); ++b) {
        const auto pred = predict_base(model.base_models[b], row);
        std::copy(pred.distribution.begin(), pred.distribution.end(),
                  meta.begin() + static_cast<std::ptrdiff_t>(model.meta_input_offsets[b]));
    }
    return meta;
}

Prediction predict_stacking(const StackingModel& model, std::span<const double> row) {
    return predict_base(model.meta_model, stacking_meta_features(model, row));
}

StackingChoice select_base_and_meta(std::span<const SingularReport> reports) {
    std::vector<SingularReport> ranked(reports.begin(), reports.end());
    if (ranked.size() < 2) throw InputError("base selection needs reports for at least two kinds");
    const auto order = [](ModelKind kind) {
        return static_cast<int>(std::find(std::begin(kSingularKinds), std::end(kSingularKinds), kind) -
                                std::begin(kSingularKinds));
    };
    std::stable_sort(ranked.begin(), ranked.end(), [&](const SingularReport& a, const SingularReport& b) {
        if (a.accuracy != b.accuracy) return a.accuracy > b.accuracy;
        if (a.false_alarm_rate && b.false_alarm_rate && *a.false_alarm_rate != *b.false_alarm_rate)
            return *a.false_alarm_rate < *b.false_alarm_rate;
        if (a.seconds != b.seconds) return a.seconds < b.seconds;
        return order(a.kind) < order(b.kind);
    });
    StackingChoice choice;
    choice.meta = ranked.front().kind;
    const std::size_t keep = std::min<std::size_t>(3, ranked.size());
    for (std::size_t i = 0; i < keep; ++i) choice.bases.push_back(ranked[i].kind);
    std::sort(choice.bases.begin(), choice.bases.end(),
              [&](ModelKind a, ModelKind b) { return order(a) < order(b); });
    return choice;
}

} // namespace treeids
