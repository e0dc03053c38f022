// Training and detection timings on the synthetic CAN generator.
//   bench_training [frames] [threads]

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <string>

#include "treeids/artifact.hpp"
#include "treeids/detect.hpp"
#include "treeids/importance.hpp"
#include "treeids/ingest.hpp"
#include "treeids/parallel.hpp"
#include "treeids/synthetic.hpp"

using namespace treeids;
using Clock = std::chrono::steady_clock;

namespace {

template <class F>
double seconds(F&& f) {
    const auto t = Clock::now();
    f();
    return std::chrono::duration<double>(Clock::now() - t).count();
}

ModelSpec spec_of(ModelKind kind) {
    ModelSpec s;
    s.kind = kind;
    s.n_trees = kind == ModelKind::boost ? 50 : 100;
    s.tree.max_depth = 8;
    s.stack_folds = 3;
    return s;
}

ModelArtifact artifact_for(const Dataset& raw, const NormalizationParams& norm, const Dataset& train,
                           std::optional<std::vector<std::size_t>> selected, int threads) {
    ModelArtifact a;
    a.profile = "can-numeric";
    a.schema = raw.schema();
    a.normalization = norm;
    a.label_names = raw.label_names();
    a.normal_label = "Normal";
    a.spec = spec_of(ModelKind::rf);
    a.selected_features = std::move(selected);
    a.model = fit_model(a.spec, train, 1, threads);
    return a;
}

} // namespace

int main(int argc, char** argv) {
    SyntheticCanOptions so;
    so.frames = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 100000;
    const int threads = argc > 2 ? std::atoi(argv[2]) : default_thread_count();
    const auto frames = generate_can_frames(so);
    const auto raw = encode_can_features(frames, CanEncoding::numeric);
    const auto norm = compute_min_max(raw);
    const auto data = normalize(raw, norm);
    std::printf("%zu frames, %d worker(s) available for the parallel runs\n\n", frames.size(), threads);

    std::printf("%-10s %12s %12s %8s\n", "model", "serial (s)", "parallel (s)", "speedup");
    for (ModelKind kind : {ModelKind::dt, ModelKind::rf, ModelKind::et, ModelKind::boost, ModelKind::stacking}) {
        const auto s = spec_of(kind);
        const double serial = seconds([&] { fit_model(s, data, 1, 1); });
        const double parallel = seconds([&] { fit_model(s, data, 1, threads); });
        std::printf("%-10s %12.3f %12.3f %8.2f\n", std::string(to_string(kind)).c_str(), serial, parallel,
                    serial / std::max(parallel, 1e-9));
    }

    // detection throughput: full feature set vs the 0.9-rule subset
    ImportanceOptions io;
    io.spec = spec_of(ModelKind::rf);
    auto selected = compute_importance(data, io, 1, threads).selected;
    std::sort(selected.begin(), selected.end());
    const auto full = artifact_for(raw, norm, data, std::nullopt, threads);
    const auto reduced = artifact_for(raw, norm, data.select_features(selected), selected, threads);

    std::ostringstream feed;
    write_can_csv(frames, feed);
    const std::string text = feed.str();
    std::printf("\n%-14s %9s %14s %10s %10s\n", "detect", "features", "records/s", "mean us", "p99 us");
    for (const auto* a : {&full, &reduced}) {
        std::istringstream in(text);
        std::ostringstream sink;
        DetectOptions d;
        d.threads = threads;
        const auto s = detect_stream(*a, in, sink, d);
        std::printf("%-14s %9zu %14.0f %10.3f %10.3f\n", a == &full ? "full RF" : "FS-reduced RF",
                    a->selected_features ? a->selected_features->size() : a->schema.size(), s.records_per_sec, s.mean_us,
                    s.p99_us);
    }
    return 0;
}
