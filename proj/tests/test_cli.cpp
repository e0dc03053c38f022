#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "support.hpp"
#include "treeids/artifact.hpp"
#include "treeids/commands.hpp"
#include "treeids/detect.hpp"
#include "treeids/error.hpp"
#include "treeids/ingest.hpp"
#include "treeids/synthetic.hpp"

using namespace treeids;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("treeids-test-" + std::to_string(testing_counter()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
    static int testing_counter();
};

int TempDir::testing_counter() {
    static int n = 0;
    return static_cast<int>(::getpid()) * 100 + n++;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

ModelSpec spec_of(ModelKind kind, std::size_t trees = 10, int depth = 6) {
    ModelSpec s;
    s.kind = kind;
    s.n_trees = trees;
    s.tree.max_depth = depth;
    s.stack_folds = 3;
    return s;
}

// generated CAN captures turned into a prepared dataset
std::string prepared_can(const TempDir& dir, std::size_t frames = 3000, std::uint64_t seed = 1) {
    GenerateCanOptions g;
    g.frames = frames;
    g.seed = seed;
    g.output_dir = dir / "raw";
    std::ostringstream sink;
    cmd_generate_can(g, sink);
    PrepareOptions p;
    for (const char* f : {"normal_run_data.csv", "DoS_dataset.csv", "Fuzzy_dataset.csv", "gear_dataset.csv", "RPM_dataset.csv"})
        p.inputs.push_back(dir / ("raw/" + std::string(f)));
    p.output = dir / "can.csv";
    cmd_prepare(p, sink, sink);
    return p.output;
}

ModelArtifact train(const std::string& data, ModelSpec spec, const std::string& out = "", bool fs = false, int threads = 1) {
    TrainOptions t;
    t.dataset = data;
    t.spec = spec;
    t.output = out;
    t.feature_select = fs;
    t.threads = threads;
    t.seed = 5;
    std::ostringstream sink;
    return cmd_train(t, sink);
}

ModelArtifact toy_artifact(ModelKind kind) {
    const auto d = testutil::random_dataset(3, 200, 5, 3, 40);
    ModelArtifact a;
    a.profile = "flow";
    a.schema = d.schema();
    a.normalization = compute_min_max(d);
    a.label_names = d.label_names();
    a.normal_label = "c0";
    a.spec = spec_of(kind);
    a.seed = 11;
    a.train_rows = d.n_rows();
    a.model = fit_model(a.spec, normalize(d, a.normalization), 11);
    return a;
}

} // namespace

TEST_CASE("artifact round trip is byte-identical and predicts bit-identically") {
    TempDir dir;
    for (ModelKind kind : {ModelKind::dt, ModelKind::rf, ModelKind::et, ModelKind::boost, ModelKind::stacking}) {
        CAPTURE(to_string(kind));
        auto a = toy_artifact(kind);
        a.selected_features = std::vector<std::size_t>{0, 1, 2, 3, 4};
        const auto first = dir / "a.json";
        const auto second = dir / "b.json";
        save_model(a, first);
        const auto loaded = load_model(first);
        save_model(loaded, second);
        CHECK(slurp(first) == slurp(second));
        CHECK(loaded.spec == a.spec);
        CHECK(loaded.selected_features == a.selected_features);

        Rng rng(99);
        std::size_t mismatches = 0;
        for (int i = 0; i < 10000; ++i) {
            const auto row = testutil::random_row(rng, 5);
            const auto p = predict(a.model, row);
            const auto q = predict(loaded.model, row);
            mismatches += p.class_id != q.class_id || p.distribution != q.distribution;
        }
        CHECK(mismatches == 0);
    }
}

TEST_CASE("damaged artifacts are refused") {
    TempDir dir;
    const auto a = toy_artifact(ModelKind::rf);
    const auto text = serialize_artifact(a);
    CHECK_THROWS_AS(parse_artifact(text.substr(0, text.size() / 2)), InputError);
    CHECK_THROWS_AS(parse_artifact(""), InputError);
    std::string wrong = text;
    const auto at = wrong.find("\"format_version\": 1");
    REQUIRE(at != std::string::npos);
    wrong.replace(at, 19, "\"format_version\": 2");
    try {
        parse_artifact(wrong);
        FAIL("expected a version error");
    } catch (const InputError& e) {
        CHECK(std::string(e.what()).find("version") != std::string::npos);
    }
    std::ofstream(dir / "cut.json") << text.substr(0, text.size() - 40);
    CHECK_THROWS_AS(load_model(dir / "cut.json"), InputError);
    CHECK_THROWS_AS(load_model(dir / "missing.json"), InputError);
}

TEST_CASE("prepare writes a reloadable dataset") {
    TempDir dir;
    const auto path = prepared_can(dir);
    const auto p = load_prepared(path);
    CHECK(p.profile == "can-numeric");
    CHECK(p.normal_label == "Normal");
    CHECK(p.dataset.n_rows() == 3000);
    CHECK(p.dataset.n_classes() == 5);
    const auto counts = p.dataset.class_counts();
    for (auto c : counts) CHECK(c > 0);
    save_prepared(p, dir / "again.csv");
    CHECK(slurp(path) == slurp(dir / "again.csv"));
    CHECK(slurp(path + ".meta.json") == slurp(dir / "again.csv.meta.json"));

    PrepareOptions bad;
    bad.inputs = {dir / "nope.csv"};
    bad.output = dir / "x.csv";
    std::ostringstream sink;
    CHECK_THROWS_AS(cmd_prepare(bad, sink, sink), InputError);
}

TEST_CASE("single-class flow input warns") {
    TempDir dir;
    {
        std::ofstream f(dir / "benign.csv");
        f << "Destination Port,Flow Duration,Label\n";
        for (int i = 0; i < 20; ++i) f << 80 + i << ',' << 1000 * i << ",BENIGN\n";
    }
    PrepareOptions p;
    p.profile = "flow";
    p.inputs = {dir / "benign.csv"};
    p.output = dir / "flow.csv";
    p.flow_features = 2;
    std::ostringstream out, err;
    cmd_prepare(p, out, err);
    CHECK(out.str().find("BENIGN") != std::string::npos);
    CHECK(err.str().find("warning") != std::string::npos);
    SelectFeaturesOptions s;
    s.dataset = p.output;
    CHECK_THROWS_AS(cmd_select_features(s, out), InputError);
}

TEST_CASE("detect scores a CAN stream") {
    TempDir dir;
    const auto data = prepared_can(dir);
    const auto a = train(data, spec_of(ModelKind::rf, 20, 10), dir / "rf.json");

    // replay a capture file: verdict per record, labels recovered
    SyntheticCanOptions so;
    so.frames = 500;
    so.seed = 77;
    const auto frames = generate_can_frames(so);
    std::ostringstream stream;
    write_can_csv(frames, stream);
    std::string text = stream.str();
    text += "not,a,frame\n\n";

    DetectCommandOptions o;
    o.artifact = dir / "rf.json";
    o.input = dir / "stream.csv";
    o.batch_size = 64;
    std::ofstream(o.input) << text;
    std::ostringstream out;
    const auto summary = cmd_detect(o, out);
    CHECK(summary.records == 501);
    CHECK(summary.parse_errors == 1);

    std::istringstream lines(out.str());
    std::string line;
    std::size_t ordinal = 0, correct = 0, verdicts = 0;
    bool saw_summary = false;
    while (std::getline(lines, line)) {
        if (line.rfind("# ", 0) == 0) {
            saw_summary = true;
            CHECK(line.find("records=501") != std::string::npos);
            continue;
        }
        std::istringstream parts(line);
        std::string ord, cls, conf, lat;
        std::getline(parts, ord, ',');
        std::getline(parts, cls, ',');
        std::getline(parts, conf, ',');
        std::getline(parts, lat, ',');
        CHECK(std::stoul(ord) == ordinal);
        if (ordinal < frames.size()) correct += cls == frames[ordinal].label;
        else CHECK(cls == kParseErrorClass);
        ++ordinal;
        ++verdicts;
    }
    CHECK(saw_summary);
    CHECK(verdicts == 501);
    CHECK(correct >= 495);

    o.profile = "flow";
    CHECK_THROWS_AS(cmd_detect(o, out), SchemaError);
}

TEST_CASE("detect on an empty stream and a perfect model") {
    const auto d = testutil::blobs(1, 60, 2, 2);
    ModelArtifact a;
    a.profile = "flow";
    a.schema = d.schema();
    a.normalization = compute_min_max(d);
    a.label_names = d.label_names();
    a.spec = spec_of(ModelKind::dt);
    a.model = fit_model(a.spec, normalize(d, a.normalization), 0);

    std::istringstream empty("");
    std::ostringstream out;
    auto s = detect_stream(a, empty, out);
    CHECK(s.records == 0);
    CHECK(out.str().find("records=0") != std::string::npos);

    std::ostringstream feed;
    feed << "f1,Label,f0\n";
    for (std::size_t i = 0; i < d.n_rows(); ++i) {
        const auto r = d.row(i);
        char buf[128];
        std::snprintf(buf, sizeof buf, "%.17g,%s,%.17g\n", r[1], d.label_names()[d.label(i)].c_str(), r[0]);
        feed << buf;
    }
    std::istringstream in(feed.str());
    std::ostringstream verdicts;
    s = detect_stream(a, in, verdicts, {7, 1});
    CHECK(s.records == d.n_rows());
    std::istringstream lines(verdicts.str());
    std::string line;
    std::size_t i = 0;
    while (std::getline(lines, line) && i < d.n_rows()) {
        CHECK(line.find(',' + d.label_names()[d.label(i)] + ',') != std::string::npos);
        ++i;
    }
    CHECK(i == d.n_rows());

    std::istringstream missing("f0,Label\n1,c0\n");
    CHECK_THROWS_AS(detect_stream(a, missing, out), SchemaError);
}

TEST_CASE("evaluate checks the schema") {
    TempDir dir;
    const auto data = prepared_can(dir, 2000);
    train(data, spec_of(ModelKind::dt, 1, 12), dir / "dt.json");
    EvaluateOptions e;
    e.dataset = data;
    e.artifact = dir / "dt.json";
    std::ostringstream out;
    cmd_evaluate(e, out);
    CHECK(out.str().find("dt") != std::string::npos);

    FeatureSchema x = FeatureSchema::numeric({"a", "b", "c"});
    FeatureSchema y = FeatureSchema::numeric({"a", "z", "c"});
    try {
        require_same_schema(x, y);
        FAIL("expected a schema error");
    } catch (const SchemaError& err) {
        CHECK(std::string(err.what()).find("'b'") != std::string::npos);
    }
    CHECK_NOTHROW(require_same_schema(x, x));

    e.artifact.reset();
    e.spec = spec_of(ModelKind::rf);
    e.folds = 3;
    std::ostringstream cv;
    cmd_evaluate(e, cv);
    CHECK(cv.str().find("rf fold 3") != std::string::npos);
    CHECK(cv.str().find("rf mean") != std::string::npos);
}

TEST_CASE("training is deterministic end to end") {
    TempDir dir;
    const auto data = prepared_can(dir, 2000);
    for (ModelKind kind : {ModelKind::rf, ModelKind::boost, ModelKind::stacking}) {
        train(data, spec_of(kind), dir / "one.json", kind == ModelKind::rf, 1);
        train(data, spec_of(kind), dir / "two.json", kind == ModelKind::rf, 3);
        CHECK(slurp(dir / "one.json") == slurp(dir / "two.json"));
    }
    const auto stacked = load_model(dir / "one.json");
    const auto& m = std::get<StackingModel>(stacked.model);
    CHECK(m.base_models.size() == 3);

    const auto fs = train(data, spec_of(ModelKind::rf), "", true);
    REQUIRE(fs.selected_features);
    CHECK_FALSE(fs.selected_features->empty());
    std::vector<double> raw(fs.schema.size(), 0.0);
    CHECK(fs.prepare_row(raw).size() == fs.selected_features->size());
    CHECK_THROWS_AS(fs.prepare_row(std::vector<double>{1.0}), SchemaError);
}

TEST_CASE("feature selection output") {
    TempDir dir;
    const auto data = prepared_can(dir, 2000);
    SelectFeaturesOptions s;
    s.dataset = data;
    s.spec = spec_of(ModelKind::rf);
    s.output = dir / "imp.csv";
    std::ostringstream out;
    cmd_select_features(s, out);
    CHECK(slurp(dir / "imp.csv").rfind("feature,weight\n", 0) == 0);
    s.per_attack = true;
    std::ostringstream per;
    cmd_select_features(s, per);
    // three rows per attack class plus a header
    std::size_t n = 0;
    for (char c : per.str()) n += c == '\n';
    CHECK(n == 1 + 4 * 3);
    CHECK(per.str().find("DoS,") != std::string::npos);
}
