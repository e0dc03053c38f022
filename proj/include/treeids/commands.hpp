#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "treeids/artifact.hpp"
#include "treeids/dataset.hpp"
#include "treeids/detect.hpp"
#include "treeids/evaluation.hpp"
#include "treeids/ingest.hpp"
#include "treeids/model.hpp"
#include "treeids/resample.hpp"

namespace treeids {

/// Cleaned, label-consolidated records plus the normalisation computed over them.
/// Stored as `<path>` (CSV, raw values, label name last) and `<path>.meta.json`.
struct PreparedData {
    std::string profile; // can-numeric | can-one-hot | flow
    Dataset dataset;
    NormalizationParams normalization;
    std::string normal_label;

    ClassId normal_class() const;
};

void save_prepared(const PreparedData& data, const std::string& path);
PreparedData load_prepared(const std::string& path);

struct PrepareOptions {
    /// CAN inputs may be written `path=Label` to name the attack class of the file's
    /// injected frames; otherwise it is guessed from the file name.
    std::vector<std::string> inputs;
    std::string profile = "can";       // can | flow
    std::string can_encoding = "numeric"; // numeric | one-hot
    std::optional<std::string> label_map;
    std::string label_column = "Label";
    std::size_t flow_features = kFlowFeatureCount;
    std::optional<double> sample;
    std::uint64_t seed = 0;
    std::string output;
};

struct TrainOptions {
    std::string dataset;
    ModelSpec spec;
    ResampleMethod oversample = ResampleMethod::none;
    std::size_t smote_k = 5;
    double target_ratio = 1.0;
    bool feature_select = false;
    double fs_threshold = 0.9;
    std::uint64_t seed = 0;
    int threads = 1;
    std::string output;
};

struct EvaluateOptions {
    std::string dataset;
    std::optional<std::string> artifact;
    ModelSpec spec;
    std::size_t folds = 5;
    ResampleMethod oversample = ResampleMethod::none;
    std::size_t smote_k = 5;
    double target_ratio = 1.0;
    bool feature_select = false;
    double fs_threshold = 0.9;
    std::uint64_t seed = 0;
    int threads = 1;
};

struct SelectFeaturesOptions {
    std::string dataset;
    ModelSpec spec;
    bool per_attack = false;
    double fs_threshold = 0.9;
    std::size_t top = 3;
    std::uint64_t seed = 0;
    int threads = 1;
    std::optional<std::string> output;
};

struct DetectCommandOptions {
    std::string artifact;
    std::string input = "-";
    std::optional<std::string> profile; // can | flow, checked against the artifact
    std::size_t batch_size = 1024;
    int threads = 1;
};

struct GridSearchOptions {
    std::string dataset;
    ModelSpec spec;
    std::vector<std::size_t> trees{50, 100, 200};
    std::vector<int> depths{4, 6, 8, 10, 12};
    std::size_t folds = 5;
    double tolerance = 0.001;
    std::uint64_t seed = 0;
    int threads = 1;
};

struct GenerateCanOptions {
    std::size_t frames = 50000;
    double attack_share = 0.4;
    std::uint64_t seed = 0;
    std::string output_dir = ".";
};

void cmd_prepare(const PrepareOptions& options, std::ostream& out, std::ostream& err);
ModelArtifact cmd_train(const TrainOptions& options, std::ostream& out);
void cmd_evaluate(const EvaluateOptions& options, std::ostream& out);
void cmd_select_features(const SelectFeaturesOptions& options, std::ostream& out);
DetectSummary cmd_detect(const DetectCommandOptions& options, std::ostream& out);
GridSearchResult cmd_grid_search(const GridSearchOptions& options, std::ostream& out);
void cmd_generate_can(const GenerateCanOptions& options, std::ostream& out);

/// Raises SchemaError naming the first feature where the two schemas disagree.
void require_same_schema(const FeatureSchema& expected, const FeatureSchema& actual);

ResampleMethod parse_resample_method(const std::string& text);

} // namespace treeids
