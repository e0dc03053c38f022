#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "treeids/dataset.hpp"
#include "treeids/estimator.hpp"

namespace treeids {

/// A trained model plus everything needed to score raw records: the full input schema,
/// the training-time normalisation, class names and the selected-feature mask.
///
/// On disk it is JSON with sorted keys and doubles printed with 17 significant digits,
/// so save -> load -> save reproduces the file byte for byte.
struct ModelArtifact {
    static constexpr int kFormatVersion = 1;

    int format_version = kFormatVersion;
    /// "can-numeric", "can-one-hot" or "flow".
    std::string profile;
    FeatureSchema schema;
    NormalizationParams normalization;
    std::vector<std::string> label_names;
    std::optional<std::string> normal_label;
    std::optional<std::vector<std::size_t>> selected_features;
    Model model;
    ModelSpec spec;
    std::uint64_t seed = 0;
    std::size_t train_rows = 0;

    /// Normalises a raw row laid out by `schema` and applies the feature mask.
    std::vector<double> prepare_row(std::span<const double> raw) const;
};

std::string serialize_artifact(const ModelArtifact& artifact);
ModelArtifact parse_artifact(std::string_view text);

void save_model(const ModelArtifact& artifact, const std::string& path);
ModelArtifact load_model(const std::string& path);

/// Canonical text form of a bare model (used for determinism checks).
std::string serialize_model(const Model& model);

} // namespace treeids
