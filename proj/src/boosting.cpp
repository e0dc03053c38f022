#include "treeids/boosting.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "treeids/error.hpp"
#include "treeids/parallel.hpp"

namespace treeids {
namespace {

constexpr double kTieEps = 1e-12;
// Splits whose gain does not clear this are rejected (gain <= 0 up to rounding).
constexpr double kMinGain = 1e-12;

using SortedColumns = std::vector<std::vector<std::uint32_t>>;

SortedColumns presort(const Dataset& data) {
    const std::size_t n = data.n_rows();
    const std::size_t p = data.n_features();
    const auto values = data.values();
    SortedColumns sorted(p);
    for (std::size_t f = 0; f < p; ++f) {
        auto& col = sorted[f];
        col.resize(n);
        std::iota(col.begin(), col.end(), 0U);
        std::stable_sort(col.begin(), col.end(),
                         [&](std::uint32_t a, std::uint32_t b) { return values[a * p + f] < values[b * p + f]; });
    }
    return sorted;
}

double midpoint(double lo, double hi) {
    const double mid = lo + (hi - lo) / 2.0;
    return mid >= hi ? lo : mid;
}

struct GrownTree {
    DecisionTree tree;
    std::vector<double> row_output;
};

/// Level-wise exact greedy growth over presorted columns: one pass per feature per level.
GrownTree grow_gradient_tree(const Dataset& data, const SortedColumns& sorted, std::span<const double> grad,
                             std::span<const double> hess, const BoostParams& params) {
    const std::size_t n = data.n_rows();
    const std::size_t p = data.n_features();
    const auto values = data.values();

    GrownTree out;
    out.row_output.assign(n, 0.0);
    auto& tree = out.tree;
    tree.task = TreeTask::boosting;
    tree.n_features = p;
    tree.n_classes = data.n_classes();
    tree.schema_fingerprint = data.schema().fingerprint();
    tree.params.max_depth = params.max_depth;
    tree.params.min_samples_split = 2;
    tree.params.min_samples_leaf = 1;
    tree.params.seed = params.seed;

    struct Slot {
        std::int32_t node;
        GradStats total;
        std::size_t count = 0;
        bool splittable = false;
        bool has_best = false;
        std::size_t feature = 0;
        double threshold = 0.0;
        double gain = 0.0;
    };
    struct Scan {
        GradStats left;
        std::size_t count = 0;
        double last = 0.0;
    };

    std::vector<std::int32_t> pos(n, 0);
    std::vector<Slot> slots(1);
    slots[0].node = 0;
    tree.nodes.emplace_back();
    std::vector<Scan> scans;

    for (int depth = 0; !slots.empty(); ++depth) {
        for (auto& s : slots) {
            s.total = {};
            s.count = 0;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (pos[r] < 0) continue;
            auto& s = slots[static_cast<std::size_t>(pos[r])];
            s.total += {grad[r], hess[r]};
            ++s.count;
        }
        bool any_splittable = false;
        for (auto& s : slots) {
            s.splittable = depth < params.max_depth && s.count >= 2;
            any_splittable |= s.splittable;
        }

        if (any_splittable) {
            scans.assign(slots.size(), Scan{});
            for (std::size_t f = 0; f < p; ++f) {
                for (auto& sc : scans) sc = Scan{};
                for (std::uint32_t r : sorted[f]) {
                    const std::int32_t slot_index = pos[r];
                    if (slot_index < 0) continue;
                    auto& s = slots[static_cast<std::size_t>(slot_index)];
                    if (!s.splittable) continue;
                    auto& sc = scans[static_cast<std::size_t>(slot_index)];
                    const double v = values[std::size_t{r} * p + f];
                    if (sc.count > 0 && v != sc.last) {
                        const double gain = split_gain(sc.left, s.total - sc.left, params.lambda, params.gamma);
                        if (gain > kMinGain && (!s.has_best || gain > s.gain + kTieEps)) {
                            s.has_best = true;
                            s.gain = gain;
                            s.feature = f;
                            s.threshold = midpoint(sc.last, v);
                        }
                    }
                    sc.left += {grad[r], hess[r]};
                    ++sc.count;
                    sc.last = v;
                }
            }
        }

        // Finalise this level: split nodes get two children, the rest become leaves.
        std::vector<Slot> next;
        std::vector<std::int32_t> child_slot(slots.size() * 2, -1);
        std::vector<double> leaf_value(slots.size(), 0.0);
        for (std::size_t si = 0; si < slots.size(); ++si) {
            const auto& s = slots[si];
            auto& node = tree.nodes[static_cast<std::size_t>(s.node)];
            node.samples = s.count;
            node.impurity = s.total.h > 0.0 ? leaf_objective(s.total, params.lambda, 0.0) : 0.0;
            if (s.has_best) {
                node.feature = static_cast<std::int32_t>(s.feature);
                node.threshold = s.threshold;
                node.gain = s.gain;
                for (int side = 0; side < 2; ++side) {
                    const auto index = static_cast<std::int32_t>(tree.nodes.size());
                    tree.nodes.emplace_back();
                    (side == 0 ? tree.nodes[static_cast<std::size_t>(s.node)].left
                               : tree.nodes[static_cast<std::size_t>(s.node)].right) = index;
                    child_slot[si * 2 + static_cast<std::size_t>(side)] = static_cast<std::int32_t>(next.size());
                    Slot child;
                    child.node = index;
                    next.push_back(child);
                }
            } else {
                // Adding 0.0 turns a negative zero into a positive one.
                node.weight = params.learning_rate * optimal_leaf_weight(s.total, params.lambda) + 0.0;
                leaf_value[si] = node.weight;
            }
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (pos[r] < 0) continue;
            const auto si = static_cast<std::size_t>(pos[r]);
            const auto& s = slots[si];
            if (s.has_best) {
                const bool left = values[r * p + s.feature] <= s.threshold;
                pos[r] = child_slot[si * 2 + (left ? 0 : 1)];
            } else {
                out.row_output[r] = leaf_value[si];
                pos[r] = -1;
            }
        }
        slots = std::move(next);
    }
    canonicalize_preorder(tree);
    return out;
}

double mean_log_loss(std::span<const double> scores, std::span<const ClassId> labels, std::size_t k) {
    double total = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double* s = scores.data() + i * k;
        const double top = *std::max_element(s, s + k);
        double sum = 0.0;
        for (std::size_t c = 0; c < k; ++c) sum += std::exp(s[c] - top);
        total += top + std::log(sum) - s[static_cast<std::size_t>(labels[i])];
    }
    return total / static_cast<double>(labels.size());
}

} // namespace

void BoostParams::validate() const {
    if (max_depth < 1) throw InputError("boosting max depth must be >= 1");
    if (lambda < 0.0 || gamma < 0.0) throw InputError("boosting penalties must be non-negative");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw InputError("learning rate must be in (0, 1]");
}

double leaf_objective(GradStats stats, double lambda, double gamma) {
    const double denom = stats.h + lambda;
    return (denom > 0.0 ? -0.5 * stats.g * stats.g / denom : 0.0) + gamma;
}

double split_gain(GradStats left, GradStats right, double lambda, double gamma) {
    const auto term = [lambda](const GradStats& s) {
        const double denom = s.h + lambda;
        return denom > 0.0 ? s.g * s.g / denom : 0.0;
    };
    GradStats parent = left;
    parent += right;
    return 0.5 * (term(left) + term(right) - term(parent)) - gamma;
}

double optimal_leaf_weight(GradStats stats, double lambda) {
    const double denom = stats.h + lambda;
    return denom > 0.0 ? -stats.g / denom : 0.0;
}

std::vector<double> softmax(std::span<const double> scores) {
    std::vector<double> out(scores.size());
    if (scores.empty()) return out;
    const double top = *std::max_element(scores.begin(), scores.end());
    double sum = 0.0;
    for (std::size_t c = 0; c < scores.size(); ++c) sum += out[c] = std::exp(scores[c] - top);
    for (double& v : out) v /= sum;
    return out;
}

BoostedModel fit_boosted(const Dataset& dataset, const BoostParams& params, int threads, BoostTrace* trace) {
    params.validate();
    dataset.require_learnable();
    const std::size_t k = dataset.n_classes();
    if (params.class_count != 0 && params.class_count != k)
        throw InputError("boosting class count " + std::to_string(params.class_count) + " does not match the " +
                         std::to_string(k) + " dataset classes");
    if (k < 2) throw InputError("boosting needs at least two classes");

    BoostedModel model;
    model.params = params;
    model.params.class_count = k;
    model.n_features = dataset.n_features();
    model.n_classes = k;
    model.base_score.assign(k, 0.0);

    const std::size_t n = dataset.n_rows();
    const auto labels = dataset.labels();
    const auto sorted = presort(dataset);
    std::vector<double> scores(n * k, 0.0);
    std::vector<double> prob(n * k);
    if (trace) trace->train_loss = {mean_log_loss(scores, labels, k)};

    for (std::size_t round = 0; round < params.rounds; ++round) {
        for (std::size_t i = 0; i < n; ++i) {
            const auto p = softmax(std::span<const double>(scores.data() + i * k, k));
            std::copy(p.begin(), p.end(), prob.begin() + static_cast<std::ptrdiff_t>(i * k));
        }
        std::vector<GrownTree> grown(k);
        parallel_for(k, threads, [&](std::size_t c) {
            std::vector<double> grad(n), hess(n);
            for (std::size_t i = 0; i < n; ++i) {
                const double pc = prob[i * k + c];
                grad[i] = pc - (static_cast<std::size_t>(labels[i]) == c ? 1.0 : 0.0);
                hess[i] = pc * (1.0 - pc);
            }
            grown[c] = grow_gradient_tree(dataset, sorted, grad, hess, params);
        });
        auto& stage = model.stages.emplace_back();
        stage.reserve(k);
        for (std::size_t c = 0; c < k; ++c) {
            for (std::size_t i = 0; i < n; ++i) scores[i * k + c] += grown[c].row_output[i];
            stage.push_back(std::move(grown[c].tree));
        }
        if (trace) trace->train_loss.push_back(mean_log_loss(scores, labels, k));
    }
    return model;
}

std::vector<double> boosted_scores(const BoostedModel& model, std::span<const double> row) {
    if (row.size() != model.n_features)
        throw SchemaError("row has " + std::to_string(row.size()) + " features, model expects " +
                          std::to_string(model.n_features));
    std::vector<double> scores = model.base_score;
    for (const auto& stage : model.stages) {
        for (std::size_t c = 0; c < stage.size(); ++c) scores[c] += stage[c].nodes[stage[c].leaf_index(row)].weight;
    }
    return scores;
}

Prediction predict_boosted(const BoostedModel& model, std::span<const double> row) {
    Prediction out;
    out.distribution = softmax(boosted_scores(model, row));
    out.class_id = static_cast<ClassId>(std::max_element(out.distribution.begin(), out.distribution.end()) -
                                        out.distribution.begin());
    return out;
}

std::vector<double> boosted_feature_importance(const BoostedModel& model) {
    std::vector<double> importance(model.n_features, 0.0);
    for (const auto& stage : model.stages) {
        for (const auto& tree : stage) {
            for (const auto& node : tree.nodes) {
                if (!node.is_leaf()) importance[static_cast<std::size_t>(node.feature)] += node.gain;
            }
        }
    }
    const double sum = std::accumulate(importance.begin(), importance.end(), 0.0);
    if (sum > 0.0) {
        for (double& v : importance) v /= sum;
    }
    return importance;
}

} // namespace treeids
