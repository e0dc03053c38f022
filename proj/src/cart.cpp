#include "treeids/cart.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "treeids/error.hpp"

namespace treeids {
namespace {

// Decreases closer than this are treated as ties.
constexpr double kTieEps = 1e-12;

bool better(const SplitCandidate& cand, const std::optional<SplitCandidate>& best) {
    if (!best) return true;
    if (cand.impurity_decrease > best->impurity_decrease + kTieEps) return true;
    if (cand.impurity_decrease < best->impurity_decrease - kTieEps) return false;
    if (cand.feature != best->feature) return cand.feature < best->feature;
    return cand.threshold < best->threshold;
}

double impurity_of(Criterion criterion, std::span<const double> counts, double total) {
    if (criterion == Criterion::gini) {
        double sq = 0.0;
        for (double c : counts) sq += c * c;
        return 1.0 - sq / (total * total);
    }
    double h = 0.0;
    for (double c : counts) {
        if (c > 0.0) {
            const double p = c / total;
            h -= p * std::log2(p);
        }
    }
    return h;
}

double midpoint(double lo, double hi) {
    const double mid = lo + (hi - lo) / 2.0;
    return mid >= hi ? lo : mid;
}

class SplitFinder {
public:
    SplitFinder(const Dataset& data, const TreeParams& params)
        : data_(data), params_(params), k_(data.n_classes()), p_(data.n_features()), left_(k_), right_(k_) {}

    /// Evaluates one feature. Returns false when the feature is constant over `rows`.
    bool evaluate(std::span<const std::size_t> rows, std::size_t feature, std::span<const double> node_counts,
                  double node_impurity, Rng& rng, std::optional<SplitCandidate>& best) {
        return params_.split_mode == SplitMode::exact
                   ? evaluate_exact(rows, feature, node_counts, node_impurity, best)
                   : evaluate_random(rows, feature, node_counts, node_impurity, rng, best);
    }

private:
    void consider(std::size_t feature, double threshold, double n_left, double n_right, double node_impurity,
                  std::optional<SplitCandidate>& best) {
        const double n = n_left + n_right;
        const double decrease = node_impurity - (n_left / n) * impurity_of(params_.criterion, left_, n_left) -
                                (n_right / n) * impurity_of(params_.criterion, right_, n_right);
        if (!(decrease > kTieEps)) return;
        SplitCandidate cand{feature, threshold, decrease, static_cast<std::size_t>(n_left),
                            static_cast<std::size_t>(n_right)};
        if (better(cand, best)) best = cand;
    }

    bool evaluate_exact(std::span<const std::size_t> rows, std::size_t feature, std::span<const double> node_counts,
                        double node_impurity, std::optional<SplitCandidate>& best) {
        const auto values = data_.values();
        pairs_.resize(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i)
            pairs_[i] = {values[rows[i] * p_ + feature], data_.label(rows[i])};
        std::sort(pairs_.begin(), pairs_.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        if (pairs_.front().first == pairs_.back().first) return false;

        std::fill(left_.begin(), left_.end(), 0.0);
        std::copy(node_counts.begin(), node_counts.end(), right_.begin());
        const std::size_t n = rows.size();
        const std::size_t min_leaf = params_.min_samples_leaf;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const auto c = static_cast<std::size_t>(pairs_[i].second);
            left_[c] += 1.0;
            right_[c] -= 1.0;
            if (pairs_[i].first == pairs_[i + 1].first) continue;
            const std::size_t n_left = i + 1;
            if (n_left < min_leaf) continue;
            if (n - n_left < min_leaf) break;
            consider(feature, midpoint(pairs_[i].first, pairs_[i + 1].first), static_cast<double>(n_left),
                     static_cast<double>(n - n_left), node_impurity, best);
        }
        return true;
    }

    bool evaluate_random(std::span<const std::size_t> rows, std::size_t feature, std::span<const double> node_counts,
                         double node_impurity, Rng& rng, std::optional<SplitCandidate>& best) {
        const auto values = data_.values();
        double lo = values[rows[0] * p_ + feature];
        double hi = lo;
        for (std::size_t r : rows) {
            const double v = values[r * p_ + feature];
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (lo == hi) return false;
        double threshold = lo + rng.uniform() * (hi - lo);
        if (threshold >= hi) threshold = lo;

        std::fill(left_.begin(), left_.end(), 0.0);
        double n_left = 0.0;
        for (std::size_t r : rows) {
            if (values[r * p_ + feature] <= threshold) {
                left_[static_cast<std::size_t>(data_.label(r))] += 1.0;
                n_left += 1.0;
            }
        }
        for (std::size_t c = 0; c < k_; ++c) right_[c] = node_counts[c] - left_[c];
        const double n_right = static_cast<double>(rows.size()) - n_left;
        const auto min_leaf = static_cast<double>(params_.min_samples_leaf);
        if (n_left >= min_leaf && n_right >= min_leaf)
            consider(feature, threshold, n_left, n_right, node_impurity, best);
        return true;
    }

    const Dataset& data_;
    const TreeParams& params_;
    std::size_t k_;
    std::size_t p_;
    std::vector<double> left_;
    std::vector<double> right_;
    std::vector<std::pair<double, ClassId>> pairs_;
};

std::vector<double> count_classes(const Dataset& data, std::span<const std::size_t> rows) {
    std::vector<double> counts(data.n_classes(), 0.0);
    for (std::size_t r : rows) counts[static_cast<std::size_t>(data.label(r))] += 1.0;
    return counts;
}

} // namespace

std::size_t MaxFeatures::resolve(std::size_t n_features) const {
    switch (mode) {
    case Mode::all: return n_features;
    case Mode::sqrt:
        return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n_features)))));
    case Mode::fixed: return std::clamp<std::size_t>(count, 1, std::max<std::size_t>(1, n_features));
    }
    return n_features;
}

void TreeParams::validate() const {
    if (max_depth < 1) throw InputError("max depth must be >= 1");
    if (min_samples_split < 2) throw InputError("min samples split must be >= 2");
    if (min_samples_leaf < 1) throw InputError("min samples leaf must be >= 1");
    if (max_features.mode == MaxFeatures::Mode::fixed && max_features.count == 0)
        throw InputError("fixed feature subset size must be >= 1");
}

std::size_t DecisionTree::leaf_index(std::span<const double> row) const {
    std::size_t node = 0;
    while (!nodes[node].is_leaf()) {
        const auto& n = nodes[node];
        node = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return node;
}

std::size_t DecisionTree::depth() const {
    if (nodes.empty()) return 0;
    std::size_t deepest = 0;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
    while (!stack.empty()) {
        const auto [node, d] = stack.back();
        stack.pop_back();
        deepest = std::max(deepest, d);
        if (!nodes[node].is_leaf()) {
            stack.emplace_back(static_cast<std::size_t>(nodes[node].left), d + 1);
            stack.emplace_back(static_cast<std::size_t>(nodes[node].right), d + 1);
        }
    }
    return deepest;
}

std::size_t DecisionTree::leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

double gini_impurity(std::span<const double> class_counts) {
    const double total = std::accumulate(class_counts.begin(), class_counts.end(), 0.0);
    if (!(total > 0.0)) throw InputError("impurity of an empty node is undefined");
    return impurity_of(Criterion::gini, class_counts, total);
}

double entropy_impurity(std::span<const double> class_counts) {
    const double total = std::accumulate(class_counts.begin(), class_counts.end(), 0.0);
    if (!(total > 0.0)) throw InputError("impurity of an empty node is undefined");
    return impurity_of(Criterion::entropy, class_counts, total);
}

std::optional<SplitCandidate> best_split(const Dataset& dataset, std::span<const std::size_t> rows,
                                         const TreeParams& params, std::span<const std::size_t> features, Rng& rng) {
    if (rows.size() < params.min_samples_split || rows.empty()) return std::nullopt;
    const auto counts = count_classes(dataset, rows);
    const double impurity = impurity_of(params.criterion, counts, static_cast<double>(rows.size()));
    SplitFinder finder(dataset, params);
    std::optional<SplitCandidate> best;
    for (std::size_t f : features) {
        if (f >= dataset.n_features()) throw InputError("candidate feature out of range");
        finder.evaluate(rows, f, counts, impurity, rng, best);
    }
    return best;
}

DecisionTree fit_tree(const Dataset& dataset, const TreeParams& params) {
    std::vector<std::size_t> rows(dataset.n_rows());
    std::iota(rows.begin(), rows.end(), 0);
    return fit_tree(dataset, rows, params);
}

DecisionTree fit_tree(const Dataset& dataset, std::span<const std::size_t> input_rows, const TreeParams& params) {
    params.validate();
    if (input_rows.empty()) throw InputError("cannot fit a tree on zero rows");
    if (dataset.n_features() == 0) throw InputError("dataset has no features");

    DecisionTree tree;
    tree.params = params;
    tree.n_features = dataset.n_features();
    tree.n_classes = dataset.n_classes();
    tree.schema_fingerprint = dataset.schema().fingerprint();

    const std::size_t p = dataset.n_features();
    const std::size_t subset = params.max_features.resolve(p);
    std::vector<std::size_t> rows(input_rows.begin(), input_rows.end());
    std::vector<std::size_t> order(p);
    SplitFinder finder(dataset, params);
    Rng rng(params.seed);

    struct Pending {
        std::size_t begin, end;
        int depth;
        std::int32_t parent;
        bool left;
    };
    std::vector<Pending> stack{{0, rows.size(), 0, -1, false}};
    while (!stack.empty()) {
        const Pending item = stack.back();
        stack.pop_back();
        const auto index = static_cast<std::int32_t>(tree.nodes.size());
        if (item.parent >= 0) (item.left ? tree.nodes[item.parent].left : tree.nodes[item.parent].right) = index;

        const std::span<const std::size_t> node_rows(rows.data() + item.begin, item.end - item.begin);
        const auto counts = count_classes(dataset, node_rows);
        const double n = static_cast<double>(node_rows.size());
        TreeNode node;
        node.samples = node_rows.size();
        node.impurity = impurity_of(params.criterion, counts, n);
        node.predicted_class =
            static_cast<ClassId>(std::max_element(counts.begin(), counts.end()) - counts.begin());

        std::optional<SplitCandidate> best;
        const bool pure = std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0.0; }) <= 1;
        if (!pure && item.depth < params.max_depth && node.samples >= params.min_samples_split &&
            node.samples >= 2 * params.min_samples_leaf) {
            if (subset >= p) {
                for (std::size_t f = 0; f < p; ++f) finder.evaluate(node_rows, f, counts, node.impurity, rng, best);
            } else {
                // Draw features without replacement until `subset` non-constant ones were seen.
                std::iota(order.begin(), order.end(), 0);
                std::size_t visited = 0;
                for (std::size_t j = 0; j < p && visited < subset; ++j) {
                    std::swap(order[j], order[j + rng.index(p - j)]);
                    if (finder.evaluate(node_rows, order[j], counts, node.impurity, rng, best)) ++visited;
                }
            }
        }

        if (!best) {
            node.class_counts.resize(counts.size());
            for (std::size_t c = 0; c < counts.size(); ++c) node.class_counts[c] = static_cast<std::uint32_t>(counts[c]);
            tree.nodes.push_back(std::move(node));
            continue;
        }

        node.feature = static_cast<std::int32_t>(best->feature);
        node.threshold = best->threshold;
        node.gain = best->impurity_decrease;
        tree.nodes.push_back(std::move(node));

        const auto values = dataset.values();
        const auto mid = std::partition(rows.begin() + static_cast<std::ptrdiff_t>(item.begin),
                                        rows.begin() + static_cast<std::ptrdiff_t>(item.end), [&](std::size_t r) {
                                            return values[r * p + best->feature] <= best->threshold;
                                        });
        const auto split_at = static_cast<std::size_t>(mid - rows.begin());
        if (split_at - item.begin != best->left_count) throw InvariantError("split partition disagrees with candidate");
        stack.push_back({split_at, item.end, item.depth + 1, index, false});
        stack.push_back({item.begin, split_at, item.depth + 1, index, true});
    }
    return tree;
}

Prediction predict_tree(const DecisionTree& tree, std::span<const double> row) {
    if (row.size() != tree.n_features)
        throw SchemaError("row has " + std::to_string(row.size()) + " features, tree expects " +
                          std::to_string(tree.n_features));
    const auto& leaf = tree.nodes[tree.leaf_index(row)];
    Prediction out;
    out.class_id = leaf.predicted_class;
    out.distribution.assign(tree.n_classes, 0.0);
    const double total = static_cast<double>(leaf.samples);
    for (std::size_t c = 0; c < leaf.class_counts.size(); ++c) out.distribution[c] = leaf.class_counts[c] / total;
    return out;
}

double cost_complexity(const DecisionTree& tree, double alpha, const Dataset& eval) {
    if (alpha < 0.0) throw InputError("alpha must be non-negative");
    if (eval.empty()) throw InputError("cost complexity needs a non-empty evaluation set");
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < eval.n_rows(); ++i) {
        if (predict_tree(tree, eval.row(i)).class_id != eval.label(i)) ++wrong;
    }
    return static_cast<double>(wrong) / static_cast<double>(eval.n_rows()) +
           alpha * static_cast<double>(tree.leaf_count());
}

std::vector<double> tree_feature_importance(const DecisionTree& tree) {
    std::vector<double> importance(tree.n_features, 0.0);
    if (tree.nodes.empty()) return importance;
    const double total = static_cast<double>(tree.nodes[0].samples);
    for (const auto& node : tree.nodes) {
        if (!node.is_leaf())
            importance[static_cast<std::size_t>(node.feature)] += static_cast<double>(node.samples) / total * node.gain;
    }
    const double sum = std::accumulate(importance.begin(), importance.end(), 0.0);
    if (sum > 0.0) {
        for (double& v : importance) v /= sum;
    }
    return importance;
}

void canonicalize_preorder(DecisionTree& tree) {
    if (tree.nodes.empty()) return;
    std::vector<TreeNode> ordered;
    ordered.reserve(tree.nodes.size());
    struct Item {
        std::int32_t old_index;
        std::int32_t parent;
        bool left;
    };
    std::vector<Item> stack{{0, -1, false}};
    while (!stack.empty()) {
        const Item item = stack.back();
        stack.pop_back();
        const auto index = static_cast<std::int32_t>(ordered.size());
        if (item.parent >= 0) (item.left ? ordered[item.parent].left : ordered[item.parent].right) = index;
        ordered.push_back(tree.nodes[static_cast<std::size_t>(item.old_index)]);
        const auto& old = tree.nodes[static_cast<std::size_t>(item.old_index)];
        if (!old.is_leaf()) {
            stack.push_back({old.right, index, false});
            stack.push_back({old.left, index, true});
        }
    }
    tree.nodes = std::move(ordered);
}

} // namespace treeids
