#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "treeids/commands.hpp"
#include "treeids/error.hpp"

using namespace treeids;

namespace {

struct ModelFlags {
    std::string kind = "rf";
    std::size_t trees = 200;
    int depth = 8;
    std::size_t min_split = 8;
    std::size_t min_leaf = 3;
    std::string criterion = "gini";
    double lambda = 1.0;
    double gamma = 0.0;
    double learning_rate = 0.3;
    std::string stack_bases = "dt,rf,et";
    std::string stack_meta = "rf";
    std::size_t stack_folds = 5;

    void attach(CLI::App* app) {
        app->add_option("--model", kind, "dt | rf | et | boost | stacking")->capture_default_str();
        app->add_option("--trees", trees, "trees per forest / boosting rounds")->capture_default_str();
        app->add_option("--depth", depth, "maximum tree depth")->capture_default_str();
        app->add_option("--min-split", min_split, "minimum samples to split a node")->capture_default_str();
        app->add_option("--min-leaf", min_leaf, "minimum samples per leaf")->capture_default_str();
        app->add_option("--criterion", criterion, "gini | entropy")->capture_default_str();
        app->add_option("--lambda", lambda, "boosting L2 leaf penalty")->capture_default_str();
        app->add_option("--gamma", gamma, "boosting per-leaf penalty")->capture_default_str();
        app->add_option("--learning-rate", learning_rate, "boosting shrinkage")->capture_default_str();
        app->add_option("--stack-bases", stack_bases, "comma-separated base learners")->capture_default_str();
        app->add_option("--stack-meta", stack_meta, "meta learner")->capture_default_str();
        app->add_option("--stack-folds", stack_folds, "folds for out-of-fold meta features")->capture_default_str();
    }

    ModelSpec spec() const {
        ModelSpec s;
        s.kind = parse_model_kind(kind);
        s.n_trees = trees;
        s.tree.max_depth = depth;
        s.tree.min_samples_split = min_split;
        s.tree.min_samples_leaf = min_leaf;
        if (criterion == "gini") s.tree.criterion = Criterion::gini;
        else if (criterion == "entropy") s.tree.criterion = Criterion::entropy;
        else throw InputError("unknown criterion '" + criterion + "'");
        s.lambda = lambda;
        s.gamma = gamma;
        s.learning_rate = learning_rate;
        s.stack_bases.clear();
        std::stringstream list(stack_bases);
        for (std::string item; std::getline(list, item, ',');) {
            if (!item.empty()) s.stack_bases.push_back(parse_model_kind(item));
        }
        s.stack_meta = parse_model_kind(stack_meta);
        s.stack_folds = stack_folds;
        s.tree.validate();
        return s;
    }
};

struct ResampleFlags {
    std::string method = "none";
    std::size_t smote_k = 5;
    double ratio = 1.0;

    void attach(CLI::App* app) {
        app->add_option("--oversample", method, "none | random | smote")->capture_default_str();
        app->add_option("--smote-k", smote_k, "SMOTE neighbours")->capture_default_str();
        app->add_option("--target-ratio", ratio, "minority target as a share of the largest class")->capture_default_str();
    }
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tree-based intrusion detection for CAN and flow data"};
    app.require_subcommand(1);
    app.fallthrough();
    std::uint64_t seed = 0;
    int threads = 0;
    app.add_option("--seed", seed, "master seed")->capture_default_str();
    app.add_option("--threads", threads, "worker threads (0 = all cores)")->capture_default_str();

    PrepareOptions prep;
    std::string prep_profile = "can";
    auto* prepare = app.add_subcommand("prepare", "parse, clean and label raw captures");
    prepare->add_option("inputs", prep.inputs, "input files (CAN: path or path=Label)")->required();
    prepare->add_option("--profile", prep.profile, "can | flow")->capture_default_str();
    prepare->add_option("--can-encoding", prep.can_encoding, "numeric | one-hot")->capture_default_str();
    prepare->add_option("--label-map", prep.label_map, "raw-to-class label map file");
    prepare->add_option("--label-column", prep.label_column)->capture_default_str();
    prepare->add_option("--flow-features", prep.flow_features, "expected feature columns (0 = any)")->capture_default_str();
    prepare->add_option("--sample", prep.sample, "stratified sample fraction");
    prepare->add_option("-o,--output", prep.output, "prepared dataset path")->required();

    TrainOptions train;
    ModelFlags train_model;
    ResampleFlags train_resample;
    auto* train_cmd = app.add_subcommand("train", "fit a model and write an artifact");
    train_cmd->add_option("dataset", train.dataset)->required();
    train_model.attach(train_cmd);
    train_resample.attach(train_cmd);
    train_cmd->add_flag("--feature-select", train.feature_select, "keep features covering the importance threshold");
    train_cmd->add_option("--fs-threshold", train.fs_threshold)->capture_default_str();
    train_cmd->add_option("-o,--output", train.output, "model path")->required();

    EvaluateOptions eval;
    ModelFlags eval_model;
    ResampleFlags eval_resample;
    auto* eval_cmd = app.add_subcommand("evaluate", "score an artifact or cross-validate a model spec");
    eval_cmd->add_option("dataset", eval.dataset)->required();
    eval_cmd->add_option("--artifact", eval.artifact, "saved model to score (holdout)");
    eval_model.attach(eval_cmd);
    eval_resample.attach(eval_cmd);
    eval_cmd->add_option("--folds", eval.folds)->capture_default_str();
    eval_cmd->add_flag("--feature-select", eval.feature_select);
    eval_cmd->add_option("--fs-threshold", eval.fs_threshold)->capture_default_str();

    SelectFeaturesOptions sel;
    ModelFlags sel_model;
    auto* sel_cmd = app.add_subcommand("select-features", "rank features by averaged importance");
    sel_cmd->add_option("dataset", sel.dataset)->required();
    sel_model.attach(sel_cmd);
    sel_cmd->add_flag("--per-attack", sel.per_attack, "one ranking per attack class against normal");
    sel_cmd->add_option("--fs-threshold", sel.fs_threshold)->capture_default_str();
    sel_cmd->add_option("--top", sel.top, "rows per attack printed")->capture_default_str();
    sel_cmd->add_option("-o,--output", sel.output, "importance table path");

    DetectCommandOptions det;
    auto* det_cmd = app.add_subcommand("detect", "score a record stream");
    det_cmd->add_option("artifact", det.artifact)->required();
    det_cmd->add_option("input", det.input, "record file or - for stdin")->capture_default_str();
    det_cmd->add_option("--profile", det.profile, "can | flow");
    det_cmd->add_option("--batch", det.batch_size)->capture_default_str();

    GridSearchOptions grid;
    ModelFlags grid_model;
    auto* grid_cmd = app.add_subcommand("grid-search", "tune trees and depth with early stopping");
    grid_cmd->add_option("dataset", grid.dataset)->required();
    grid_model.attach(grid_cmd);
    grid_cmd->add_option("--tree-grid", grid.trees)->delimiter(',')->capture_default_str();
    grid_cmd->add_option("--depth-grid", grid.depths)->delimiter(',')->capture_default_str();
    grid_cmd->add_option("--folds", grid.folds)->capture_default_str();
    grid_cmd->add_option("--tolerance", grid.tolerance)->capture_default_str();

    GenerateCanOptions gen;
    auto* gen_cmd = app.add_subcommand("generate-can", "write a synthetic CAN capture");
    gen_cmd->add_option("--frames", gen.frames)->capture_default_str();
    gen_cmd->add_option("--attack-share", gen.attack_share)->capture_default_str();
    gen_cmd->add_option("-o,--output-dir", gen.output_dir)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*prepare) {
            prep.seed = seed;
            cmd_prepare(prep, std::cout, std::cerr);
        } else if (*train_cmd) {
            train.spec = train_model.spec();
            train.oversample = parse_resample_method(train_resample.method);
            train.smote_k = train_resample.smote_k;
            train.target_ratio = train_resample.ratio;
            train.seed = seed;
            train.threads = threads;
            cmd_train(train, std::cout);
        } else if (*eval_cmd) {
            eval.spec = eval_model.spec();
            eval.oversample = parse_resample_method(eval_resample.method);
            eval.smote_k = eval_resample.smote_k;
            eval.target_ratio = eval_resample.ratio;
            eval.seed = seed;
            eval.threads = threads;
            cmd_evaluate(eval, std::cout);
        } else if (*sel_cmd) {
            sel.spec = sel_model.spec();
            sel.seed = seed;
            sel.threads = threads;
            cmd_select_features(sel, std::cout);
        } else if (*det_cmd) {
            det.threads = threads;
            cmd_detect(det, std::cout);
        } else if (*grid_cmd) {
            grid.spec = grid_model.spec();
            grid.seed = seed;
            grid.threads = threads;
            cmd_grid_search(grid, std::cout);
        } else if (*gen_cmd) {
            gen.seed = seed;
            cmd_generate_can(gen, std::cout);
        }
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const SchemaError& e) {
        std::cerr << "schema error: " << e.what() << '\n';
        return 3;
    } catch (const InvariantError& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 4;
    }
    return 0;
}
