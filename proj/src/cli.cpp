#include "ntnkb/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>

#include "ntnkb/checkpoint.hpp"
#include "ntnkb/embeddings.hpp"
#include "ntnkb/error.hpp"
#include "ntnkb/evaluation.hpp"
#include "ntnkb/gradcheck.hpp"
#include "ntnkb/kb.hpp"
#include "ntnkb/random.hpp"
#include "ntnkb/training.hpp"

namespace ntnkb {
namespace {

struct TrainFlags {
    std::string train, dev, test, out, metrics_out, thresholds_out, vectors;
    std::string model = "ntn", init = "random", corrupt_side = "right", optimizer = "lbfgs";
    std::size_t dim = 100, slices = 4, corruptions = 10, epochs = 100, batch = 1000;
    std::size_t lbfgs_history = 5, lbfgs_iters = 10;
    double l2 = 1e-4, sgd_step = 0.01;
    std::uint64_t seed = 0;
    bool share_u = false, fixed_corruptions = false, verbose = false;
};

struct RankFlags {
    std::string checkpoint, test;
    std::vector<std::size_t> ks{100};
    unsigned threads = 0;
};

struct ClassFlags {
    std::string checkpoint, dev, test, train, thresholds_out;
    std::uint64_t neg_seed = 0;
};

struct ScoreFlags {
    std::string checkpoint, left, relation, right, vectors, thresholds;
    std::uint64_t seed = 0;
};

struct GradcheckFlags {
    std::string model = "ntn";
    std::size_t dim = 4, slices = 3, trials = 100;
    std::uint64_t seed = 0;
    bool random_shapes = false, inject_error = false;
};

std::string fmt(double v) {
    std::ostringstream s;
    s << std::setprecision(17) << v;
    return s.str();
}

int cmd_train(const TrainFlags& f, std::ostream& out, std::ostream& err) {
    if (f.init == "word-average" && f.vectors.empty())
        throw UsageError("--init word-average requires --vectors");
    if (f.init != "random" && f.init != "word-average")
        throw UsageError("--init must be random or word-average");

    TrainingConfig config;
    config.model = parse_model_kind(f.model);
    config.dimension = f.dim;
    config.slices = f.slices;
    config.corruptions = f.corruptions;
    config.epochs = f.epochs;
    config.minibatch_size = f.batch;
    config.l2_lambda = f.l2;
    config.lbfgs_history = f.lbfgs_history;
    config.lbfgs_inner_iterations = f.lbfgs_iters;
    config.corrupt_side = parse_corruption_policy(f.corrupt_side);
    config.optimizer = parse_optimizer(f.optimizer);
    config.sgd_step = f.sgd_step;
    config.seed = f.seed;
    config.share_u = f.share_u;
    config.resample_corruptions = !f.fixed_corruptions;
    config.validate();

    const auto kb = build_knowledge_base(load_split(f.train), load_split(f.dev), load_split(f.test));
    const auto overlap = kb.overlap();
    err << "entities " << kb.entity_count() << ", relations " << kb.relation_count() << ", train "
        << kb.train().size() << ", dev " << kb.dev().size() << ", test " << kb.test().size()
        << "; overlap train/dev " << overlap.train_dev << ", train/test " << overlap.train_test
        << ", dev/test " << overlap.dev_test << '\n';

    std::optional<WordVectorTable> table;
    if (f.init == "word-average") table = load_word_vectors(f.vectors);
    const auto init = init_entity_embeddings(
        kb, table ? InitMode::word_average : InitMode::random, table ? &*table : nullptr, f.seed, f.dim);

    auto result = train(kb, config, init, f.verbose ? &err : nullptr);

    save_checkpoint(f.out, result.params, kb.entities(), kb.relations());
    if (!f.metrics_out.empty()) {
        std::ofstream m(f.metrics_out, std::ios::binary);
        if (!m) throw Error("cannot write " + f.metrics_out);
        write_metrics(m, result.history);
    }
    if (!f.thresholds_out.empty()) save_thresholds(f.thresholds_out, result.thresholds, kb.relations());
    out << "best_epoch\t" << result.best_epoch << '\n';
    out << "dev_accuracy\t" << fmt(result.best_dev_accuracy) << '\n';
    return kExitOk;
}

int cmd_eval_rank(const RankFlags& f, std::ostream& out) {
    const auto ck = load_checkpoint(f.checkpoint);
    const auto kb = build_knowledge_base(ck.entities, ck.relations, {}, {},
                                         load_split(f.test, ck.entities, ck.relations));
    for (auto k : f.ks)
        if (k == 0) throw UsageError("--k values must be >= 1");
    const auto report = evaluate_ranking(ck.params, kb.test(), f.ks, f.threads);
    write_ranking_report(out, report);
    return kExitOk;
}

int cmd_eval_class(const ClassFlags& f, std::ostream& out) {
    const auto ck = load_checkpoint(f.checkpoint);
    const auto train_raw =
        f.train.empty() ? std::vector<RawTriple>{} : load_split(f.train, ck.entities, ck.relations);
    const auto kb = build_knowledge_base(ck.entities, ck.relations, train_raw,
                                         load_split(f.dev, ck.entities, ck.relations),
                                         load_split(f.test, ck.entities, ck.relations));
    const auto dev_neg = generate_negatives(kb, kb.dev(), Rng::mix({f.neg_seed, 0}));
    const auto test_neg = generate_negatives(kb, kb.test(), Rng::mix({f.neg_seed, 1}));
    const auto thresholds = fit_thresholds(ck.params, kb.dev(), dev_neg);
    const auto report = classify(ck.params, thresholds, kb.test(), test_neg);
    if (!f.thresholds_out.empty()) save_thresholds(f.thresholds_out, thresholds, kb.relations());
    write_classification_report(out, report, thresholds, kb.relations());
    return kExitOk;
}

int cmd_score(const ScoreFlags& f, std::ostream& out) {
    const auto ck = load_checkpoint(f.checkpoint);
    const auto rel = ck.relations.find(f.relation);
    if (!rel) throw VocabularyError(f.relation);

    std::optional<WordVectorTable> table;
    if (!f.vectors.empty()) table = load_word_vectors(f.vectors);
    const std::size_t d = ck.params.shape().dimension;

    auto resolve = [&](const std::string& name, std::uint64_t stream) {
        if (auto id = ck.entities.find(name)) {
            auto v = ck.params.entity(EntityId{*id});
            return std::vector<double>(v.begin(), v.end());
        }
        if (!table) throw VocabularyError(name);
        if (table->dimension() != d)
            throw ConfigError("word vectors have dimension " + std::to_string(table->dimension()) +
                              ", checkpoint expects " + std::to_string(d));
        std::vector<double> v(d);
        compose_entity_vector(name, *table, f.seed, stream, v);
        return v;
    };
    const auto e1 = resolve(f.left, ck.entities.size());
    const auto e2 = resolve(f.right, ck.entities.size() + 1);
    const double p = ck.params.plausibility(RelationId{*rel}, e1, e2);
    out << "plausibility\t" << fmt(p) << '\n';
    if (!f.thresholds.empty()) {
        const auto table_t = load_thresholds(f.thresholds, ck.relations);
        const double t = table_t[RelationId{*rel}];
        out << "threshold\t" << fmt(t) << '\n';
        out << "verdict\t" << (p >= t ? "true" : "false") << '\n';
    }
    return kExitOk;
}

int cmd_gradcheck(const GradcheckFlags& f, std::ostream& out, std::ostream& err) {
    GradcheckOptions opt;
    opt.kind = parse_model_kind(f.model);
    opt.dimension = f.dim;
    opt.slices = f.slices;
    opt.seed = f.seed;
    opt.trials = f.trials;
    opt.random_shapes = f.random_shapes;
    if (opt.dimension == 0 || (opt.kind == ModelKind::ntn && opt.slices == 0))
        throw UsageError("--dim and --slices must be positive");
    if (f.inject_error) opt.gradient_fault = [](std::span<double> g) { g.back() += 1e-3; };
    const auto rep = run_gradcheck(opt);
    out << "trials\t" << rep.trials << '\n';
    out << "skipped\t" << rep.skipped << '\n';
    out << "max_relative_error\t" << fmt(rep.max_relative_error) << '\n';
    if (!rep.passed) {
        err << "gradient check failed: " << rep.worst_parameter << " (coordinate "
            << rep.worst_coordinate << ", trial " << rep.worst_trial << ")\n";
        return kExitDataError;
    }
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Knowledge-base completion with neural tensor networks", "ntnkb"};
    app.require_subcommand(1);

    TrainFlags tf;
    auto* train_cmd = app.add_subcommand("train", "train a model and write a checkpoint");
    train_cmd->add_option("--train", tf.train, "training triplets (TSV)")->required();
    train_cmd->add_option("--dev", tf.dev, "development triplets (TSV)")->required();
    train_cmd->add_option("--test", tf.test, "test triplets (TSV)")->required();
    train_cmd->add_option("--out", tf.out, "checkpoint path")->required();
    train_cmd->add_option("--model", tf.model, "ntn|bilinear|similarity|hadamard")
        ->check(CLI::IsMember({"ntn", "bilinear", "similarity", "hadamard"}));
    train_cmd->add_option("--dim", tf.dim, "embedding dimension");
    train_cmd->add_option("--slices", tf.slices, "NTN tensor slices k");
    train_cmd->add_option("--corruptions", tf.corruptions, "corruptions per triplet C");
    train_cmd->add_option("--epochs", tf.epochs);
    train_cmd->add_option("--batch", tf.batch, "minibatch size");
    train_cmd->add_option("--l2", tf.l2, "L2 regularization weight");
    train_cmd->add_option("--lbfgs-history", tf.lbfgs_history);
    train_cmd->add_option("--lbfgs-iters", tf.lbfgs_iters, "L-BFGS iterations per minibatch");
    train_cmd->add_option("--optimizer", tf.optimizer)->check(CLI::IsMember({"lbfgs", "sgd"}));
    train_cmd->add_option("--sgd-step", tf.sgd_step);
    train_cmd->add_option("--init", tf.init, "random|word-average");
    train_cmd->add_option("--vectors", tf.vectors, "pretrained word vectors (text)");
    train_cmd->add_option("--corrupt-side", tf.corrupt_side)
        ->check(CLI::IsMember({"right", "left", "both"}));
    train_cmd->add_option("--seed", tf.seed);
    train_cmd->add_option("--metrics-out", tf.metrics_out, "per-epoch metrics log");
    train_cmd->add_option("--thresholds-out", tf.thresholds_out, "dev-fit thresholds sidecar");
    train_cmd->add_flag("--share-u", tf.share_u, "share the NTN output vector U across relations");
    train_cmd->add_flag("--fixed-corruptions", tf.fixed_corruptions,
                        "reuse the same corruptions in every epoch");
    train_cmd->add_flag("--verbose", tf.verbose, "per-epoch progress on stderr");

    RankFlags rf;
    auto* rank_cmd = app.add_subcommand("eval-rank", "ranking evaluation (mean rank, recall@K)");
    rank_cmd->add_option("--checkpoint", rf.checkpoint)->required();
    rank_cmd->add_option("--test", rf.test)->required();
    rank_cmd->add_option("--k", rf.ks, "comma-separated K values")->delimiter(',');
    rank_cmd->add_option("--threads", rf.threads);

    ClassFlags cf;
    auto* class_cmd = app.add_subcommand("eval-class", "triplet classification accuracy");
    class_cmd->add_option("--checkpoint", cf.checkpoint)->required();
    class_cmd->add_option("--dev", cf.dev)->required();
    class_cmd->add_option("--test", cf.test)->required();
    class_cmd->add_option("--train", cf.train, "extra known triplets excluded from negatives");
    class_cmd->add_option("--neg-seed", cf.neg_seed);
    class_cmd->add_option("--thresholds-out", cf.thresholds_out);

    ScoreFlags sf;
    auto* score_cmd = app.add_subcommand("score", "plausibility of one triplet");
    score_cmd->add_option("--checkpoint", sf.checkpoint)->required();
    score_cmd->add_option("--left", sf.left)->required();
    score_cmd->add_option("--relation", sf.relation)->required();
    score_cmd->add_option("--right", sf.right)->required();
    score_cmd->add_option("--vectors", sf.vectors, "word vectors for entities outside the KB");
    score_cmd->add_option("--thresholds", sf.thresholds);
    score_cmd->add_option("--seed", sf.seed);

    GradcheckFlags gf;
    auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference gradient check");
    grad_cmd->add_option("--model", gf.model)
        ->check(CLI::IsMember({"ntn", "bilinear", "similarity", "hadamard"}));
    grad_cmd->add_option("--dim", gf.dim);
    grad_cmd->add_option("--slices", gf.slices);
    grad_cmd->add_option("--seed", gf.seed);
    grad_cmd->add_option("--trials", gf.trials);
    grad_cmd->add_flag("--random-shapes", gf.random_shapes, "draw d in [2,5] and k in [1,3] per trial");
    grad_cmd->add_flag("--inject-gradient-error", gf.inject_error)->group("");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::Success& e) {
        app.exit(e, out, err);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitUsage;
    }

    try {
        if (train_cmd->parsed()) return cmd_train(tf, out, err);
        if (rank_cmd->parsed()) return cmd_eval_rank(rf, out);
        if (class_cmd->parsed()) return cmd_eval_class(cf, out);
        if (score_cmd->parsed()) return cmd_score(sf, out);
        if (grad_cmd->parsed()) return cmd_gradcheck(gf, out, err);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitDataError;
    } catch (const ContractViolation& e) {
        err << "error: " << e.what() << '\n';
        return kExitDataError;
    }
    return kExitUsage;
}

}  // namespace ntnkb
