#include "ntnkb/training.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>

#include "ntnkb/error.hpp"
#include "ntnkb/lbfgs.hpp"

namespace ntnkb {

CorruptionPolicy parse_corruption_policy(std::string_view name) {
    if (name == "right") return CorruptionPolicy::right;
    if (name == "left") return CorruptionPolicy::left;
    if (name == "both") return CorruptionPolicy::both;
    throw ConfigError("unknown corruption side '" + std::string(name) + "'");
}

OptimizerKind parse_optimizer(std::string_view name) {
    if (name == "lbfgs") return OptimizerKind::lbfgs;
    if (name == "sgd") return OptimizerKind::sgd;
    throw ConfigError("unknown optimizer '" + std::string(name) + "'");
}

void TrainingConfig::validate() const {
    auto positive = [](std::size_t v, const char* what) {
        if (v == 0) throw ConfigError(std::string(what) + " must be positive");
    };
    positive(dimension, "dimension");
    if (model == ModelKind::ntn) positive(slices, "slice count");
    positive(corruptions, "corruption count");
    positive(minibatch_size, "minibatch size");
    positive(epochs, "epoch count");
    positive(lbfgs_history, "L-BFGS history");
    positive(lbfgs_inner_iterations, "L-BFGS inner iterations");
    if (!(l2_lambda >= 0.0)) throw ConfigError("l2 lambda must be nonnegative");
    if (optimizer == OptimizerKind::sgd && !(sgd_step > 0.0))
        throw ConfigError("sgd step must be positive");
}

std::vector<CorruptionSample> sample_corruptions(const KnowledgeBase& kb, const Triplet& t,
                                                 std::size_t count, CorruptionPolicy policy,
                                                 Rng& rng) {
    const std::size_t n = kb.entity_count();
    if (n < 2) throw ConfigError("corruption sampling needs at least two entities");
    std::vector<CorruptionSample> out;
    out.reserve(count);
    for (std::size_t c = 0; c < count; ++c) {
        CorruptSide side = CorruptSide::right;
        if (policy == CorruptionPolicy::left || (policy == CorruptionPolicy::both && c % 2 == 1))
            side = CorruptSide::left;
        const std::uint32_t replaced = (side == CorruptSide::right ? t.right : t.left).index;
        CorruptionSample s{t, EntityId{}, side};
        for (int attempt = 0; attempt < 100; ++attempt) {
            auto v = static_cast<std::uint32_t>(rng.below(n - 1));
            s.substitute = EntityId{v >= replaced ? v + 1 : v};
            if (!kb.contains(s.corrupted())) break;
        }
        out.push_back(s);
    }
    return out;
}

std::vector<CorruptionSample> epoch_corruptions(const KnowledgeBase& kb, std::size_t index,
                                                std::size_t epoch, const TrainingConfig& config) {
    const std::size_t key = config.resample_corruptions ? epoch : 0;
    auto rng = Rng::derived({config.seed, 0x636f7272ULL, key, index});
    return sample_corruptions(kb, kb.train().at(index), config.corruptions, config.corrupt_side, rng);
}

FlatParameterVector pack(const ModelParams& params) {
    return {params.shape(), std::vector<double>(params.theta().begin(), params.theta().end())};
}

ModelParams unpack(const FlatParameterVector& flat) { return ModelParams(flat.shape, flat.values); }

namespace {

void check_finite(const ModelParams& params, double value, std::span<const double> grad) {
    const auto theta = params.theta();
    for (std::size_t i = 0; i < theta.size(); ++i)
        if (!std::isfinite(theta[i]))
            throw NumericalError("non-finite parameter in " + params.layout().describe(i));
    for (std::size_t i = 0; i < grad.size(); ++i)
        if (!std::isfinite(grad[i]))
            throw NumericalError("non-finite gradient in " + params.layout().describe(i));
    if (!std::isfinite(value)) throw NumericalError("non-finite objective value");
}

}  // namespace

ObjectiveValue objective_and_gradient(const ModelParams& params,
                                      std::span<const CorruptionSample> samples, double l2_lambda) {
    ObjectiveValue out;
    out.gradient.assign(params.theta().size(), 0.0);
    for (const auto& s : samples) {
        const Triplet neg = s.corrupted();
        const double margin =
            TrainingConfig::margin - params.plausibility(s.source) + params.plausibility(neg);
        if (margin <= 0.0) continue;
        out.value += margin;
        params.accumulate_plausibility_gradient(s.source, -1.0, out.gradient);
        params.accumulate_plausibility_gradient(neg, 1.0, out.gradient);
    }
    if (l2_lambda > 0.0) {
        double sq = 0.0;
        const auto theta = params.theta();
        for (std::size_t i = 0; i < theta.size(); ++i) {
            sq += theta[i] * theta[i];
            out.gradient[i] += 2.0 * l2_lambda * theta[i];
        }
        out.value += l2_lambda * sq;
    }
    check_finite(params, out.value, out.gradient);
    return out;
}

namespace {

std::vector<CorruptionSample> gather(const KnowledgeBase& kb, std::span<const std::size_t> batch,
                                     const TrainingConfig& config, std::size_t epoch) {
    std::vector<std::size_t> sorted(batch.begin(), batch.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<CorruptionSample> samples;
    samples.reserve(sorted.size() * config.corruptions);
    for (auto i : sorted) {
        auto c = epoch_corruptions(kb, i, epoch, config);
        samples.insert(samples.end(), c.begin(), c.end());
    }
    return samples;
}

}  // namespace

ObjectiveValue batch_objective_and_gradient(const ModelParams& params, const KnowledgeBase& kb,
                                            std::span<const std::size_t> batch,
                                            const TrainingConfig& config, std::size_t epoch) {
    if (batch.empty()) throw ConfigError("empty minibatch");
    const auto samples = gather(kb, batch, config, epoch);
    return objective_and_gradient(params, samples, config.l2_lambda);
}

std::uint64_t dev_negative_seed(std::uint64_t seed) { return Rng::mix({seed, 0x6465764e4547ULL}); }

namespace {

struct DevEvaluation {
    double accuracy = 0.0;
    ThresholdTable thresholds;
};

DevEvaluation evaluate_dev(const ModelParams& params, const KnowledgeBase& kb,
                           std::span<const Triplet> dev_negatives) {
    DevEvaluation ev;
    ev.thresholds = fit_thresholds(params, kb.dev(), dev_negatives);
    if (kb.dev().empty()) {
        ev.accuracy = std::numeric_limits<double>::quiet_NaN();
        return ev;
    }
    ev.accuracy = classify(params, ev.thresholds, kb.dev(), dev_negatives).accuracy;
    return ev;
}

void run_lbfgs(ModelParams& params, std::span<const CorruptionSample> samples,
               const TrainingConfig& config, std::ostream* log, std::size_t epoch) {
    std::string failure;
    ModelParams probe = params;
    Objective f = [&](std::span<const double> x, std::span<double> grad) {
        std::copy(x.begin(), x.end(), probe.theta().begin());
        try {
            auto v = objective_and_gradient(probe, samples, config.l2_lambda);
            std::copy(v.gradient.begin(), v.gradient.end(), grad.begin());
            return v.value;
        } catch (const NumericalError& e) {
            failure = e.what();
            return std::numeric_limits<double>::quiet_NaN();
        }
    };
    LbfgsOptions opt;
    opt.history = config.lbfgs_history;
    opt.max_iterations = config.lbfgs_inner_iterations;
    std::vector<double> x0(params.theta().begin(), params.theta().end());
    auto res = lbfgs_minimize(f, std::move(x0), opt);
    std::copy(res.x.begin(), res.x.end(), params.theta().begin());
    if (res.status == LbfgsStatus::non_finite)
        throw NumericalError("epoch " + std::to_string(epoch) + ": " + failure);
    if (res.status == LbfgsStatus::line_search_failed && log)
        *log << "epoch " << epoch << ": " << res.message << '\n';
}

}  // namespace

TrainingResult train(const KnowledgeBase& kb, const TrainingConfig& config,
                     const EmbeddingMatrix& init, std::ostream* log) {
    config.validate();
    if (init.rows() != kb.entity_count() || init.dimension() != config.dimension)
        throw ConfigError("initial embeddings do not match the knowledge base and dimension");
    if (kb.entity_count() < 2) throw ConfigError("training needs at least two entities");

    const auto shape = make_shape(config.model, config.dimension, config.slices, kb.entity_count(),
                                  kb.relation_count(), config.share_u);
    ModelParams params = ModelParams::initialize(shape, init, config.seed);
    const auto dev_negatives = generate_negatives(kb, kb.dev(), dev_negative_seed(config.seed));

    std::vector<std::size_t> all(kb.train().size());
    std::iota(all.begin(), all.end(), std::size_t{0});

    auto record = [&](std::size_t epoch, TrainingResult* best) {
        const double objective =
            all.empty() ? config.l2_lambda * std::inner_product(params.theta().begin(),
                                                                 params.theta().end(),
                                                                 params.theta().begin(), 0.0)
                        : batch_objective_and_gradient(params, kb, all, config, epoch).value;
        auto dev = evaluate_dev(params, kb, dev_negatives);
        EpochMetrics m{epoch, objective, dev.accuracy};
        if (log)
            *log << "epoch " << epoch << "\tobjective " << std::setprecision(10) << objective
                 << "\tdev_accuracy " << dev.accuracy << '\n';
        // Later epochs win ties; without a dev fold the last epoch is kept.
        const bool better = std::isnan(dev.accuracy) || epoch == 0 ||
                            dev.accuracy >= best->best_dev_accuracy;
        best->history.push_back(m);
        if (better) {
            best->params = params;
            best->best_epoch = epoch;
            best->best_dev_accuracy = dev.accuracy;
            best->thresholds = std::move(dev.thresholds);
        }
    };

    TrainingResult result{params, {}, 0, 0.0, {}};
    record(0, &result);

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        std::vector<std::size_t> order = all;
        auto shuffle_rng = Rng::derived({config.seed, 0x73687566ULL, epoch});
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.below(i)]);

        for (std::size_t begin = 0; begin < order.size(); begin += config.minibatch_size) {
            const std::size_t end = std::min(order.size(), begin + config.minibatch_size);
            const auto samples =
                gather(kb, std::span(order).subspan(begin, end - begin), config, epoch);
            if (config.optimizer == OptimizerKind::lbfgs) {
                run_lbfgs(params, samples, config, log, epoch);
            } else {
                auto v = objective_and_gradient(params, samples, config.l2_lambda);
                auto theta = params.theta();
                for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= config.sgd_step * v.gradient[i];
            }
        }
        record(epoch, &result);
    }
    return result;
}

void write_metrics(std::ostream& out, std::span<const EpochMetrics> history) {
    out << std::setprecision(17);
    for (const auto& m : history) out << m.epoch << '\t' << m.objective << '\t' << m.dev_accuracy << '\n';
}

}  // namespace ntnkb
