#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "ntnkb/embeddings.hpp"
#include "ntnkb/evaluation.hpp"
#include "ntnkb/kb.hpp"
#include "ntnkb/models.hpp"
#include "ntnkb/random.hpp"

namespace ntnkb {

enum class CorruptionPolicy { right, left, both };
enum class OptimizerKind { lbfgs, sgd };

CorruptionPolicy parse_corruption_policy(std::string_view name);
OptimizerKind parse_optimizer(std::string_view name);

struct TrainingConfig {
    static constexpr double margin = 1.0;

    ModelKind model = ModelKind::ntn;
    std::size_t dimension = 100;
    std::size_t slices = 4;
    std::size_t corruptions = 10;
    double l2_lambda = 1e-4;
    std::size_t minibatch_size = 1000;
    std::size_t epochs = 100;
    std::size_t lbfgs_history = 5;
    std::size_t lbfgs_inner_iterations = 10;
    CorruptionPolicy corrupt_side = CorruptionPolicy::right;
    std::uint64_t seed = 0;
    OptimizerKind optimizer = OptimizerKind::lbfgs;
    double sgd_step = 0.01;
    bool share_u = false;
    // When false, every epoch reuses the epoch-0 corruptions.
    bool resample_corruptions = true;

    // Throws ConfigError on non-positive counts or a negative l2_lambda.
    void validate() const;
};

struct CorruptionSample {
    Triplet source;
    EntityId substitute;
    CorruptSide side = CorruptSide::right;

    Triplet corrupted() const { return ntnkb::corrupted(source, substitute, side); }
};

// C corruptions of t, each uniform over entities other than the one replaced,
// redrawn up to 100 times while the corrupted triplet is in the KB.
std::vector<CorruptionSample> sample_corruptions(const KnowledgeBase& kb, const Triplet& t,
                                                 std::size_t count, CorruptionPolicy policy,
                                                 Rng& rng);

// max(0, 1 - p_correct + p_corrupt)
inline double hinge_term(double plausibility_correct, double plausibility_corrupt) {
    const double v = TrainingConfig::margin - plausibility_correct + plausibility_corrupt;
    return v > 0.0 ? v : 0.0;
}

// Corruptions of kb.train()[index] for an epoch, seeded by (seed, epoch, index).
std::vector<CorruptionSample> epoch_corruptions(const KnowledgeBase& kb, std::size_t index,
                                                std::size_t epoch, const TrainingConfig& config);

struct FlatParameterVector {
    ModelShape shape;
    std::vector<double> values;
};

FlatParameterVector pack(const ModelParams& params);
ModelParams unpack(const FlatParameterVector& flat);

struct ObjectiveValue {
    double value = 0.0;
    std::vector<double> gradient;
};

// Sum of hinge terms over the given samples plus l2_lambda * |theta|^2.
// Throws NumericalError naming the first non-finite parameter group.
ObjectiveValue objective_and_gradient(const ModelParams& params,
                                      std::span<const CorruptionSample> samples, double l2_lambda);

// The objective over kb.train()[batch[i]] with the corruptions of `epoch`.
// Terms are summed in ascending triplet index, so the value does not depend
// on the order of `batch`.
ObjectiveValue batch_objective_and_gradient(const ModelParams& params, const KnowledgeBase& kb,
                                            std::span<const std::size_t> batch,
                                            const TrainingConfig& config, std::size_t epoch);

struct EpochMetrics {
    std::size_t epoch = 0;
    double objective = 0.0;
    double dev_accuracy = 0.0;
};

struct TrainingResult {
    ModelParams params;
    std::vector<EpochMetrics> history;  // epoch 0 is the initial state
    std::size_t best_epoch = 0;
    double best_dev_accuracy = 0.0;
    ThresholdTable thresholds;  // fit on dev at the best epoch
};

// Seed of the dev negatives used for per-epoch model selection.
std::uint64_t dev_negative_seed(std::uint64_t seed);

TrainingResult train(const KnowledgeBase& kb, const TrainingConfig& config,
                     const EmbeddingMatrix& init, std::ostream* log = nullptr);

// `epoch<TAB>objective<TAB>dev_accuracy` lines.
void write_metrics(std::ostream& out, std::span<const EpochMetrics> history);

}  // namespace ntnkb
