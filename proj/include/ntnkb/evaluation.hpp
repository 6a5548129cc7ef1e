#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "ntnkb/kb.hpp"
#include "ntnkb/models.hpp"

namespace ntnkb {

// Raw rank of t.right among all entities for the query (t.left, t.relation, ?):
// 1 + #{plausibility strictly higher} + #{equal plausibility, smaller id}.
std::size_t rank_right_entity(const ModelParams& params, const Triplet& t);

// Fraction of ranks <= k.
double recall_at_k(std::span<const std::size_t> ranks, std::size_t k);

struct RankingReport {
    std::vector<std::size_t> ranks;
    std::vector<std::pair<std::size_t, double>> recall;  // (K, recall@K)
    double mean_rank = 0.0;
};

// Ranks every triplet; `threads` = 0 picks the hardware concurrency. Output
// does not depend on the thread count.
RankingReport evaluate_ranking(const ModelParams& params, std::span<const Triplet> triplets,
                               std::span<const std::size_t> ks, unsigned threads = 0);

// One negative per positive: a uniformly chosen field (left, right,
// relation) is replaced by a different uniformly chosen value, redrawn up to
// 100 times while the result is a known triplet.
std::vector<Triplet> generate_negatives(const KnowledgeBase& kb,
                                        std::span<const Triplet> positives, std::uint64_t seed);

struct ThresholdFit {
    double threshold = 0.0;
    double accuracy = 0.0;
};

// Best threshold over {-inf, midpoints of consecutive distinct scores, +inf};
// an example is predicted positive iff score >= threshold. Ties go to the
// smallest threshold.
ThresholdFit fit_threshold(std::span<const double> positive_scores,
                           std::span<const double> negative_scores);

struct ThresholdTable {
    std::vector<double> threshold;                   // one per relation
    std::vector<std::optional<double>> dev_accuracy;  // empty for fallback relations
    double fallback = 0.0;                           // median dev plausibility

    double operator[](RelationId r) const { return threshold.at(r.index); }
};

ThresholdTable fit_thresholds(const ModelParams& params, std::span<const Triplet> dev_positive,
                              std::span<const Triplet> dev_negative);

struct ClassificationReport {
    double accuracy = 0.0;
    std::size_t positives = 0;
    std::size_t negatives = 0;
    std::size_t correct = 0;
    std::vector<std::size_t> relation_total;
    std::vector<std::size_t> relation_correct;

    std::optional<double> relation_accuracy(std::size_t r) const {
        if (relation_total.at(r) == 0) return std::nullopt;
        return static_cast<double>(relation_correct[r]) / static_cast<double>(relation_total[r]);
    }
};

ClassificationReport classify(const ModelParams& params, const ThresholdTable& thresholds,
                              std::span<const Triplet> positives,
                              std::span<const Triplet> negatives);

// `metric<TAB>value` lines, then per-relation blocks headed `[relation NAME]`.
void write_ranking_report(std::ostream& out, const RankingReport& report);
void write_classification_report(std::ostream& out, const ClassificationReport& report,
                                 const ThresholdTable& thresholds, const Vocabulary& relations);

// Sidecar threshold file: `relation<TAB>threshold` per line.
void save_thresholds(const std::filesystem::path& path, const ThresholdTable& table,
                     const Vocabulary& relations);
ThresholdTable load_thresholds(const std::filesystem::path& path, const Vocabulary& relations);

}  // namespace ntnkb
