#include "ntnkb/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>

#include "ntnkb/error.hpp"
#include "ntnkb/random.hpp"

namespace ntnkb {

std::size_t rank_right_entity(const ModelParams& params, const Triplet& t) {
    const auto e1 = params.entity(t.left);
    const double target = params.plausibility(t.relation, e1, params.entity(t.right));
    std::size_t rank = 1;
    for (std::uint32_t e = 0; e < params.shape().entities; ++e) {
        const double p = params.plausibility(t.relation, e1, params.entity(EntityId{e}));
        if (p > target || (p == target && e < t.right.index)) ++rank;
    }
    return rank;
}

double recall_at_k(std::span<const std::size_t> ranks, std::size_t k) {
    if (k == 0) throw ConfigError("recall@K needs K >= 1");
    if (ranks.empty()) return 0.0;
    const auto hits = std::count_if(ranks.begin(), ranks.end(), [k](std::size_t r) { return r <= k; });
    return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

RankingReport evaluate_ranking(const ModelParams& params, std::span<const Triplet> triplets,
                               std::span<const std::size_t> ks, unsigned threads) {
    RankingReport report;
    report.ranks.assign(triplets.size(), 0);
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(1, triplets.size())));
    {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < threads; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t i = w; i < triplets.size(); i += threads)
                    report.ranks[i] = rank_right_entity(params, triplets[i]);
            });
        }
    }
    double sum = 0.0;
    for (auto r : report.ranks) sum += static_cast<double>(r);
    report.mean_rank = triplets.empty() ? 0.0 : sum / static_cast<double>(triplets.size());
    for (auto k : ks) report.recall.emplace_back(k, recall_at_k(report.ranks, k));
    return report;
}

std::vector<Triplet> generate_negatives(const KnowledgeBase& kb,
                                        std::span<const Triplet> positives, std::uint64_t seed) {
    const std::size_t n_ent = kb.entity_count();
    const std::size_t n_rel = kb.relation_count();
    if (n_ent < 2) throw ConfigError("negative generation needs at least two entities");
    auto rng = Rng::derived({seed, 0x6e6567ULL});

    auto other = [&rng](std::uint32_t current, std::size_t n) {
        auto v = static_cast<std::uint32_t>(rng.below(n - 1));
        return v >= current ? v + 1 : v;
    };

    std::vector<Triplet> out;
    out.reserve(positives.size());
    for (const auto& pos : positives) {
        // With a single relation only the entity fields can change.
        const std::uint64_t field = rng.below(n_rel >= 2 ? 3 : 2);
        Triplet neg = pos;
        for (int attempt = 0; attempt < 100; ++attempt) {
            neg = pos;
            if (field == 0) neg.left.index = other(pos.left.index, n_ent);
            else if (field == 1) neg.right.index = other(pos.right.index, n_ent);
            else neg.relation.index = other(pos.relation.index, n_rel);
            if (!kb.contains(neg)) break;
        }
        out.push_back(neg);
    }
    return out;
}

ThresholdFit fit_threshold(std::span<const double> positive_scores,
                           std::span<const double> negative_scores) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<std::pair<double, bool>> items;
    items.reserve(positive_scores.size() + negative_scores.size());
    for (double s : positive_scores) items.emplace_back(s, true);
    for (double s : negative_scores) items.emplace_back(s, false);
    if (items.empty()) return {0.0, 0.0};
    std::sort(items.begin(), items.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    // Threshold -inf: everything predicted positive.
    long correct = static_cast<long>(positive_scores.size());
    ThresholdFit best{-inf, static_cast<double>(correct)};
    for (std::size_t i = 0; i < items.size();) {
        std::size_t j = i;
        while (j < items.size() && items[j].first == items[i].first) {
            correct += items[j].second ? -1 : 1;
            ++j;
        }
        double candidate = inf;
        if (j < items.size()) {
            const double lo = items[i].first, hi = items[j].first;
            candidate = lo + (hi - lo) / 2.0;
            if (!(candidate > lo)) candidate = hi;
        }
        if (static_cast<double>(correct) > best.accuracy) best = {candidate, static_cast<double>(correct)};
        i = j;
    }
    best.accuracy /= static_cast<double>(items.size());
    return best;
}

ThresholdTable fit_thresholds(const ModelParams& params, std::span<const Triplet> dev_positive,
                              std::span<const Triplet> dev_negative) {
    const std::size_t n_rel = params.shape().relations;
    std::vector<std::vector<double>> pos(n_rel), neg(n_rel);
    std::vector<double> all;
    for (const auto& t : dev_positive) {
        pos[t.relation.index].push_back(params.plausibility(t));
        all.push_back(pos[t.relation.index].back());
    }
    for (const auto& t : dev_negative) {
        neg[t.relation.index].push_back(params.plausibility(t));
        all.push_back(neg[t.relation.index].back());
    }

    ThresholdTable table;
    if (!all.empty()) {
        std::sort(all.begin(), all.end());
        const std::size_t m = all.size() / 2;
        table.fallback = all.size() % 2 ? all[m] : all[m - 1] + (all[m] - all[m - 1]) / 2.0;
    }
    table.threshold.assign(n_rel, table.fallback);
    table.dev_accuracy.assign(n_rel, std::nullopt);
    for (std::size_t r = 0; r < n_rel; ++r) {
        if (pos[r].empty() && neg[r].empty()) continue;
        const auto fit = fit_threshold(pos[r], neg[r]);
        table.threshold[r] = fit.threshold;
        table.dev_accuracy[r] = fit.accuracy;
    }
    return table;
}

ClassificationReport classify(const ModelParams& params, const ThresholdTable& thresholds,
                              std::span<const Triplet> positives,
                              std::span<const Triplet> negatives) {
    ClassificationReport rep;
    const std::size_t n_rel = params.shape().relations;
    if (thresholds.threshold.size() != n_rel)
        throw ConfigError("threshold table does not cover every relation");
    rep.relation_total.assign(n_rel, 0);
    rep.relation_correct.assign(n_rel, 0);
    auto score = [&](const Triplet& t, bool label) {
        const bool predicted = params.plausibility(t) >= thresholds[t.relation];
        ++rep.relation_total[t.relation.index];
        if (predicted == label) {
            ++rep.correct;
            ++rep.relation_correct[t.relation.index];
        }
    };
    for (const auto& t : positives) score(t, true);
    for (const auto& t : negatives) score(t, false);
    rep.positives = positives.size();
    rep.negatives = negatives.size();
    const std::size_t total = rep.positives + rep.negatives;
    rep.accuracy = total ? static_cast<double>(rep.correct) / static_cast<double>(total) : 0.0;
    return rep;
}

namespace {

std::string format_double(double v) {
    std::ostringstream s;
    s << std::setprecision(17) << v;
    return s.str();
}

}  // namespace

void write_ranking_report(std::ostream& out, const RankingReport& report) {
    out << "triplets\t" << report.ranks.size() << '\n';
    out << "mean_rank\t" << format_double(report.mean_rank) << '\n';
    for (const auto& [k, r] : report.recall) out << "recall@" << k << '\t' << format_double(r) << '\n';
}

void write_classification_report(std::ostream& out, const ClassificationReport& report,
                                 const ThresholdTable& thresholds, const Vocabulary& relations) {
    out << "accuracy\t" << format_double(report.accuracy) << '\n';
    out << "positives\t" << report.positives << '\n';
    out << "negatives\t" << report.negatives << '\n';
    out << "correct\t" << report.correct << '\n';
    for (std::size_t r = 0; r < report.relation_total.size(); ++r) {
        out << "\n[relation " << relations.name(static_cast<std::uint32_t>(r)) << "]\n";
        out << "threshold\t" << format_double(thresholds.threshold.at(r)) << '\n';
        out << "examples\t" << report.relation_total[r] << '\n';
        if (auto acc = report.relation_accuracy(r)) out << "accuracy\t" << format_double(*acc) << '\n';
    }
}

void save_thresholds(const std::filesystem::path& path, const ThresholdTable& table,
                     const Vocabulary& relations) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    for (std::size_t r = 0; r < table.threshold.size(); ++r)
        out << relations.name(static_cast<std::uint32_t>(r)) << '\t'
            << format_double(table.threshold[r]) << '\n';
}

ThresholdTable load_thresholds(const std::filesystem::path& path, const Vocabulary& relations) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    ThresholdTable table;
    table.threshold.assign(relations.size(), std::numeric_limits<double>::quiet_NaN());
    table.dev_accuracy.assign(relations.size(), std::nullopt);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto tab = line.rfind('\t');
        if (tab == std::string::npos) throw ParseError(path.string(), line_no, "expected relation<TAB>threshold");
        const auto id = relations.find(line.substr(0, tab));
        if (!id) throw VocabularyError(line.substr(0, tab));
        const std::string value = line.substr(tab + 1);
        double v = 0.0;
        if (value == "inf") v = std::numeric_limits<double>::infinity();
        else if (value == "-inf") v = -std::numeric_limits<double>::infinity();
        else {
            auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
            if (ec != std::errc{} || ptr != value.data() + value.size())
                throw ParseError(path.string(), line_no, "bad threshold '" + value + "'");
        }
        table.threshold[*id] = v;
    }
    for (std::size_t r = 0; r < table.threshold.size(); ++r)
        if (std::isnan(table.threshold[r]))
            throw FormatError("threshold file has no entry for relation '" +
                              relations.name(static_cast<std::uint32_t>(r)) + "'");
    return table;
}

}  // namespace ntnkb
