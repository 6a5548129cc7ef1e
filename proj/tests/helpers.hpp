#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "ntnkb/models.hpp"
#include "ntnkb/random.hpp"

namespace testing {

inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("ntnkb_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    f << text;
}

inline std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

inline std::vector<double> random_vector(ntnkb::Rng& rng, std::size_t n, double r = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.symmetric(r);
    return v;
}

inline ntnkb::ModelParams random_params(const ntnkb::ModelShape& shape, ntnkb::Rng& rng,
                                        double r = 0.5) {
    ntnkb::ParameterLayout layout(shape);
    return ntnkb::ModelParams(shape, random_vector(rng, layout.size(), r));
}

// Full sort of all candidates by (plausibility desc, id asc); position of the answer.
inline std::size_t brute_force_rank(const ntnkb::ModelParams& params, const ntnkb::Triplet& t) {
    const std::size_t n = params.shape().entities;
    std::vector<std::pair<double, std::uint32_t>> scored;
    for (std::uint32_t e = 0; e < n; ++e)
        scored.emplace_back(params.plausibility({t.left, t.relation, ntnkb::EntityId{e}}), e);
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (std::size_t i = 0; i < scored.size(); ++i)
        if (scored[i].second == t.right.index) return i + 1;
    return 0;
}

// Accuracy at every observed score and at +-inf; the best one.
inline double exhaustive_best_accuracy(const std::vector<double>& pos,
                                       const std::vector<double>& neg) {
    std::vector<double> cands(pos);
    cands.insert(cands.end(), neg.begin(), neg.end());
    cands.push_back(-1e300);
    cands.push_back(1e300);
    double best = 0.0;
    for (double t : cands) {
        std::size_t ok = 0;
        for (double p : pos) ok += p >= t;
        for (double q : neg) ok += q < t;
        best = std::max(best, static_cast<double>(ok) / static_cast<double>(pos.size() + neg.size()));
    }
    return best;
}

}  // namespace testing
