#include "ntnkb/synthetic.hpp"

#include <array>
#include <string>
#include <utility>

#include "ntnkb/random.hpp"

namespace ntnkb {

namespace {

template <class T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

struct Node {
    std::string name;
    std::size_t parent;  // index into the node list; the root points at itself
};

}  // namespace

SyntheticSplits make_taxonomy_fixture(std::uint64_t seed) {
    auto rng = Rng::derived({seed, 0x7461786fULL});
    constexpr std::array<std::size_t, 3> kGroupsPerBranch{2, 2, 1};
    std::vector<std::size_t> sizes{9, 8, 8, 8, 8};
    shuffle(sizes, rng);

    std::vector<Node> nodes{{"entity", 0}};
    std::size_t group = 0;
    for (std::size_t b = 0; b < kGroupsPerBranch.size(); ++b) {
        const std::size_t branch = nodes.size();
        nodes.push_back({"branch_" + std::to_string(b), 0});
        for (std::size_t g = 0; g < kGroupsPerBranch[b]; ++g, ++group) {
            const std::size_t parent = nodes.size();
            nodes.push_back({"group_" + std::to_string(group), branch});
            for (std::size_t i = 0; i < sizes[group]; ++i)
                nodes.push_back({"item_" + std::to_string(group) + "_" + std::to_string(i), parent});
        }
    }

    std::vector<RawTriple> facts;
    for (std::size_t n = 1; n < nodes.size(); ++n) {
        facts.push_back({nodes[n].name, "_hypernym", nodes[nodes[n].parent].name});
        for (std::size_t a = nodes[n].parent;; a = nodes[a].parent) {
            facts.push_back({nodes[n].name, "_ancestor", nodes[a].name});
            if (a == 0) break;
        }
        for (std::size_t m = 1; m < nodes.size(); ++m)
            if (m != n && nodes[m].parent == nodes[n].parent)
                facts.push_back({nodes[n].name, "_sibling", nodes[m].name});
    }

    shuffle(facts, rng);
    constexpr std::ptrdiff_t kHeldOut = 50;
    SyntheticSplits out;
    out.dev.assign(facts.begin(), facts.begin() + kHeldOut);
    out.test.assign(facts.begin() + kHeldOut, facts.begin() + 2 * kHeldOut);
    out.train.assign(facts.begin() + 2 * kHeldOut, facts.end());
    return out;
}

}  // namespace ntnkb
