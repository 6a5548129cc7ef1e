#pragma once

#include <cstdint>
#include <vector>

#include "ntnkb/kb.hpp"

namespace ntnkb {

struct SyntheticSplits {
    std::vector<RawTriple> train;
    std::vector<RawTriple> dev;
    std::vector<RawTriple> test;
};

// A three-level taxonomy with 50 entities: `entity` at the root, 3 branches,
// 5 groups and 41 items. Relations:
//   _hypernym   child -> parent
//   _ancestor   node -> every proper ancestor
//   _sibling    nodes sharing a parent, both directions
// The 491 facts are shuffled and split 391 / 50 / 50.
SyntheticSplits make_taxonomy_fixture(std::uint64_t seed);

}  // namespace ntnkb
