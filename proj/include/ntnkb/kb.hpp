#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace ntnkb {

struct EntityId {
    std::uint32_t index = 0;
    friend auto operator<=>(EntityId, EntityId) = default;
};

struct RelationId {
    std::uint32_t index = 0;
    friend auto operator<=>(RelationId, RelationId) = default;
};

struct Triplet {
    EntityId left;
    RelationId relation;
    EntityId right;
    friend auto operator<=>(const Triplet&, const Triplet&) = default;
};

struct TripletHash {
    std::size_t operator()(const Triplet& t) const noexcept {
        std::uint64_t h = t.left.index;
        h = h * 0x9e3779b97f4a7c15ULL ^ t.relation.index;
        h = h * 0x9e3779b97f4a7c15ULL ^ t.right.index;
        return static_cast<std::size_t>(h ^ (h >> 29));
    }
};

struct RawTriple {
    std::string left;
    std::string relation;
    std::string right;
    friend bool operator==(const RawTriple&, const RawTriple&) = default;
};

// Insertion-ordered string <-> dense index map.
class Vocabulary {
public:
    Vocabulary() = default;
    explicit Vocabulary(std::vector<std::string> names);

    // Returns the existing index or appends the name.
    std::uint32_t intern(std::string_view name);
    std::optional<std::uint32_t> find(std::string_view name) const;

    const std::string& name(std::uint32_t index) const { return names_.at(index); }
    const std::vector<std::string>& names() const noexcept { return names_; }
    std::size_t size() const noexcept { return names_.size(); }
    bool contains(std::string_view name) const { return find(name).has_value(); }

private:
    struct Hash {
        using is_transparent = void;
        std::size_t operator()(std::string_view s) const noexcept {
            return std::hash<std::string_view>{}(s);
        }
    };
    std::vector<std::string> names_;
    std::unordered_map<std::string, std::uint32_t, Hash, std::equal_to<>> index_;
};

struct SplitOverlap {
    std::size_t train_dev = 0;
    std::size_t train_test = 0;
    std::size_t dev_test = 0;
};

class KnowledgeBase {
public:
    KnowledgeBase() = default;
    KnowledgeBase(Vocabulary entities, Vocabulary relations, std::vector<Triplet> train,
                  std::vector<Triplet> dev, std::vector<Triplet> test);

    const Vocabulary& entities() const noexcept { return entities_; }
    const Vocabulary& relations() const noexcept { return relations_; }
    std::size_t entity_count() const noexcept { return entities_.size(); }
    std::size_t relation_count() const noexcept { return relations_.size(); }

    const std::vector<Triplet>& train() const noexcept { return train_; }
    const std::vector<Triplet>& dev() const noexcept { return dev_; }
    const std::vector<Triplet>& test() const noexcept { return test_; }

    // True iff t occurs in any split.
    bool contains(const Triplet& t) const { return membership_.contains(t); }
    std::size_t membership_size() const noexcept { return membership_.size(); }

    Triplet encode(const RawTriple& raw) const;
    RawTriple decode(const Triplet& t) const;

    // Distinct triplets shared between pairs of splits. Reported, never removed.
    SplitOverlap overlap() const;

private:
    Vocabulary entities_;
    Vocabulary relations_;
    std::vector<Triplet> train_;
    std::vector<Triplet> dev_;
    std::vector<Triplet> test_;
    std::unordered_set<Triplet, TripletHash> membership_;
};

// Reads `left<TAB>relation<TAB>right` lines in file order, skipping blank
// lines. With a frozen vocabulary pair, every token must already be known.
std::vector<RawTriple> load_split(const std::filesystem::path& path);
std::vector<RawTriple> load_split(const std::filesystem::path& path, const Vocabulary& entities,
                                  const Vocabulary& relations);

// Same parser over in-memory text; `source` names the input in errors.
std::vector<RawTriple> parse_split(std::string_view text, const std::string& source);

// Vocabularies are built from the union of the splits in first-appearance
// order (train, then dev, then test).
KnowledgeBase build_knowledge_base(const std::vector<RawTriple>& train,
                                   const std::vector<RawTriple>& dev,
                                   const std::vector<RawTriple>& test);

// Encodes splits against fixed vocabularies; unknown tokens raise VocabularyError.
KnowledgeBase build_knowledge_base(Vocabulary entities, Vocabulary relations,
                                   const std::vector<RawTriple>& train,
                                   const std::vector<RawTriple>& dev,
                                   const std::vector<RawTriple>& test);

}  // namespace ntnkb
