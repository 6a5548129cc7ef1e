#include "ntnkb/kb.hpp"

#include <fstream>
#include <sstream>

#include "ntnkb/error.hpp"

namespace ntnkb {

Vocabulary::Vocabulary(std::vector<std::string> names) {
    for (auto& n : names) {
        if (index_.contains(n)) throw FormatError("duplicate vocabulary entry '" + n + "'");
        index_.emplace(n, static_cast<std::uint32_t>(names_.size()));
        names_.push_back(std::move(n));
    }
}

std::uint32_t Vocabulary::intern(std::string_view name) {
    if (auto it = index_.find(name); it != index_.end()) return it->second;
    const auto id = static_cast<std::uint32_t>(names_.size());
    names_.emplace_back(name);
    index_.emplace(names_.back(), id);
    return id;
}

std::optional<std::uint32_t> Vocabulary::find(std::string_view name) const {
    if (auto it = index_.find(name); it != index_.end()) return it->second;
    return std::nullopt;
}

KnowledgeBase::KnowledgeBase(Vocabulary entities, Vocabulary relations,
                             std::vector<Triplet> train, std::vector<Triplet> dev,
                             std::vector<Triplet> test)
    : entities_(std::move(entities)),
      relations_(std::move(relations)),
      train_(std::move(train)),
      dev_(std::move(dev)),
      test_(std::move(test)) {
    for (const auto* split : {&train_, &dev_, &test_}) {
        for (const auto& t : *split) {
            if (t.left.index >= entities_.size() || t.right.index >= entities_.size() ||
                t.relation.index >= relations_.size()) {
                throw ContractViolation("triplet id outside the vocabulary");
            }
            membership_.insert(t);
        }
    }
}

Triplet KnowledgeBase::encode(const RawTriple& raw) const {
    auto lookup = [](const Vocabulary& v, const std::string& s) {
        auto id = v.find(s);
        if (!id) throw VocabularyError(s);
        return *id;
    };
    return {EntityId{lookup(entities_, raw.left)}, RelationId{lookup(relations_, raw.relation)},
            EntityId{lookup(entities_, raw.right)}};
}

RawTriple KnowledgeBase::decode(const Triplet& t) const {
    return {entities_.name(t.left.index), relations_.name(t.relation.index),
            entities_.name(t.right.index)};
}

SplitOverlap KnowledgeBase::overlap() const {
    auto count = [](const std::vector<Triplet>& a, const std::vector<Triplet>& b) {
        std::unordered_set<Triplet, TripletHash> lhs(a.begin(), a.end());
        std::unordered_set<Triplet, TripletHash> shared;
        for (const auto& t : b)
            if (lhs.contains(t)) shared.insert(t);
        return shared.size();
    };
    return {count(train_, dev_), count(train_, test_), count(dev_, test_)};
}

std::vector<RawTriple> parse_split(std::string_view text, const std::string& source) {
    std::vector<RawTriple> out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;

        const auto first = line.find('\t');
        const auto second = first == std::string_view::npos ? first : line.find('\t', first + 1);
        if (second == std::string_view::npos || line.find('\t', second + 1) != std::string_view::npos) {
            throw ParseError(source, line_no, "expected 3 tab-separated fields");
        }
        const std::string_view fields[3] = {line.substr(0, first),
                                            line.substr(first + 1, second - first - 1),
                                            line.substr(second + 1)};
        for (auto f : fields)
            if (f.empty()) throw ParseError(source, line_no, "empty field");
        out.push_back({std::string(fields[0]), std::string(fields[1]), std::string(fields[2])});
    }
    return out;
}

std::vector<RawTriple> load_split(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_split(buf.str(), path.string());
}

std::vector<RawTriple> load_split(const std::filesystem::path& path, const Vocabulary& entities,
                                  const Vocabulary& relations) {
    auto triples = load_split(path);
    for (const auto& t : triples) {
        if (!entities.contains(t.left)) throw VocabularyError(t.left);
        if (!relations.contains(t.relation)) throw VocabularyError(t.relation);
        if (!entities.contains(t.right)) throw VocabularyError(t.right);
    }
    return triples;
}

namespace {

std::vector<Triplet> encode_all(Vocabulary& entities, Vocabulary& relations,
                                const std::vector<RawTriple>& raw, bool frozen) {
    std::vector<Triplet> out;
    out.reserve(raw.size());
    auto id = [frozen](Vocabulary& v, const std::string& s) {
        if (!frozen) return v.intern(s);
        auto found = v.find(s);
        if (!found) throw VocabularyError(s);
        return *found;
    };
    for (const auto& r : raw) {
        // Field order fixes first-appearance order: left, relation, right.
        const auto l = id(entities, r.left);
        const auto rel = id(relations, r.relation);
        const auto rt = id(entities, r.right);
        out.push_back({EntityId{l}, RelationId{rel}, EntityId{rt}});
    }
    return out;
}

}  // namespace

KnowledgeBase build_knowledge_base(const std::vector<RawTriple>& train,
                                   const std::vector<RawTriple>& dev,
                                   const std::vector<RawTriple>& test) {
    Vocabulary entities;
    Vocabulary relations;
    auto tr = encode_all(entities, relations, train, false);
    auto dv = encode_all(entities, relations, dev, false);
    auto te = encode_all(entities, relations, test, false);
    return KnowledgeBase(std::move(entities), std::move(relations), std::move(tr), std::move(dv),
                         std::move(te));
}

KnowledgeBase build_knowledge_base(Vocabulary entities, Vocabulary relations,
                                   const std::vector<RawTriple>& train,
                                   const std::vector<RawTriple>& dev,
                                   const std::vector<RawTriple>& test) {
    auto tr = encode_all(entities, relations, train, true);
    auto dv = encode_all(entities, relations, dev, true);
    auto te = encode_all(entities, relations, test, true);
    return KnowledgeBase(std::move(entities), std::move(relations), std::move(tr), std::move(dv),
                         std::move(te));
}

}  // namespace ntnkb
