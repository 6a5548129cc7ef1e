#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ntnkb/kb.hpp"

namespace ntnkb {

// Pretrained word vectors keyed by token; every entry has `dimension` values.
class WordVectorTable {
public:
    explicit WordVectorTable(std::size_t dimension = 0) : dimension_(dimension) {}

    std::size_t dimension() const noexcept { return dimension_; }
    std::size_t size() const noexcept { return entries_.size(); }

    void insert(std::string token, std::vector<double> values);
    const std::vector<double>* find(const std::string& token) const;

private:
    std::size_t dimension_;
    std::unordered_map<std::string, std::vector<double>> entries_;
};

// `token v1 ... vd` per line, optional `count dim` header line. A repeated
// token keeps its first vector.
WordVectorTable load_word_vectors(const std::filesystem::path& path);
WordVectorTable parse_word_vectors(std::string_view text, const std::string& source);

// Strips surrounding underscores and one trailing `_<digits>` sense suffix,
// then splits on '_' and ' ' and lowercases. `__ice_cream_1` -> {ice, cream}.
std::vector<std::string> tokenize_entity_name(std::string_view name);

// Row-major |E| x d matrix of entity vectors.
class EmbeddingMatrix {
public:
    EmbeddingMatrix() = default;
    EmbeddingMatrix(std::size_t rows, std::size_t dimension)
        : rows_(rows), dimension_(dimension), values_(rows * dimension, 0.0) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t dimension() const noexcept { return dimension_; }

    std::span<double> row(std::size_t i) { return {values_.data() + i * dimension_, dimension_}; }
    std::span<const double> row(std::size_t i) const {
        return {values_.data() + i * dimension_, dimension_};
    }
    std::span<const double> values() const noexcept { return values_; }

    bool trainable = true;

    friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t dimension_ = 0;
    std::vector<double> values_;
};

enum class InitMode { random, word_average };

inline constexpr double kRandomInitScale = 0.1;
inline constexpr double kOutOfVocabularyScale = 0.001;

// Fills `out` for one entity name. Rng stream is seeded by (seed, stream).
void compose_entity_vector(std::string_view name, const WordVectorTable& table,
                           std::uint64_t seed, std::uint64_t stream, std::span<double> out);

EmbeddingMatrix init_entity_embeddings(const KnowledgeBase& kb, InitMode mode,
                                       const WordVectorTable* table, std::uint64_t seed,
                                       std::size_t dimension);

}  // namespace ntnkb
