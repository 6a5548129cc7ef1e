#include "ntnkb/embeddings.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ntnkb/error.hpp"
#include "ntnkb/random.hpp"

namespace ntnkb {

void WordVectorTable::insert(std::string token, std::vector<double> values) {
    if (values.size() != dimension_) throw ConfigError("word vector dimension mismatch");
    entries_.try_emplace(std::move(token), std::move(values));
}

const std::vector<double>* WordVectorTable::find(const std::string& token) const {
    auto it = entries_.find(token);
    return it == entries_.end() ? nullptr : &it->second;
}

namespace {

std::vector<std::string_view> split_spaces(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (pos < line.size()) {
        auto end = line.find(' ', pos);
        if (end == std::string_view::npos) end = line.size();
        if (end > pos) out.push_back(line.substr(pos, end - pos));
        pos = end + 1;
    }
    return out;
}

bool parse_unsigned(std::string_view s, std::size_t& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

}  // namespace

WordVectorTable parse_word_vectors(std::string_view text, const std::string& source) {
    WordVectorTable table;
    bool have_dimension = false;
    std::size_t header_dim = 0;
    bool have_header = false;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        auto fields = split_spaces(line);
        if (fields.empty()) continue;

        if (line_no == 1 && fields.size() == 2) {
            std::size_t count = 0;
            if (parse_unsigned(fields[0], count) && parse_unsigned(fields[1], header_dim)) {
                have_header = true;
                continue;
            }
        }
        if (fields.size() < 2) throw ParseError(source, line_no, "word vector line has no values");

        const std::size_t dim = fields.size() - 1;
        if (!have_dimension) {
            if (have_header && header_dim != dim)
                throw ParseError(source, line_no, "dimension disagrees with header");
            table = WordVectorTable(dim);
            have_dimension = true;
        } else if (dim != table.dimension()) {
            throw ParseError(source, line_no,
                             "dimension mismatch: expected " + std::to_string(table.dimension()) +
                                 ", got " + std::to_string(dim));
        }

        std::vector<double> values(dim);
        for (std::size_t i = 0; i < dim; ++i) {
            auto f = fields[i + 1];
            auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), values[i]);
            if (ec != std::errc{} || ptr != f.data() + f.size() || !std::isfinite(values[i])) {
                throw ParseError(source, line_no, "non-numeric component '" + std::string(f) + "'");
            }
        }
        table.insert(std::string(fields[0]), std::move(values));
    }
    if (!have_dimension && have_header) table = WordVectorTable(header_dim);
    return table;
}

WordVectorTable load_word_vectors(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_word_vectors(buf.str(), path.string());
}

std::vector<std::string> tokenize_entity_name(std::string_view name) {
    while (!name.empty() && name.front() == '_') name.remove_prefix(1);
    while (!name.empty() && name.back() == '_') name.remove_suffix(1);

    // Sense suffix: `_<digits>` at the very end.
    if (auto us = name.rfind('_'); us != std::string_view::npos && us + 1 < name.size()) {
        auto tail = name.substr(us + 1);
        if (std::all_of(tail.begin(), tail.end(), [](unsigned char c) { return std::isdigit(c); }))
            name = name.substr(0, us);
    }

    std::vector<std::string> tokens;
    std::string current;
    for (char c : name) {
        if (c == '_' || c == ' ') {
            if (!current.empty()) tokens.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

void compose_entity_vector(std::string_view name, const WordVectorTable& table,
                           std::uint64_t seed, std::uint64_t stream, std::span<double> out) {
    if (out.size() != table.dimension()) throw ConfigError("word vector dimension mismatch");
    auto rng = Rng::derived({seed, stream});
    const auto tokens = tokenize_entity_name(name);

    std::vector<const std::vector<double>*> found;
    for (const auto& t : tokens) found.push_back(table.find(t));
    const bool any_known =
        std::any_of(found.begin(), found.end(), [](auto* v) { return v != nullptr; });

    if (!any_known) {
        for (auto& x : out) x = rng.symmetric(kOutOfVocabularyScale);
        return;
    }
    std::fill(out.begin(), out.end(), 0.0);
    for (const auto* v : found) {
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] += v ? (*v)[i] : rng.symmetric(kOutOfVocabularyScale);
    }
    const double n = static_cast<double>(found.size());
    for (auto& x : out) x /= n;
}

EmbeddingMatrix init_entity_embeddings(const KnowledgeBase& kb, InitMode mode,
                                       const WordVectorTable* table, std::uint64_t seed,
                                       std::size_t dimension) {
    if (dimension == 0) throw ConfigError("embedding dimension must be positive");
    EmbeddingMatrix m(kb.entity_count(), dimension);
    if (mode == InitMode::word_average) {
        if (table == nullptr) throw ConfigError("word-average initialization needs word vectors");
        if (table->dimension() != dimension)
            throw ConfigError("word vectors have dimension " + std::to_string(table->dimension()) +
                              ", model expects " + std::to_string(dimension));
        for (std::size_t e = 0; e < m.rows(); ++e)
            compose_entity_vector(kb.entities().name(static_cast<std::uint32_t>(e)), *table, seed,
                                  e, m.row(e));
    } else {
        for (std::size_t e = 0; e < m.rows(); ++e) {
            auto rng = Rng::derived({seed, e});
            for (auto& x : m.row(e)) x = rng.symmetric(kRandomInitScale);
        }
    }
    return m;
}

}  // namespace ntnkb
