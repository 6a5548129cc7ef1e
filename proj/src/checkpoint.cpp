#include "ntnkb/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "ntnkb/error.hpp"

namespace ntnkb {
namespace {

constexpr char kMagic[4] = {'N', 'T', 'K', 'B'};

class Writer {
public:
    void bytes(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        out_.insert(out_.end(), b, b + n);
    }
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    std::vector<std::uint8_t> take() { return std::move(out_); }
    std::size_t size() const { return out_.size(); }

private:
    std::vector<std::uint8_t> out_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

    std::span<const std::uint8_t> take(std::size_t n) {
        if (n > in_.size() - pos_) throw FormatError("checkpoint is truncated");
        auto s = in_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    std::uint8_t u8() { return take(1)[0]; }
    std::uint32_t u32() {
        auto s = take(4);
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | s[i];
        return v;
    }
    std::size_t position() const { return pos_; }
    std::size_t remaining() const { return in_.size() - pos_; }

private:
    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

std::uint64_t load_u64(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

std::uint32_t checked_u32(std::size_t v, const char* what) {
    if (v > 0xffffffffULL) throw FormatError(std::string(what) + " does not fit the checkpoint header");
    return static_cast<std::uint32_t>(v);
}

struct Header {
    ModelKind kind;
    std::uint32_t d, k, entities, relations;
};

Header read_header(Reader& r) {
    auto magic = r.take(4);
    if (std::memcmp(magic.data(), kMagic, 4) != 0) throw FormatError("not a checkpoint (bad magic)");
    const auto version = r.u32();
    if (version != kCheckpointVersion)
        throw FormatError("unsupported checkpoint version " + std::to_string(version));
    const auto kind = r.u8();
    if (kind > 3) throw FormatError("unknown model kind byte " + std::to_string(kind));
    Header h{static_cast<ModelKind>(kind), r.u32(), r.u32(), r.u32(), r.u32()};
    return h;
}

std::vector<std::string> read_names(Reader& r, std::uint32_t count) {
    std::vector<std::string> names;
    names.reserve(std::min<std::uint32_t>(count, 1u << 20));
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto len = r.u32();
        auto s = r.take(len);
        names.emplace_back(reinterpret_cast<const char*>(s.data()), s.size());
    }
    return names;
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const ModelParams& params, const Vocabulary& entities,
                                               const Vocabulary& relations) {
    const auto& shape = params.shape();
    if (entities.size() != shape.entities || relations.size() != shape.relations)
        throw ContractViolation("vocabulary sizes do not match the model");
    Writer w;
    w.bytes(kMagic, 4);
    w.u32(kCheckpointVersion);
    w.u8(static_cast<std::uint8_t>(shape.kind));
    w.u32(checked_u32(shape.dimension, "dimension"));
    w.u32(checked_u32(shape.slices, "slice count"));
    w.u32(checked_u32(shape.entities, "entity count"));
    w.u32(checked_u32(shape.relations, "relation count"));
    for (const auto* vocab : {&entities, &relations}) {
        for (const auto& name : vocab->names()) {
            w.u32(checked_u32(name.size(), "name length"));
            w.bytes(name.data(), name.size());
        }
    }
    std::uint64_t checksum = 0;
    for (double v : params.theta()) {
        const auto bits = std::bit_cast<std::uint64_t>(v);
        w.u64(bits);
        checksum += bits;
    }
    w.u64(checksum);
    return w.take();
}

Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    const auto h = read_header(r);
    Vocabulary entities(read_names(r, h.entities));
    Vocabulary relations(read_names(r, h.relations));

    if (r.remaining() < 8 || (r.remaining() - 8) % 8 != 0)
        throw FormatError("checkpoint payload is not a whole number of f64 values");
    const std::size_t count = (r.remaining() - 8) / 8;

    auto shape = make_shape(h.kind, h.d, h.k, h.entities, h.relations, false);
    if (h.kind == ModelKind::ntn && ParameterLayout(shape).size() != count) {
        auto shared = make_shape(h.kind, h.d, h.k, h.entities, h.relations, true);
        if (ParameterLayout(shared).size() == count) shape = shared;
    }
    if (shape.slices != h.k) throw FormatError("slice count is inconsistent with the model kind");
    if (ParameterLayout(shape).size() != count)
        throw FormatError("checkpoint payload has " + std::to_string(count) +
                          " values, the header implies " + std::to_string(ParameterLayout(shape).size()));

    auto payload = r.take(count * 8);
    std::vector<double> theta(count);
    std::uint64_t checksum = 0;
    for (std::size_t i = 0; i < count; ++i) {
        const auto bits = load_u64(payload.data() + 8 * i);
        checksum += bits;
        theta[i] = std::bit_cast<double>(bits);
    }
    if (load_u64(r.take(8).data()) != checksum) throw FormatError("checkpoint checksum mismatch");
    return {ModelParams(shape, std::move(theta)), std::move(entities), std::move(relations)};
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     const Vocabulary& entities, const Vocabulary& relations) {
    const auto bytes = serialize_checkpoint(params, entities, relations);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_checkpoint(bytes);
}

std::size_t checkpoint_payload_offset(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    const auto h = read_header(r);
    read_names(r, h.entities);
    read_names(r, h.relations);
    return r.position();
}

}  // namespace ntnkb
