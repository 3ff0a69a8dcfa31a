#include "chaintt/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "binary_io.hpp"

namespace chaintt {

namespace detail {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(fmt::format("cannot open '{}' for reading", path));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path));
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError(fmt::format("write to '{}' failed", path));
}

}  // namespace detail

namespace {

constexpr std::string_view kMagic = "WTTC";

template <int Legs>
std::string encode(const TensorTrain<Legs>& t) {
    detail::ByteWriter w;
    w.raw(kMagic);
    w.u16(kCheckpointVersion);
    w.u64(t.order());
    for (Index d : t.dims()) w.u64(static_cast<std::uint64_t>(d));
    for (Index r : t.ranks()) w.u64(static_cast<std::uint64_t>(r));
    for (const auto& c : t.cores())
        for (const Complex& v : c.data) w.c128(v);
    return w.take();
}

template <int Legs>
TensorTrain<Legs> decode(std::string_view bytes) {
    detail::ByteReader r(bytes, "checkpoint");
    if (r.raw(4) != kMagic) throw IoError("checkpoint: bad magic (expected WTTC)");
    const auto version = r.u16();
    if (version != kCheckpointVersion)
        throw IoError(fmt::format("checkpoint: unsupported version {} (expected {})", version, kCheckpointVersion));
    const std::size_t n = r.checked(r.u64(), 8);
    if (n == 0) throw IoError("checkpoint: zero sites");
    std::vector<Index> dims(n);
    for (auto& d : dims) d = static_cast<Index>(r.u64());
    std::vector<Index> ranks(r.checked(n + 1, 8));
    for (auto& v : ranks) v = static_cast<Index>(r.u64());
    std::vector<Core<Legs>> cores;
    for (std::size_t k = 0; k < n; ++k) {
        if (dims[k] < 1 || ranks[k] < 1 || ranks[k + 1] < 1)
            throw IoError(fmt::format("checkpoint: invalid shape at site {}", k));
        std::array<Index, Legs> phys;
        phys.fill(dims[k]);
        const std::uint64_t count = static_cast<std::uint64_t>(ranks[k]) *
                                    static_cast<std::uint64_t>(Core<Legs>::phys_size_of(phys)) *
                                    static_cast<std::uint64_t>(ranks[k + 1]);
        r.checked(count, 16);
        Core<Legs> c(ranks[k], phys, ranks[k + 1]);
        for (auto& v : c.data) v = r.c128();
        cores.push_back(std::move(c));
    }
    if (!r.done()) throw IoError(fmt::format("checkpoint: {} trailing bytes", r.remaining()));
    try {
        return TensorTrain<Legs>(std::move(cores));
    } catch (const DimensionError& e) {
        throw IoError(fmt::format("checkpoint: {}", e.what()));
    }
}

}  // namespace

std::string encode_checkpoint(const TTState& x) { return encode(x); }
std::string encode_checkpoint(const TTOperator& h) { return encode(h); }
TTState decode_state_checkpoint(std::string_view bytes) { return decode<1>(bytes); }
TTOperator decode_operator_checkpoint(std::string_view bytes) { return decode<2>(bytes); }

void save_checkpoint(const std::string& path, const TTState& x) { detail::write_file(path, encode(x)); }

TTState load_state_checkpoint(const std::string& path) { return decode<1>(detail::read_file(path)); }

}  // namespace chaintt
