#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "harpbd/common.hpp"
#include "harpbd/params.hpp"

namespace harpbd {

// Versioned binary checkpoint container. Layout (all integers little-endian):
//   magic "HPBD" | u32 version | u64 entry count
//   per entry: u16 name length | name bytes | u8 rank | u64 dims[rank]
//              | f64 values (row-major, IEEE-754 bit patterns)
// Entries are written in map order (lexicographic by name), so saving the
// same parameters always produces the same bytes and a load/save round trip
// is bit-exact.

inline constexpr uint32_t kCheckpointVersion = 1;

namespace detail {

template <typename T>
void write_le(std::ostream& os, T v) {
    static_assert(std::is_integral_v<T>);
    unsigned char buf[sizeof(T)];
    for (size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& is, const std::string& where) {
    unsigned char buf[sizeof(T)];
    if (!is.read(reinterpret_cast<char*>(buf), sizeof(T)))
        throw ParseError(where + ": truncated checkpoint");
    T v = 0;
    for (size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
    return v;
}

}  // namespace detail

inline void save_checkpoint(const std::filesystem::path& path, const ParamMap& params) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    require(os.good(), "save_checkpoint: cannot open " + path.string());
    os.write("HPBD", 4);
    detail::write_le<uint32_t>(os, kCheckpointVersion);
    detail::write_le<uint64_t>(os, params.size());
    for (const auto& [name, t] : params) {
        require(name.size() <= 0xffff, "save_checkpoint: name too long");
        detail::write_le<uint16_t>(os, static_cast<uint16_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        const auto& shape = t.shape();
        require(shape.size() <= 0xff, "save_checkpoint: rank too large");
        detail::write_le<uint8_t>(os, static_cast<uint8_t>(shape.size()));
        for (int64_t d : shape) detail::write_le<uint64_t>(os, static_cast<uint64_t>(d));
        for (int64_t i = 0; i < t.numel(); ++i)
            detail::write_le<uint64_t>(os, std::bit_cast<uint64_t>(t[static_cast<size_t>(i)]));
    }
    os.flush();
    require(os.good(), "save_checkpoint: write failed for " + path.string());
}

inline ParamMap load_checkpoint(const std::filesystem::path& path) {
    const std::string where = path.string();
    std::ifstream is(path, std::ios::binary);
    if (!is.good()) throw ParseError(where + ": cannot open checkpoint");
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, "HPBD", 4) != 0)
        throw ParseError(where + ": bad checkpoint magic");
    const uint32_t version = detail::read_le<uint32_t>(is, where);
    if (version != kCheckpointVersion)
        throw ParseError(where + ": unsupported checkpoint version " + std::to_string(version));
    const uint64_t count = detail::read_le<uint64_t>(is, where);
    ParamMap out;
    for (uint64_t e = 0; e < count; ++e) {
        const uint16_t nlen = detail::read_le<uint16_t>(is, where);
        std::string name(nlen, '\0');
        if (nlen && !is.read(name.data(), nlen)) throw ParseError(where + ": truncated name");
        const uint8_t rank = detail::read_le<uint8_t>(is, where);
        std::vector<int64_t> shape(rank);
        int64_t numel = 1;
        for (auto& d : shape) {
            d = static_cast<int64_t>(detail::read_le<uint64_t>(is, where));
            if (d < 0 || d > (int64_t{1} << 32)) throw ParseError(where + ": absurd dimension");
            numel *= d;
        }
        std::vector<double> data(static_cast<size_t>(numel));
        for (auto& v : data) v = std::bit_cast<double>(detail::read_le<uint64_t>(is, where));
        if (!out.emplace(std::move(name), Tensor(std::move(shape), std::move(data))).second)
            throw ParseError(where + ": duplicate entry name");
    }
    is.peek();
    if (!is.eof()) throw ParseError(where + ": trailing bytes after last entry");
    return out;
}

}  // namespace harpbd
