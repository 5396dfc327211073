#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <string>
#include <vector>

#include "common/error.hpp"

// Little-endian binary stream helpers shared by the model / checkpoint /
// sample-store formats. All on-disk integers are little-endian regardless of
// host order.

namespace cseg::bin {

inline bool host_is_little_endian() {
    const std::uint32_t probe = 1;
    std::uint8_t first;
    std::memcpy(&first, &probe, 1);
    return first == 1;
}

template <typename T>
void write_le(std::ostream& os, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    std::array<std::uint8_t, sizeof(T)> raw;
    std::memcpy(raw.data(), &value, sizeof(T));
    if (!host_is_little_endian()) {
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i)
            std::swap(raw[i], raw[sizeof(T) - 1 - i]);
    }
    os.write(reinterpret_cast<const char*>(raw.data()), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
    static_assert(std::is_trivially_copyable_v<T>);
    std::array<std::uint8_t, sizeof(T)> raw;
    is.read(reinterpret_cast<char*>(raw.data()), sizeof(T));
    if (!is) throw_format("unexpected end of file while reading binary field");
    if (!host_is_little_endian()) {
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i)
            std::swap(raw[i], raw[sizeof(T) - 1 - i]);
    }
    T value;
    std::memcpy(&value, raw.data(), sizeof(T));
    return value;
}

template <typename T>
void write_le_array(std::ostream& os, const T* data, std::size_t count) {
    if (host_is_little_endian()) {
        os.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(T)));
    } else {
        for (std::size_t i = 0; i < count; ++i) write_le(os, data[i]);
    }
}

template <typename T>
void read_le_array(std::istream& is, T* data, std::size_t count) {
    if (host_is_little_endian()) {
        is.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * sizeof(T)));
        if (!is) throw_format("unexpected end of file while reading binary array");
    } else {
        for (std::size_t i = 0; i < count; ++i) data[i] = read_le<T>(is);
    }
}

// CRC-32 (IEEE 802.3 polynomial), used as the trailing checksum of binary blobs.
class Crc32 {
public:
    Crc32() { init_table(); }

    void update(const void* data, std::size_t size) {
        const auto* bytes = static_cast<const std::uint8_t*>(data);
        for (std::size_t i = 0; i < size; ++i)
            crc_ = table_[(crc_ ^ bytes[i]) & 0xffu] ^ (crc_ >> 8);
    }

    std::uint32_t value() const { return crc_ ^ 0xffffffffu; }

    static std::uint32_t of(const void* data, std::size_t size) {
        Crc32 crc;
        crc.update(data, size);
        return crc.value();
    }

private:
    void init_table() {
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k)
                c = (c & 1u) ? 0xedb88320u ^ (c >> 1) : c >> 1;
            table_[i] = c;
        }
    }

    std::uint32_t crc_ = 0xffffffffu;
    std::array<std::uint32_t, 256> table_{};
};

/// Writes payload || CRC-32(payload) to path.
inline void write_checksummed(const std::string& path, const std::string& payload) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw_io("cannot open '" + path + "' for writing");
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    write_le<std::uint32_t>(out, Crc32::of(payload.data(), payload.size()));
    if (!out) throw_io("write failed for '" + path + "'");
}

/// Reads a blob written by write_checksummed; verifies and strips the CRC.
inline std::string read_checksummed(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw_io("cannot open '" + path + "' for reading");
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw_io("read failed for '" + path + "'");
    if (bytes.size() < 4) throw_format("'" + path + "': too short to hold a checksum");
    const std::size_t payload_size = bytes.size() - 4;
    std::uint32_t stored = 0;
    for (int i = 0; i < 4; ++i)
        stored |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(bytes[payload_size + i])) << (8 * i);
    if (Crc32::of(bytes.data(), payload_size) != stored)
        throw_format("'" + path + "': checksum mismatch (file corrupt or truncated)");
    bytes.resize(payload_size);
    return bytes;
}

}  // namespace cseg::bin
