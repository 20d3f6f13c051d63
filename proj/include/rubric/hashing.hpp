#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace rubric {

// FNV-1a, 64-bit: offset basis 0xcbf29ce484222325, prime 0x100000001b3.
constexpr std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (char c : bytes) {
        hash ^= static_cast<std::uint8_t>(c);
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

namespace detail {

constexpr std::array<std::uint64_t, 256> make_crc64_table(std::uint64_t reflected_poly) {
    std::array<std::uint64_t, 256> table{};
    for (std::uint64_t i = 0; i < 256; ++i) {
        std::uint64_t crc = i;
        for (int k = 0; k < 8; ++k) {
            crc = (crc & 1) ? (crc >> 1) ^ reflected_poly : crc >> 1;
        }
        table[i] = crc;
    }
    return table;
}

}  // namespace detail

// CRC-64/XZ (ECMA-182 polynomial 0x42F0E1EBA9EA3693, reflected form
// 0xC96C5795D7870F42, init and final xor 0xFFFFFFFFFFFFFFFF).
// Check value: crc64("123456789") == 0x995DC9BBDF1939FA.
class Crc64 {
public:
    static constexpr std::uint64_t kReflectedPoly = 0xC96C5795D7870F42ULL;

    constexpr void update(std::span<const std::uint8_t> bytes) {
        for (std::uint8_t b : bytes) {
            m_state = kTable[(m_state ^ b) & 0xFF] ^ (m_state >> 8);
        }
    }

    constexpr void update(std::string_view bytes) {
        for (char c : bytes) {
            const auto b = static_cast<std::uint8_t>(c);
            m_state = kTable[(m_state ^ b) & 0xFF] ^ (m_state >> 8);
        }
    }

    constexpr std::uint64_t value() const { return ~m_state; }

private:
    static constexpr std::array<std::uint64_t, 256> kTable = detail::make_crc64_table(kReflectedPoly);
    std::uint64_t m_state = ~0ULL;
};

constexpr std::uint64_t crc64(std::span<const std::uint8_t> bytes) {
    Crc64 crc;
    crc.update(bytes);
    return crc.value();
}

constexpr std::uint64_t crc64(std::string_view bytes) {
    Crc64 crc;
    crc.update(bytes);
    return crc.value();
}

}  // namespace rubric
