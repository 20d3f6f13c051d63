#pragma once

#include "rubric/error.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rubric::store {

// Little-endian writer; strings are a u32 byte length followed by the bytes.
class ByteWriter {
public:
    void u8(std::uint8_t v) { m_bytes.push_back(v); }
    void u16(std::uint16_t v) { put(v, 2); }
    void u32(std::uint32_t v) { put(v, 4); }
    void u64(std::uint64_t v) { put(v, 8); }
    void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }

    void str(std::string_view s) {
        u32(static_cast<std::uint32_t>(s.size()));
        raw(s);
    }

    void raw(std::string_view s) { m_bytes.insert(m_bytes.end(), s.begin(), s.end()); }
    void raw(std::span<const std::uint8_t> s) { m_bytes.insert(m_bytes.end(), s.begin(), s.end()); }

    const std::vector<std::uint8_t>& bytes() const { return m_bytes; }
    std::vector<std::uint8_t> take() { return std::move(m_bytes); }

private:
    void put(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) {
            m_bytes.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
        }
    }

    std::vector<std::uint8_t> m_bytes;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> bytes) : m_bytes(bytes) {}

    std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
    std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
    std::uint64_t u64() { return get(8); }
    double f64() { return std::bit_cast<double>(get(8)); }

    std::string str() {
        const auto n = u32();
        need(n);
        std::string s(reinterpret_cast<const char*>(m_bytes.data() + m_pos), n);
        m_pos += n;
        return s;
    }

    std::span<const std::uint8_t> raw(std::size_t n) {
        need(n);
        auto s = m_bytes.subspan(m_pos, n);
        m_pos += n;
        return s;
    }

    std::size_t position() const { return m_pos; }
    std::size_t remaining() const { return m_bytes.size() - m_pos; }

private:
    void need(std::size_t n) const {
        if (n > m_bytes.size() - m_pos) {
            throw Error(Errc::ParseError, "truncated data at byte " + std::to_string(m_pos));
        }
    }

    std::uint64_t get(int n) {
        need(static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) {
            v |= static_cast<std::uint64_t>(m_bytes[m_pos + static_cast<std::size_t>(i)]) << (8 * i);
        }
        m_pos += static_cast<std::size_t>(n);
        return v;
    }

    std::span<const std::uint8_t> m_bytes;
    std::size_t m_pos = 0;
};

}  // namespace rubric::store
