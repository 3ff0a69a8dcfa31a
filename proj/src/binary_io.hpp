#pragma once

// Little-endian byte packing shared by the checkpoint and archive formats.

#include <bit>
#include <cstdint>
#include <string>
#include <string_view>

#include <fmt/format.h>

#include "chaintt/types.hpp"

namespace chaintt::detail {

class ByteWriter {
public:
    void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
    void u16(std::uint16_t v) {
        for (int s = 0; s < 16; s += 8) buf_.push_back(static_cast<char>((v >> s) & 0xFFu));
    }
    void u64(std::uint64_t v) {
        for (int s = 0; s < 64; s += 8) buf_.push_back(static_cast<char>((v >> s) & 0xFFu));
    }
    void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void c128(Complex v) {
        f64(v.real());
        f64(v.imag());
    }
    void raw(std::string_view s) { buf_.append(s); }
    /// u64 length prefix followed by the bytes.
    void text(std::string_view s) {
        u64(s.size());
        raw(s);
    }

    const std::string& bytes() const { return buf_; }
    std::string take() { return std::move(buf_); }

private:
    std::string buf_;
};

class ByteReader {
public:
    ByteReader(std::string_view data, std::string context) : data_(data), context_(std::move(context)) {}

    std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
    std::uint16_t u16() {
        auto s = take(2);
        return static_cast<std::uint16_t>(static_cast<std::uint8_t>(s[0]) |
                                          (static_cast<std::uint16_t>(static_cast<std::uint8_t>(s[1])) << 8));
    }
    std::uint64_t u64() {
        auto s = take(8);
        std::uint64_t v = 0;
        for (int k = 7; k >= 0; --k) v = (v << 8) | static_cast<std::uint8_t>(s[static_cast<std::size_t>(k)]);
        return v;
    }
    std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
    double f64() { return std::bit_cast<double>(u64()); }
    Complex c128() {
        const double re = f64();
        const double im = f64();
        return {re, im};
    }
    std::string_view raw(std::size_t n) { return take(n); }
    std::string text() {
        const auto n = u64();
        return std::string(take(checked(n)));
    }
    /// Guard for element counts read from the stream.
    std::size_t checked(std::uint64_t n, std::size_t element_size = 1) const {
        if (element_size == 0 || n > remaining() / element_size)
            throw IoError(fmt::format("{}: truncated data (need {} x {} bytes, {} left)", context_, n, element_size,
                                      remaining()));
        return static_cast<std::size_t>(n);
    }

    std::size_t remaining() const { return data_.size() - pos_; }
    bool done() const { return pos_ == data_.size(); }
    const std::string& context() const { return context_; }

private:
    std::string_view take(std::size_t n) {
        if (n > remaining())
            throw IoError(fmt::format("{}: truncated data at byte {} (need {}, {} left)", context_, pos_, n,
                                      remaining()));
        auto s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    std::string_view data_;
    std::size_t pos_ = 0;
    std::string context_;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& bytes);

}  // namespace chaintt::detail
