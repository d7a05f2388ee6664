#pragma once

// Little-endian encoding helpers shared by the binary codecs.

#include "evc/error.hpp"

#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <type_traits>

namespace evc::detail {

class ByteWriter {
public:
    void bytes(std::string_view s) { buf_.append(s); }

    template <typename T>
    void put(T value)
    {
        static_assert(std::is_arithmetic_v<T>);
        using U = std::conditional_t<sizeof(T) == 1, std::uint8_t,
                  std::conditional_t<sizeof(T) == 2, std::uint16_t,
                  std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>>;
        auto bits = std::bit_cast<U>(value);
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            buf_.push_back(static_cast<char>(bits & 0xFF));
            if constexpr (sizeof(T) > 1) bits = static_cast<U>(bits >> 8);
        }
    }

    void zeros(std::size_t n) { buf_.append(n, '\0'); }

    const std::string& buffer() const { return buf_; }
    void reserve(std::size_t n) { buf_.reserve(n); }

private:
    std::string buf_;
};

class ByteReader {
public:
    explicit ByteReader(std::string_view data) : data_(data) {}

    std::size_t remaining() const { return data_.size() - pos_; }

    std::string_view bytes(std::size_t n, const char* what)
    {
        need(n, what);
        auto s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    template <typename T>
    T get(const char* what)
    {
        static_assert(std::is_arithmetic_v<T>);
        using U = std::conditional_t<sizeof(T) == 1, std::uint8_t,
                  std::conditional_t<sizeof(T) == 2, std::uint16_t,
                  std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>>;
        need(sizeof(T), what);
        U bits = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i)
            bits = static_cast<U>(bits | static_cast<U>(static_cast<U>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i)));
        pos_ += sizeof(T);
        return std::bit_cast<T>(bits);
    }

private:
    void need(std::size_t n, const char* what) const
    {
        if (remaining() < n)
            throw FormatError(std::string("truncated file while reading ") + what);
    }

    std::string_view data_;
    std::size_t pos_ = 0;
};

inline std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failure on '" + path.string() + "'");
    return data;
}

inline void write_file(const std::filesystem::path& path, std::string_view data)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw IoError("write failure on '" + path.string() + "'");
}

} // namespace evc::detail
