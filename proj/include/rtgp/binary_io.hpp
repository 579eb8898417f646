#pragma once

// Little-endian primitive reader/writer shared by the container formats.

#include "rtgp/error.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>

namespace rtgp::binio {

static_assert(std::endian::native == std::endian::little, "container I/O assumes a little-endian host");

template <typename T>
void put(std::ostream& out, T value)
{
    static_assert(std::is_arithmetic_v<T>);
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

inline void put_bytes(std::ostream& out, const void* data, std::size_t size)
{
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
}

template <typename T>
T get(std::istream& in, const char* what)
{
    static_assert(std::is_arithmetic_v<T>);
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (in.gcount() != static_cast<std::streamsize>(sizeof(T))) {
        throw FormatError(FormatError::Code::truncated, std::string("truncated while reading ") + what);
    }
    return value;
}

inline void get_bytes(std::istream& in, void* data, std::size_t size, const char* what)
{
    in.read(static_cast<char*>(data), static_cast<std::streamsize>(size));
    if (in.gcount() != static_cast<std::streamsize>(size)) {
        throw FormatError(FormatError::Code::truncated, std::string("truncated while reading ") + what);
    }
}

inline void expect_magic(std::istream& in, const char (&magic)[5])
{
    char buf[4];
    in.read(buf, 4);
    if (in.gcount() != 4) {
        throw FormatError(FormatError::Code::truncated, "file shorter than its magic number");
    }
    if (std::memcmp(buf, magic, 4) != 0) {
        throw FormatError(FormatError::Code::bad_magic, std::string("expected magic ") + magic);
    }
}

}  // namespace rtgp::binio
