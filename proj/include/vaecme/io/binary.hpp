#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace vaecme::io {

static_assert(std::endian::native == std::endian::little, "binary containers assume a little-endian host");

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Writer {
public:
    explicit Writer(std::ostream& os) : os_(os) {}

    void magic(const char (&m)[9]) { os_.write(m, 8); }
    void u32(std::uint32_t v) { raw(&v, sizeof v); }
    void u64(std::uint64_t v) { raw(&v, sizeof v); }
    void f64(double v) { raw(&v, sizeof v); }
    void str(const std::string& s)
    {
        u64(s.size());
        os_.write(s.data(), static_cast<std::streamsize>(s.size()));
    }
    void f64s(const std::vector<double>& v)
    {
        u64(v.size());
        raw(v.data(), v.size() * sizeof(double));
    }
    void raw(const void* p, std::size_t bytes)
    {
        os_.write(static_cast<const char*>(p), static_cast<std::streamsize>(bytes));
        if (!os_)
            throw std::runtime_error("write failed");
    }

private:
    std::ostream& os_;
};

class Reader {
public:
    explicit Reader(std::istream& is) : is_(is) {}

    void expect_magic(const char (&m)[9])
    {
        char buf[8];
        raw(buf, 8);
        if (std::memcmp(buf, m, 8) != 0)
            throw FormatError(std::string("bad magic, expected ") + m);
    }
    std::uint32_t u32()
    {
        std::uint32_t v;
        raw(&v, sizeof v);
        return v;
    }
    std::uint64_t u64()
    {
        std::uint64_t v;
        raw(&v, sizeof v);
        return v;
    }
    double f64()
    {
        double v;
        raw(&v, sizeof v);
        return v;
    }
    std::string str()
    {
        std::string s(checked_count(u64(), 1), '\0');
        raw(s.data(), s.size());
        return s;
    }
    std::vector<double> f64s()
    {
        std::vector<double> v(checked_count(u64(), sizeof(double)));
        raw(v.data(), v.size() * sizeof(double));
        return v;
    }
    void raw(void* p, std::size_t bytes)
    {
        is_.read(static_cast<char*>(p), static_cast<std::streamsize>(bytes));
        if (static_cast<std::size_t>(is_.gcount()) != bytes)
            throw FormatError("unexpected end of file");
    }

private:
    // guards against allocating from a corrupted length field
    static std::size_t checked_count(std::uint64_t n, std::size_t elem)
    {
        if (n > (std::uint64_t{1} << 34) / elem)
            throw FormatError("implausible element count " + std::to_string(n));
        return static_cast<std::size_t>(n);
    }
    std::istream& is_;
};

} // namespace vaecme::io
