#include "stargraph/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "stargraph/errors.hpp"

namespace stargraph {

std::string format_double(double v) {
    char buf[40];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

std::string format_long_double(long double v) {
    char buf[48];
    const int len = std::snprintf(buf, sizeof(buf), "%.21Lg", v);
    return std::string(buf, buf + len);
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string fnv1a64_hex(std::string_view bytes) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(bytes)));
    return buf;
}

CsvFile::CsvFile(std::string header) : buf_(std::move(header)) { buf_.push_back('\n'); }

void CsvFile::begin_row() {
    row_open_ = true;
    first_field_ = true;
}

void CsvFile::add(double v) { add(format_double(v)); }
void CsvFile::add(long double v) { add(format_long_double(v)); }
void CsvFile::add(std::uint64_t v) { add(std::to_string(v)); }

void CsvFile::add(const std::string& v) {
    if (!first_field_) buf_.push_back(',');
    buf_ += v;
    first_field_ = false;
}

void CsvFile::end_row() {
    buf_.push_back('\n');
    row_open_ = false;
}

std::uint64_t CsvFile::write(const std::filesystem::path& path) const {
    atomic_write(path, buf_);
    return fnv1a64(buf_);
}

void atomic_write(const std::filesystem::path& path, std::string_view bytes) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("io", "cannot open " + tmp.string() + " for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw IoError("io", "short write to " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("io", "rename " + tmp.string() + " -> " + path.string() + ": " +
                                    ec.message());
}

}  // namespace stargraph
