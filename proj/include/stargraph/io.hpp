#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace stargraph {

// shortest round-trip decimal form
std::string format_double(double v);
std::string format_long_double(long double v);

std::uint64_t fnv1a64(std::string_view bytes);
std::string fnv1a64_hex(std::string_view bytes);

// In-memory CSV assembly; the file lands atomically (tmp + rename) and the
// digest of the exact bytes is available afterwards for the manifest.
class CsvFile {
  public:
    explicit CsvFile(std::string header);

    void begin_row();
    void add(double v);
    void add(long double v);
    void add(std::uint64_t v);
    void add(const std::string& v);
    void end_row();

    // returns digest of the written bytes
    std::uint64_t write(const std::filesystem::path& path) const;
    std::size_t bytes() const { return buf_.size(); }

  private:
    std::string buf_;
    bool row_open_ = false;
    bool first_field_ = true;
};

void atomic_write(const std::filesystem::path& path, std::string_view bytes);

}  // namespace stargraph
