#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace spreadkit::io {

std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t v);

// Shortest-to-read form with 17 significant digits, '.' decimal point.
std::string fmt17(double v);

// Minimal CSV writer: '\n' line ends, numbers at 17 significant digits,
// optional leading "# key=value" comment lines.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header, std::vector<std::pair<std::string, std::string>> meta = {});
    void row(const std::vector<double>& values);
    std::string str() const { return buf_; }
    void save(const std::filesystem::path& path) const;

private:
    std::size_t width_;
    std::string buf_;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
    std::vector<std::pair<std::string, std::string>> meta;
    std::size_t column(std::string_view name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);
// Pretty JSON with 2-space indent and trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace spreadkit::io
