#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace lyapsim {

/// Ordered flat key=value report.
using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Shortest round-trip-stable text for report numbers ("%.12g"; inf/nan spelled out).
std::string format_number(double value);
std::string format_bool(bool value);
std::string render_kv(const KeyValues& kv);
/// Prefixes every key with `prefix.`.
void append_kv(KeyValues& out, const std::string& prefix, const KeyValues& kv);

void write_text(const std::filesystem::path& path, const std::string& contents);
std::string read_text(const std::filesystem::path& path);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Minimal CSV table: header plus rows of preformatted cells.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}
    void add_row(std::vector<std::string> row);
    std::size_t rows() const { return rows_.size(); }
    std::string str() const;
    void write(const std::filesystem::path& path) const { write_text(path, str()); }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

}  // namespace lyapsim
