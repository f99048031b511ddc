#pragma once

// File output shared by the pipeline stages: CSV tables with a provenance
// comment line, JSON documents, raw float64 arrays and the per-directory
// manifest of SHA-256 content hashes.

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace afa {

inline constexpr std::string_view kVersion = "1.0.0";

// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

class CsvWriter {
public:
    // First line: "# afa <version> config=<hash>", then the header row.
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& columns,
              const std::string& config_hash);
    CsvWriter& operator<<(double v);
    CsvWriter& operator<<(long long v);
    CsvWriter& operator<<(int v) { return *this << static_cast<long long>(v); }
    CsvWriter& operator<<(std::size_t v) { return *this << static_cast<long long>(v); }
    CsvWriter& operator<<(const std::string& s);
    CsvWriter& operator<<(const char* s) { return *this << std::string(s); }
    // Ends the row; throws Error when the column count differs from the header.
    void end_row();
    void close();

private:
    void sep();
    std::ofstream out_;
    std::filesystem::path path_;
    std::size_t n_columns_;
    std::size_t cell_ = 0;
};

struct CsvTable {
    std::string comment;              // provenance line without the leading '#'
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
    int column(const std::string& name) const; // throws Error when absent
    double number(std::size_t row, int col) const;
};

CsvTable read_csv(const std::filesystem::path& path);

void write_json(const std::filesystem::path& path, const nlohmann::json& doc);
nlohmann::json read_json(const std::filesystem::path& path);

// Little-endian float64 rows, no header.
void write_doubles(const std::filesystem::path& path, const std::vector<double>& values);
std::vector<double> read_doubles(const std::filesystem::path& path);

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

// manifest.json: every regular file under dir (except itself) with size and hash,
// sorted by relative path.
void write_manifest(const std::filesystem::path& dir);

// Checks the hashes listed in dir/manifest.json; returns the mismatching paths.
std::vector<std::string> verify_manifest(const std::filesystem::path& dir);

} // namespace afa
