#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "widthlab/types.hpp"

namespace widthlab {

inline constexpr const char* kVersion = "0.1.0";

// Shortest round-trip representation; "inf", "-inf", "nan" for non-finite values.
std::string format_double(double x);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add_row(std::vector<std::string> row);
};

// First line: "# widthlab <version> seed=<seed>".
std::string to_csv(const CsvTable& table, std::uint64_t seed);

// Write to a sibling temp file, then rename over the target.
void write_atomic(const std::filesystem::path& path, const std::string& content);

nlohmann::json matrix_to_json(const Matrix& M);
Matrix matrix_from_json(const nlohmann::json& j);

struct CsvData {
    std::vector<std::string> header;
    Matrix values;
};

// Numeric CSV with one header row; lines starting with '#' are skipped.
CsvData read_csv(const std::filesystem::path& path);

} // namespace widthlab
