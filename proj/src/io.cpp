#include "widthlab/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "widthlab/errors.hpp"

namespace widthlab {

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

void CsvTable::add_row(std::vector<std::string> row) {
    if (row.size() != header.size())
        fail(Errc::ShapeMismatch, "csv row has " + std::to_string(row.size()) + " fields, header has " +
                                      std::to_string(header.size()));
    rows.push_back(std::move(row));
}

std::string to_csv(const CsvTable& table, std::uint64_t seed) {
    std::string out = std::string("# widthlab ") + kVersion + " seed=" + std::to_string(seed) + "\n";
    auto line = [&out](const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out += ',';
            out += fields[i];
        }
        out += '\n';
    };
    line(table.header);
    for (const auto& r : table.rows) line(r);
    return out;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) fail(Errc::IoFailure, "cannot open " + tmp.string());
        f << content;
        f.flush();
        if (!f) fail(Errc::IoFailure, "write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) fail(Errc::IoFailure, "rename to " + path.string() + ": " + ec.message());
}

nlohmann::json matrix_to_json(const Matrix& M) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        nlohmann::json r = nlohmann::json::array();
        for (Eigen::Index j = 0; j < M.cols(); ++j) r.push_back(M(i, j));
        rows.push_back(std::move(r));
    }
    return rows;
}

Matrix matrix_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.empty()) fail(Errc::ShapeMismatch, "matrix must be a nonempty array of rows");
    const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
    if (cols == 0) fail(Errc::ShapeMismatch, "matrix rows must be nonempty arrays");
    Matrix M(j.size(), cols);
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_array() || j[i].size() != cols) fail(Errc::ShapeMismatch, "ragged matrix");
        for (std::size_t k = 0; k < cols; ++k) {
            if (!j[i][k].is_number()) fail(Errc::ShapeMismatch, "matrix entries must be numbers");
            M(i, k) = j[i][k].get<double>();
        }
    }
    return M;
}

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
        const auto b = field.find_first_not_of(" \t\r");
        const auto e = field.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
    }
    return out;
}

} // namespace

CsvData read_csv(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) fail(Errc::IoFailure, "cannot read " + path.string());
    CsvData d;
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#' || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto fields = split(line);
        if (d.header.empty()) {
            d.header = std::move(fields);
            continue;
        }
        if (fields.size() != d.header.size())
            fail(Errc::ShapeMismatch, path.string() + ":" + std::to_string(lineno) + ": wrong field count");
        std::vector<double> r(fields.size());
        for (std::size_t i = 0; i < fields.size(); ++i) {
            const auto& s = fields[i];
            const auto res = std::from_chars(s.data(), s.data() + s.size(), r[i]);
            if (res.ec != std::errc() || res.ptr != s.data() + s.size())
                fail(Errc::ShapeMismatch, path.string() + ":" + std::to_string(lineno) + ": not a number: " + s);
        }
        rows.push_back(std::move(r));
    }
    if (d.header.empty()) fail(Errc::ShapeMismatch, path.string() + ": missing header");
    d.values.resize(Eigen::Index(rows.size()), Eigen::Index(d.header.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) d.values(i, j) = rows[i][j];
    return d;
}

} // namespace widthlab
