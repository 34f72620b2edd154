// io.hpp — deterministic emission of tables (CSV or JSON), checksums and the
// run manifest.
//
// Numbers are written in the shortest decimal form that round-trips to the
// same double (std::to_chars without a precision argument), so identical
// values always produce identical bytes.

#pragma once

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace modalsim::io {

using Cell = std::variant<long long, double, std::string>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    explicit Table(std::vector<std::string> cols = {}) : columns(std::move(cols)) {}
    void add_row(std::vector<Cell> row);
};

std::string format_double(double x);
std::string format_cell(const Cell& c);

std::string to_csv(const Table& t);
nlohmann::json to_json(const Table& t);

std::string sha256_hex(std::string_view bytes);

// Writes `content` to `path`, creating parent directories.
void write_file(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

}  // namespace modalsim::io
