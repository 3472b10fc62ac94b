#include "cellflow/report.hpp"

#include <filesystem>

namespace cellflow {

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : out_(path, std::ios::binary), width_(header.size()), path_(path) {
    if (!out_) throw input_error("cannot open '" + path + "' for writing");
    if (header.empty()) throw param_error("csv header must not be empty");
    for (size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << "\n";
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    if (cells.size() != width_)
        throw param_error("csv row width " + std::to_string(cells.size()) +
                          " does not match header width " + std::to_string(width_) + " in " +
                          path_);
    for (size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << "\n";
    if (!out_) throw input_error("write failed on '" + path_ + "'");
}

void CsvWriter::row(const std::vector<double>& cells) {
    std::vector<std::string> s;
    s.reserve(cells.size());
    for (double v : cells) s.push_back(fmt17(v));
    row(s);
}

void write_kv(const std::string& path,
              const std::vector<std::pair<std::string, std::string>>& items) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw input_error("cannot open '" + path + "' for writing");
    for (const auto& [k, v] : items) out << k << " = " << v << "\n";
    if (!out) throw input_error("write failed on '" + path + "'");
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw input_error("cannot open '" + path + "' for writing");
    out << content;
    if (!out) throw input_error("write failed on '" + path + "'");
}

void ensure_dir(const std::string& path) {
    std::error_code ec;
    std::filesystem::create_directories(path, ec);
    if (ec) throw input_error("cannot create directory '" + path + "': " + ec.message());
}

}  // namespace cellflow
