#pragma once
// Deterministic output tables: comma-separated files with a one-line header,
// floats at 17 significant digits, and simple key-value reports.

#include <fstream>
#include <string>
#include <vector>

#include "cellflow/common.hpp"

namespace cellflow {

class CsvWriter {
  public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header);
    void row(const std::vector<std::string>& cells);
    // convenience overload: every cell formatted with %.17g
    void row(const std::vector<double>& cells);
    static std::string cell(double v) { return fmt17(v); }

  private:
    std::ofstream out_;
    size_t width_ = 0;
    std::string path_;
};

void write_kv(const std::string& path,
              const std::vector<std::pair<std::string, std::string>>& items);

void write_text(const std::string& path, const std::string& content);

// Creates the directory (parents included) if needed; errors are input_error.
void ensure_dir(const std::string& path);

}  // namespace cellflow
