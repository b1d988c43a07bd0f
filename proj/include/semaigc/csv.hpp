#pragma once

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace semaigc {

struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Minimal CSV writer with full-precision numeric formatting so identical
// runs produce byte-identical files.
class CsvWriter {
  public:
    explicit CsvWriter(const std::string& path, const std::vector<std::string>& header)
        : out_(path) {
        if (!out_) {
            throw io_error("CsvWriter: cannot open " + path);
        }
        for (std::size_t i = 0; i < header.size(); ++i) {
            out_ << (i == 0 ? "" : ",") << header[i];
        }
        out_ << "\n";
    }

    static std::string num(double v) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return buf;
    }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            out_ << (i == 0 ? "" : ",") << cells[i];
        }
        out_ << "\n";
    }

    void close() { out_.close(); }

  private:
    std::ofstream out_;
};

}  // namespace semaigc
