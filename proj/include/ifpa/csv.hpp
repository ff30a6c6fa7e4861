#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "ifpa/common.hpp"

namespace ifpa {

inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

// CSV with a leading '#' provenance line (preset, variant, seed, solver
// parameters) so every artifact is reproducible from its header.
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : out_(path) {
    if (!out_) throw Error("cannot open output file '" + path + "'");
  }

  void provenance(const std::vector<std::pair<std::string, std::string>>& kv) {
    out_ << "#";
    bool first = true;
    for (const auto& [k, v] : kv) {
      out_ << (first ? " " : ", ") << k << "=" << v;
      first = false;
    }
    out_ << "\n";
  }

  void header(const std::vector<std::string>& cols) { write_row(cols); }

  void row(const std::vector<std::string>& cells) { write_row(cells); }

 private:
  void write_row(const std::vector<std::string>& cells) {
    for (std::size_t k = 0; k < cells.size(); ++k) out_ << (k ? "," : "") << cells[k];
    out_ << "\n";
  }

  std::ofstream out_;
};

}  // namespace ifpa
