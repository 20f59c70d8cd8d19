#pragma once

#include <string>
#include <vector>

namespace bikecross {

// Shortest decimal representation that round-trips to the same double.
// Deterministic for a given value, so exports are byte-stable.
std::string format_double(double v);

// Minimal CSV assembly: rows are joined with commas, no quoting (values in
// this project never contain commas).
class CsvBuilder {
 public:
  explicit CsvBuilder(std::vector<std::string> header);
  void row(const std::vector<std::string>& cells);
  const std::string& str() const { return out_; }

 private:
  std::size_t width_;
  std::string out_;
};

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace bikecross
