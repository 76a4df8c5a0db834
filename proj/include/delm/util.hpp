#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace delm {

/// Shortest decimal form that is stable across runs (not a round-trip form;
/// model files use %.17g separately).
std::string fmt_double(double v);

/// CSV table with a fixed header; all writes go through fmt_double so
/// identical data produces identical bytes.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  void add_row(const std::vector<std::string>& cells);
  void add_row(const std::vector<double>& cells);
  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }

  std::string to_string() const;
  void save(const std::string& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// Ordered flat key-value record ("key = value" per line).
class KeyValueRecord {
 public:
  void put(const std::string& key, const std::string& value);
  void put(const std::string& key, double value);
  void put(const std::string& key, std::int64_t value);
  std::string to_string() const;
  void save(const std::string& path) const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

/// Runs fn(0..count-1) on up to hardware-concurrency threads. Callers index
/// preallocated result slots, so output order never depends on scheduling.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

void ensure_directory(const std::string& path);
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace delm
