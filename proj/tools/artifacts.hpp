#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace tpp::cli {

// Shortest decimal that round-trips; "nan", "inf", "-inf" otherwise.
std::string format_double(double x);

std::string sha256_hex(std::string_view bytes);

// Row-oriented CSV held in memory until the run commits it.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);
  CsvTable& cell(double x);
  CsvTable& cell(long long x);
  CsvTable& cell(const std::string& s);
  CsvTable& empty_cell();
  void end_row();
  std::string text() const { return out_; }

 private:
  void separator();
  std::size_t columns_;
  std::size_t in_row_ = 0;
  std::string out_;
};

// Output directory of one run. Files are written once; the manifest lists
// every file with its SHA-256 digest.
class RunOutput {
 public:
  RunOutput(std::string dir, std::string command, std::string config_hash);

  const std::string& dir() const { return dir_; }
  std::string path(const std::string& name) const;
  void write(const std::string& name, std::string_view bytes);
  // Register a file written by another component.
  void adopt(const std::string& name);
  void write_manifest() const;

 private:
  struct Entry {
    std::string name;
    std::string digest;
    std::size_t bytes = 0;
  };
  std::string dir_;
  std::string command_;
  std::string config_hash_;
  std::string started_;
  std::vector<Entry> entries_;
};

// Recompute every digest listed in dir/manifest.json; returns the names that
// fail to match.
std::vector<std::string> verify_manifest(const std::string& dir);

std::string read_file(const std::string& path);

}  // namespace tpp::cli
