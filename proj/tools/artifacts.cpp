#include "artifacts.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include "json.hpp"

#include "tpplab/error.hpp"

#ifndef TPPLAB_VERSION
#define TPPLAB_VERSION "unknown"
#endif

namespace tpp::cli {

namespace {

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &utc);
  return buf;
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw NumericError("sha256: digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

CsvTable::CsvTable(std::vector<std::string> header) : columns_(header.size()) {
  for (const std::string& h : header) cell(h);
  end_row();
}

void CsvTable::separator() {
  if (in_row_ > 0) out_.push_back(',');
  ++in_row_;
}

CsvTable& CsvTable::cell(double x) {
  separator();
  out_ += format_double(x);
  return *this;
}

CsvTable& CsvTable::cell(long long x) {
  separator();
  char buf[24];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  out_.append(buf, r.ptr);
  return *this;
}

CsvTable& CsvTable::cell(const std::string& s) {
  separator();
  out_ += s;
  return *this;
}

CsvTable& CsvTable::empty_cell() {
  separator();
  return *this;
}

void CsvTable::end_row() {
  if (in_row_ != columns_)
    throw InvariantViolation("csv: row has " + std::to_string(in_row_) + " cells, header has " +
                             std::to_string(columns_));
  out_.push_back('\n');
  in_row_ = 0;
}

RunOutput::RunOutput(std::string dir, std::string command, std::string config_hash)
    : dir_(std::move(dir)), command_(std::move(command)), config_hash_(std::move(config_hash)),
      started_(utc_now()) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir_ + ": " + ec.message());
}

std::string RunOutput::path(const std::string& name) const {
  return (std::filesystem::path(dir_) / name).string();
}

void RunOutput::write(const std::string& name, std::string_view bytes) {
  std::ofstream out(path(name), std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path(name));
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ConfigError("write failed for " + path(name));
  entries_.push_back({name, sha256_hex(bytes), bytes.size()});
}

void RunOutput::adopt(const std::string& name) {
  const std::string bytes = read_file(path(name));
  entries_.push_back({name, sha256_hex(bytes), bytes.size()});
}

void RunOutput::write_manifest() const {
  nlohmann::json j;
  j["command"] = command_;
  j["config_hash"] = config_hash_;
  j["tool_version"] = TPPLAB_VERSION;
  j["started"] = started_;
  j["finished"] = utc_now();
  j["artifacts"] = nlohmann::json::array();
  for (const Entry& e : entries_)
    j["artifacts"].push_back({{"file", e.name}, {"sha256", e.digest}, {"bytes", e.bytes}});
  std::ofstream out(path("manifest.json"), std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path("manifest.json"));
  out << j.dump(2) << '\n';
}

std::vector<std::string> verify_manifest(const std::string& dir) {
  const std::string text = read_file((std::filesystem::path(dir) / "manifest.json").string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("manifest: malformed JSON: " + std::string(e.what()));
  }
  std::vector<std::string> bad;
  for (const auto& a : j.at("artifacts")) {
    const std::string name = a.at("file").get<std::string>();
    const auto p = std::filesystem::path(dir) / name;
    if (!std::filesystem::exists(p) || sha256_hex(read_file(p.string())) != a.at("sha256").get<std::string>())
      bad.push_back(name);
  }
  return bad;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace tpp::cli
