#pragma once

// CSV tables and the JSON run manifest. Data files carry no timestamps; the
// manifest is the only place with wall-clock information.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "toa/error.hpp"
#include "toa/format.hpp"

namespace toa {

inline constexpr const char* kManifestSchema = "toa-run-manifest/1";

struct CsvTable {
  std::string file;  // path as written
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::string description;

  void add(std::vector<std::string> row) {
    if (row.size() != columns.size()) throw DomainError("CsvTable: row width mismatch");
    rows.push_back(std::move(row));
  }
};

inline std::string render_csv(const CsvTable& t) {
  std::ostringstream os;
  for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
  os << '\n';
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
    os << '\n';
  }
  return os.str();
}

inline void write_text(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DomainError("out: cannot write " + path);
  out << text;
}

class Manifest {
 public:
  using Json = nlohmann::ordered_json;

  explicit Manifest(std::string command)
      : start_(std::chrono::steady_clock::now()), started_at_(utc_now()) {
    j_["schema_version"] = kManifestSchema;
    j_["command"] = std::move(command);
    j_["config"] = Json::object();
    j_["grid"] = Json::object();
    j_["results"] = Json::object();
    j_["warnings"] = Json::array();
    j_["notes"] = Json::array();
    j_["csv"] = Json::array();
  }

  Json& config() { return j_["config"]; }
  Json& grid() { return j_["grid"]; }
  Json& results() { return j_["results"]; }
  void warn(const std::string& w) { j_["warnings"].push_back(w); }
  void note(const std::string& n) { j_["notes"].push_back(n); }
  const Json& json() const { return j_; }

  /// Writes the CSV file and records its full contents in the manifest.
  void add_csv(const CsvTable& t) {
    write_text(t.file, render_csv(t));
    Json c;
    c["file"] = std::filesystem::path(t.file).filename().string();
    c["description"] = t.description;
    c["columns"] = t.columns;
    c["rows"] = t.rows;
    j_["csv"].push_back(std::move(c));
  }

  void write(const std::string& path, const std::string& spec_version) {
    j_["spec_version"] = spec_version;
    j_["started_at"] = started_at_;
    j_["wall_time_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    write_text(path, j_.dump(2) + "\n");
  }

 private:
  static std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
  }

  Json j_;
  std::chrono::steady_clock::time_point start_;
  std::string started_at_;
};

}  // namespace toa
