#include "bvm/report.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>
#include <system_error>

#include "bvm/errors.hpp"

namespace bvm {
namespace {

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::string format_cell(const Cell& c) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, double>) return format_double(v);
        else if constexpr (std::is_same_v<T, std::int64_t>) return std::to_string(v);
        else if constexpr (std::is_same_v<T, bool>) return v ? "true" : "false";
        else return v;
      },
      c);
}

void ExperimentReport::add_param(std::string key, std::string value) {
  params.emplace_back(std::move(key), std::move(value));
}
void ExperimentReport::add_param(std::string key, double value) {
  params.emplace_back(std::move(key), format_double(value));
}
void ExperimentReport::add_param(std::string key, std::int64_t value) {
  params.emplace_back(std::move(key), std::to_string(value));
}

void ExperimentReport::add_row(std::vector<Cell> row) {
  if (row.size() != columns.size())
    throw ParameterError("report " + name + ": row width does not match columns");
  rows.push_back(std::move(row));
}

std::size_t ExperimentReport::column(const std::string& col) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == col) return i;
  throw ParameterError("report " + name + ": no column " + col);
}

double ExperimentReport::number(std::size_t row, const std::string& col) const {
  const Cell& c = rows.at(row).at(column(col));
  if (const auto* d = std::get_if<double>(&c)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&c)) return static_cast<double>(*i);
  if (const auto* b = std::get_if<bool>(&c)) return *b ? 1.0 : 0.0;
  throw ParameterError("report " + name + ": column " + col + " is not numeric");
}

std::string ExperimentReport::to_csv(bool with_timestamp) const {
  std::ostringstream out;
  if (with_timestamp) out << "# generated " << utc_timestamp() << '\n';
  out << "# experiment " << name << " kind=" << kind << '\n';
  for (const auto& [k, v] : params) out << "# " << k << '=' << v << '\n';
  if (!verdict.empty()) out << "# verdict=" << verdict << '\n';
  for (std::size_t i = 0; i < columns.size(); ++i)
    out << (i ? "," : "") << csv_escape(columns[i]);
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i)
      out << (i ? "," : "") << csv_escape(format_cell(row[i]));
    out << '\n';
  }
  return out.str();
}

nlohmann::json ExperimentReport::to_json() const {
  nlohmann::json j;
  j["name"] = name;
  j["kind"] = kind;
  j["params"] = nlohmann::json::object();
  for (const auto& [k, v] : params) j["params"][k] = v;
  j["columns"] = columns;
  j["rows"] = nlohmann::json::array();
  for (const auto& row : rows) {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& c : row) {
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>) {
              if (std::isfinite(v)) r.push_back(v);
              else r.push_back(format_double(v));
            } else {
              r.push_back(v);
            }
          },
          c);
    }
    j["rows"].push_back(std::move(r));
  }
  j["verdict"] = verdict;
  j["notes"] = notes;
  return j;
}

void write_atomically(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw InputError("cannot write " + tmp.string());
    f << content;
    if (!f) throw InputError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_report(const std::filesystem::path& dir, const ExperimentReport& report) {
  write_atomically(dir / (report.name + ".csv"), report.to_csv());
  write_atomically(dir / (report.name + ".json"), report.to_json().dump(2) + "\n");
}

}  // namespace bvm
