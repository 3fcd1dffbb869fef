#include "snn/data/kv_config.hpp"

#include <fstream>
#include <sstream>

#include "snn/errors.hpp"

namespace snn::data {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

KeyValues parse_kv(const std::string& text) {
  KeyValues kv;
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw UsageError("config line " + std::to_string(lineno) + ": empty key");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

KeyValues read_kv_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw UsageError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_kv(ss.str());
}

std::string format_kv(const KeyValues& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

void write_kv_file(const std::filesystem::path& path, const KeyValues& kv) {
  std::ofstream f(path);
  if (!f) throw UsageError("cannot write " + path.string());
  f << format_kv(kv);
}

}  // namespace snn::data
