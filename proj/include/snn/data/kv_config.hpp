#pragma once

#include <filesystem>
#include <map>
#include <string>

namespace snn::data {

using KeyValues = std::map<std::string, std::string>;

/// "key = value" lines; '#' starts a comment. Duplicate keys keep the last.
KeyValues parse_kv(const std::string& text);
KeyValues read_kv_file(const std::filesystem::path& path);
std::string format_kv(const KeyValues& kv);
void write_kv_file(const std::filesystem::path& path, const KeyValues& kv);

}  // namespace snn::data
