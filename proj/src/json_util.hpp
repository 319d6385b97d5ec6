#pragma once

// Field accessors that turn schema mismatches into Errc::syntax errors
// naming the JSON path.

#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "qa/error.hpp"

namespace qa::detail {

using nlohmann::json;

json parse_json(std::string_view document, std::string_view what);

[[noreturn]] void schema_error(const std::string& path, std::string_view expected);

const json& require(const json& obj, const char* key, const std::string& path);

std::string get_string(const json& obj, const char* key, const std::string& path);
std::optional<std::string> get_opt_string(const json& obj, const char* key, const std::string& path);
double get_number(const json& obj, const char* key, const std::string& path);
std::optional<double> get_opt_number(const json& obj, const char* key, const std::string& path);
int get_int(const json& obj, const char* key, const std::string& path);
std::optional<int> get_opt_int(const json& obj, const char* key, const std::string& path);
bool get_bool(const json& obj, const char* key, const std::string& path);
const json& get_array(const json& obj, const char* key, const std::string& path);

}  // namespace qa::detail
