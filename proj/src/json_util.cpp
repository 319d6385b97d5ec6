#include "json_util.hpp"

namespace qa::detail {

json parse_json(std::string_view document, std::string_view what) {
    try {
        return json::parse(document.begin(), document.end());
    } catch (const json::parse_error& e) {
        throw Error(Errc::syntax, std::string(what) + ": syntax error at byte " +
                                      std::to_string(e.byte) + ": " + e.what());
    }
}

void schema_error(const std::string& path, std::string_view expected) {
    throw Error(Errc::syntax, path + ": expected " + std::string(expected));
}

const json& require(const json& obj, const char* key, const std::string& path) {
    if (!obj.is_object()) schema_error(path, "object");
    auto it = obj.find(key);
    if (it == obj.end()) throw Error(Errc::syntax, path + ": missing key '" + key + "'");
    return *it;
}

std::string get_string(const json& obj, const char* key, const std::string& path) {
    const json& v = require(obj, key, path);
    if (!v.is_string()) schema_error(path + "." + key, "string");
    return v.get<std::string>();
}

std::optional<std::string> get_opt_string(const json& obj, const char* key, const std::string& path) {
    if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
    return get_string(obj, key, path);
}

double get_number(const json& obj, const char* key, const std::string& path) {
    const json& v = require(obj, key, path);
    if (!v.is_number()) schema_error(path + "." + key, "number");
    return v.get<double>();
}

std::optional<double> get_opt_number(const json& obj, const char* key, const std::string& path) {
    if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
    return get_number(obj, key, path);
}

int get_int(const json& obj, const char* key, const std::string& path) {
    const json& v = require(obj, key, path);
    if (!v.is_number_integer()) schema_error(path + "." + key, "integer");
    return v.get<int>();
}

std::optional<int> get_opt_int(const json& obj, const char* key, const std::string& path) {
    if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
    return get_int(obj, key, path);
}

bool get_bool(const json& obj, const char* key, const std::string& path) {
    const json& v = require(obj, key, path);
    if (!v.is_boolean()) schema_error(path + "." + key, "boolean");
    return v.get<bool>();
}

const json& get_array(const json& obj, const char* key, const std::string& path) {
    const json& v = require(obj, key, path);
    if (!v.is_array()) schema_error(path + "." + key, "array");
    return v;
}

}  // namespace qa::detail
