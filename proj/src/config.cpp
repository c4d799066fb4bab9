// SPDX-License-Identifier: Apache-2.0
#include "xling/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "xling/util.hpp"

namespace xling {

KeyValueConfig KeyValueConfig::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str());
}

KeyValueConfig KeyValueConfig::parse_string(const std::string& text) {
    KeyValueConfig cfg;
    size_t lineno = 0;
    for (const auto& raw : split(text, '\n')) {
        ++lineno;
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": missing '='");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        cfg.set(key, value);
    }
    return cfg;
}

const std::string& KeyValueConfig::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing config key: " + key);
    return it->second;
}

std::string KeyValueConfig::get_or(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

int64_t KeyValueConfig::get_int(const std::string& key) const {
    const std::string& v = get(key);
    char* end = nullptr;
    double d = std::strtod(v.c_str(), &end);  // accepts 2e9 style budgets
    if (end == v.c_str() || *end != '\0')
        throw ConfigError("config key " + key + ": not an integer: " + v);
    return static_cast<int64_t>(d);
}

int64_t KeyValueConfig::get_int_or(const std::string& key, int64_t fallback) const {
    return has(key) ? get_int(key) : fallback;
}

double KeyValueConfig::get_double(const std::string& key) const {
    const std::string& v = get(key);
    char* end = nullptr;
    double d = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0')
        throw ConfigError("config key " + key + ": not a number: " + v);
    return d;
}

double KeyValueConfig::get_double_or(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

bool KeyValueConfig::get_bool_or(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string& v = get(key);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("config key " + key + ": not a boolean: " + v);
}

std::vector<double> KeyValueConfig::get_double_list_or(
    const std::string& key, const std::vector<double>& fallback) const {
    if (!has(key)) return fallback;
    std::vector<double> out;
    for (const auto& part : split(get(key), ',')) {
        std::string p = trim(part);
        if (p.empty()) continue;
        char* end = nullptr;
        double d = std::strtod(p.c_str(), &end);
        if (end == p.c_str() || *end != '\0')
            throw ConfigError("config key " + key + ": bad list element: " + p);
        out.push_back(d);
    }
    return out;
}

void KeyValueConfig::set(const std::string& key, const std::string& value) {
    if (!values_.count(key)) order_.push_back(key);
    values_[key] = value;
}

void KeyValueConfig::set_int(const std::string& key, int64_t v) { set(key, std::to_string(v)); }

void KeyValueConfig::set_double(const std::string& key, double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    set(key, os.str());
}

std::string KeyValueConfig::serialize() const {
    std::ostringstream os;
    for (const auto& k : order_) os << k << " = " << values_.at(k) << "\n";
    return os.str();
}

void KeyValueConfig::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write config file: " + path);
    out << serialize();
}

}  // namespace xling
