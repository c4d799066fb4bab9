// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace xling {

// Flat key-value configuration, `a.b.c = value` per line, `#` comments.
// Keys keep insertion order on save so round-trips are stable.
class KeyValueConfig {
public:
    KeyValueConfig() = default;

    static KeyValueConfig parse_file(const std::string& path);
    static KeyValueConfig parse_string(const std::string& text);

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    const std::string& get(const std::string& key) const;
    std::string get_or(const std::string& key, const std::string& fallback) const;
    int64_t get_int(const std::string& key) const;
    int64_t get_int_or(const std::string& key, int64_t fallback) const;
    double get_double(const std::string& key) const;
    double get_double_or(const std::string& key, double fallback) const;
    bool get_bool_or(const std::string& key, bool fallback) const;
    // Comma-separated list value.
    std::vector<double> get_double_list_or(const std::string& key,
                                           const std::vector<double>& fallback) const;

    void set(const std::string& key, const std::string& value);
    void set_int(const std::string& key, int64_t v);
    void set_double(const std::string& key, double v);

    std::string serialize() const;
    void save(const std::string& path) const;

    const std::vector<std::string>& keys() const { return order_; }

private:
    std::map<std::string, std::string> values_;
    std::vector<std::string> order_;
};

}  // namespace xling
