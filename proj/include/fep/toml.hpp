#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace fep::toml {

/// Minimal TOML subset: [table] headers, key = value pairs, # comments.
/// Values: basic strings, integers, floats, booleans, flat arrays of these.
/// Keys inside tables are flattened to "table.key".
struct Value {
    std::variant<std::string, std::int64_t, double, bool, std::vector<Value>> data;

    bool is_string() const { return std::holds_alternative<std::string>(data); }
    bool is_int() const { return std::holds_alternative<std::int64_t>(data); }
    bool is_float() const { return std::holds_alternative<double>(data); }
    bool is_bool() const { return std::holds_alternative<bool>(data); }
    bool is_array() const { return std::holds_alternative<std::vector<Value>>(data); }

    const std::string& as_string() const { return std::get<std::string>(data); }
    std::int64_t as_int() const { return std::get<std::int64_t>(data); }
    double as_float() const {
        return is_int() ? static_cast<double>(std::get<std::int64_t>(data)) : std::get<double>(data);
    }
    bool as_bool() const { return std::get<bool>(data); }
    const std::vector<Value>& as_array() const { return std::get<std::vector<Value>>(data); }
};

class Table {
  public:
    bool contains(const std::string& key) const { return values_.count(key) > 0; }
    const Value& at(const std::string& key) const;

    std::string get_string(const std::string& key, std::optional<std::string> fallback = {}) const;
    std::int64_t get_int(const std::string& key, std::optional<std::int64_t> fallback = {}) const;
    double get_float(const std::string& key, std::optional<double> fallback = {}) const;
    bool get_bool(const std::string& key, std::optional<bool> fallback = {}) const;
    std::vector<double> get_float_array(const std::string& key, std::vector<double> fallback) const;
    std::vector<std::int64_t> get_int_array(const std::string& key,
                                            std::vector<std::int64_t> fallback) const;

    void set(const std::string& key, Value v) { values_[key] = std::move(v); }
    const std::map<std::string, Value>& entries() const { return values_; }

  private:
    std::map<std::string, Value> values_;
};

Table parse(const std::string& text);
Table parse_file(const std::string& path);

}  // namespace fep::toml
