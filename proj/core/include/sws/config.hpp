#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace sws::config {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Value = std::variant<std::string, std::int64_t, double, bool, std::vector<std::string>>;

// Flat key/value view over a TOML-style config file: [section.sub] headers,
// `key = value` lines, strings, integers, floats, booleans and string
// arrays. Environment variables override file values: key `grpo.epsilon`
// maps to SWS_GRPO_EPSILON.
class Config {
public:
    Config() = default;
    static Config load(const std::string& path);
    static Config from_string(const std::string& text);

    bool has(const std::string& key) const;

    std::string get_string(const std::string& key, const std::string& fallback) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<std::string> get_list(const std::string& key,
                                      std::vector<std::string> fallback) const;

    const std::map<std::string, Value>& values() const { return values_; }
    void set(const std::string& key, Value value) { values_[key] = std::move(value); }

private:
    std::optional<std::string> env_override(const std::string& key) const;

    std::map<std::string, Value> values_;
};

}  // namespace sws::config
