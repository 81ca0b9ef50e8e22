#include "sws/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace sws::config {

namespace {

std::string strip(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string parse_quoted(const std::string& raw, int line_no) {
    std::string out;
    for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
        char c = raw[i];
        if (c == '\\' && i + 2 < raw.size()) {
            const char next = raw[++i];
            switch (next) {
                case 'n': out.push_back('\n'); break;
                case 't': out.push_back('\t'); break;
                case '"': out.push_back('"'); break;
                case '\\': out.push_back('\\'); break;
                default:
                    throw ConfigError("line " + std::to_string(line_no) +
                                      ": unknown escape \\" + std::string(1, next));
            }
        } else {
            out.push_back(c);
        }
    }
    return out;
}

Value parse_scalar(const std::string& raw, int line_no) {
    if (raw.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty value");
    if (raw.front() == '"') {
        if (raw.size() < 2 || raw.back() != '"')
            throw ConfigError("line " + std::to_string(line_no) + ": unterminated string");
        return parse_quoted(raw, line_no);
    }
    if (raw == "true") return true;
    if (raw == "false") return false;

    const char* begin = raw.c_str();
    char* end = nullptr;
    const long long as_int = std::strtoll(begin, &end, 10);
    if (end == begin + raw.size()) return static_cast<std::int64_t>(as_int);
    const double as_double = std::strtod(begin, &end);
    if (end == begin + raw.size()) return as_double;
    throw ConfigError("line " + std::to_string(line_no) + ": cannot parse value '" + raw + "'");
}

// Arrays hold strings; numeric entries are stored in their literal form.
Value parse_value(const std::string& raw, int line_no) {
    if (!raw.empty() && raw.front() == '[') {
        if (raw.back() != ']')
            throw ConfigError("line " + std::to_string(line_no) + ": unterminated array");
        std::vector<std::string> items;
        std::string body = raw.substr(1, raw.size() - 2);
        std::string current;
        bool in_string = false;
        for (char c : body) {
            if (c == '"') in_string = !in_string;
            if (c == ',' && !in_string) {
                const std::string item = strip(current);
                if (!item.empty()) {
                    const Value v = parse_scalar(item, line_no);
                    items.push_back(std::holds_alternative<std::string>(v)
                                        ? std::get<std::string>(v)
                                        : item);
                }
                current.clear();
            } else {
                current.push_back(c);
            }
        }
        const std::string item = strip(current);
        if (!item.empty()) {
            const Value v = parse_scalar(item, line_no);
            items.push_back(std::holds_alternative<std::string>(v) ? std::get<std::string>(v)
                                                                   : item);
        }
        return items;
    }
    return parse_scalar(raw, line_no);
}

// Cuts a trailing comment, respecting string quotes.
std::string drop_comment(const std::string& line) {
    std::string out;
    bool in_string = false;
    for (char c : line) {
        if (c == '"') in_string = !in_string;
        if (c == '#' && !in_string) break;
        out.push_back(c);
    }
    return out;
}

}  // namespace

Config Config::from_string(const std::string& text) {
    Config config;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip(drop_comment(line));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(line_no) + ": malformed section");
            section = strip(line.substr(1, line.size() - 2));
            if (section.empty())
                throw ConfigError("line " + std::to_string(line_no) + ": empty section name");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = strip(line.substr(0, eq));
        const std::string raw = strip(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("line " + std::to_string(line_no) + ": empty key");
        const std::string full = section.empty() ? key : section + "." + key;
        config.values_[full] = parse_value(raw, line_no);
    }
    return config;
}

Config Config::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    try {
        return from_string(buffer.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

std::optional<std::string> Config::env_override(const std::string& key) const {
    std::string name = "SWS_";
    for (char c : key)
        name.push_back(c == '.' || c == '-' ? '_'
                                            : static_cast<char>(std::toupper(
                                                  static_cast<unsigned char>(c))));
    if (const char* value = std::getenv(name.c_str())) return std::string(value);
    return std::nullopt;
}

bool Config::has(const std::string& key) const {
    return env_override(key).has_value() || values_.count(key) > 0;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    if (auto env = env_override(key)) return *env;
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (const auto* s = std::get_if<std::string>(&it->second)) return *s;
    throw ConfigError("config key '" + key + "' is not a string");
}

std::int64_t Config::get_int(const std::string& key, std::int64_t fallback) const {
    if (auto env = env_override(key)) {
        try {
            return std::stoll(*env);
        } catch (...) {
            throw ConfigError("environment override for '" + key + "' is not an integer");
        }
    }
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (const auto* i = std::get_if<std::int64_t>(&it->second)) return *i;
    throw ConfigError("config key '" + key + "' is not an integer");
}

double Config::get_double(const std::string& key, double fallback) const {
    if (auto env = env_override(key)) {
        try {
            return std::stod(*env);
        } catch (...) {
            throw ConfigError("environment override for '" + key + "' is not a number");
        }
    }
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (const auto* d = std::get_if<double>(&it->second)) return *d;
    if (const auto* i = std::get_if<std::int64_t>(&it->second))
        return static_cast<double>(*i);
    throw ConfigError("config key '" + key + "' is not a number");
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    if (auto env = env_override(key)) {
        if (*env == "true" || *env == "1") return true;
        if (*env == "false" || *env == "0") return false;
        throw ConfigError("environment override for '" + key + "' is not a boolean");
    }
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (const auto* b = std::get_if<bool>(&it->second)) return *b;
    throw ConfigError("config key '" + key + "' is not a boolean");
}

std::vector<std::string> Config::get_list(const std::string& key,
                                          std::vector<std::string> fallback) const {
    if (auto env = env_override(key)) {
        std::vector<std::string> items;
        std::string current;
        for (char c : *env) {
            if (c == ',') {
                if (!current.empty()) items.push_back(current);
                current.clear();
            } else {
                current.push_back(c);
            }
        }
        if (!current.empty()) items.push_back(current);
        return items;
    }
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (const auto* l = std::get_if<std::vector<std::string>>(&it->second)) return *l;
    throw ConfigError("config key '" + key + "' is not an array");
}

}  // namespace sws::config
