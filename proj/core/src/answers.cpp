#include "sws/answers.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>

namespace sws::answers {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string strip(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return s.substr(b, e - b);
}

// Unwraps command{...} if the whole string is one such call.
bool unwrap_command(std::string& s, const std::string& command) {
    const std::string prefix = "\\" + command + "{";
    if (s.rfind(prefix, 0) != 0 || s.empty() || s.back() != '}') return false;
    // The closing brace must match the opening one.
    int depth = 0;
    for (std::size_t i = prefix.size() - 1; i < s.size(); ++i) {
        if (s[i] == '{') ++depth;
        if (s[i] == '}') {
            --depth;
            if (depth == 0 && i + 1 != s.size()) return false;
        }
    }
    s = s.substr(prefix.size(), s.size() - prefix.size() - 1);
    return true;
}

// \frac{a}{b} -> a/b when the whole string is a single fraction.
bool rewrite_frac(std::string& s) {
    if (s.rfind("\\frac{", 0) != 0) return false;
    int depth = 0;
    std::size_t split = std::string::npos;
    for (std::size_t i = 5; i < s.size(); ++i) {
        if (s[i] == '{') ++depth;
        if (s[i] == '}') {
            --depth;
            if (depth == 0) {
                split = i;
                break;
            }
        }
    }
    if (split == std::string::npos || split + 1 >= s.size() || s[split + 1] != '{' ||
        s.back() != '}')
        return false;
    const std::string num = s.substr(6, split - 6);
    const std::string den = s.substr(split + 2, s.size() - split - 3);
    s = num + "/" + den;
    return true;
}

}  // namespace

std::string normalize(const std::string& answer) {
    std::string s = strip(answer);
    bool changed = true;
    while (changed && !s.empty()) {
        changed = false;
        if (s.size() >= 2 && s.front() == '$' && s.back() == '$') {
            s = strip(s.substr(1, s.size() - 2));
            changed = true;
        }
        if (s.size() >= 4 && s.rfind("\\(", 0) == 0 && s.compare(s.size() - 2, 2, "\\)") == 0) {
            s = strip(s.substr(2, s.size() - 4));
            changed = true;
        }
        if (unwrap_command(s, "boxed") || unwrap_command(s, "text") ||
            unwrap_command(s, "mathrm")) {
            s = strip(s);
            changed = true;
        }
        if (rewrite_frac(s)) changed = true;
        while (!s.empty() && (s.back() == '.' || s.back() == ',' || s.back() == ';')) {
            s.pop_back();
            changed = true;
        }
        s = strip(s);
    }
    // Thousands separators: drop commas sitting between digits.
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == ',' && i > 0 && i + 1 < s.size() &&
            std::isdigit(static_cast<unsigned char>(s[i - 1])) &&
            std::isdigit(static_cast<unsigned char>(s[i + 1])))
            continue;
        out.push_back(s[i]);
    }
    return out;
}

std::optional<double> parse_numeric(const std::string& answer) {
    const std::string s = normalize(answer);
    if (s.empty()) return std::nullopt;

    auto parse_plain = [](const std::string& text) -> std::optional<double> {
        if (text.empty()) return std::nullopt;
        const char* begin = text.c_str();
        char* end = nullptr;
        const double value = std::strtod(begin, &end);
        if (end != begin + text.size()) return std::nullopt;
        return value;
    };

    const auto slash = s.find('/');
    if (slash != std::string::npos && slash > 0 && slash + 1 < s.size()) {
        const auto num = parse_plain(strip(s.substr(0, slash)));
        const auto den = parse_plain(strip(s.substr(slash + 1)));
        if (num && den && *den != 0.0) return *num / *den;
        return std::nullopt;
    }
    return parse_plain(s);
}

bool default_equivalent(const std::string& a, const std::string& b) {
    const auto na = parse_numeric(a);
    const auto nb = parse_numeric(b);
    if (na && nb) {
        const double scale = std::max({1.0, std::abs(*na), std::abs(*nb)});
        return std::abs(*na - *nb) <= 1e-9 * scale;
    }
    return normalize(a) == normalize(b);
}

}  // namespace sws::answers
