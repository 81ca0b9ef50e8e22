#pragma once

#include <functional>
#include <optional>
#include <string>

namespace sws::answers {

using Equivalence = std::function<bool(const std::string&, const std::string&)>;

// Strips math-mode wrappers (\boxed{}, \text{}, $...$, \( \)), commas used
// as thousands separators, and surrounding whitespace/punctuation.
std::string normalize(const std::string& answer);

// Parses integers, rationals ("3/4", "\frac{3}{4}") and decimals.
std::optional<double> parse_numeric(const std::string& answer);

// Numeric comparison at relative tolerance 1e-9 when both sides parse,
// normalized string equality otherwise. Symbolic equivalence is out of
// scope; deployments plug their own checker through Equivalence.
bool default_equivalent(const std::string& a, const std::string& b);

inline Equivalence default_equivalence() { return &default_equivalent; }

}  // namespace sws::answers
