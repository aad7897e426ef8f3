#pragma once

#include <string>

#include <json.hpp>

namespace epd::pipeline {

// Deterministic text form: keys sorted, two-space indentation, integers
// verbatim and every floating-point value printed with "%.6f". Throws
// FormatError for non-finite floats.
std::string canonical_json(const nlohmann::json& value);

// Rounds to the nearest multiple of 1e-6, so a value survives a trip through
// canonical_json() and back unchanged.
double round6(double value);

}  // namespace epd::pipeline
