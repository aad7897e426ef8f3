#include "epdkit/pipeline/canonical_json.hpp"

#include <cmath>
#include <cstdio>

#include "epdkit/core/error.hpp"

namespace epd::pipeline {
namespace {

void write(const nlohmann::json& v, int depth, std::string& out) {
  const std::string pad(2 * (depth + 1), ' ');
  const std::string close(2 * depth, ' ');
  switch (v.type()) {
    case nlohmann::json::value_t::object: {
      if (v.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (const auto& [key, item] : v.items()) {
        if (!first) out += ",\n";
        first = false;
        out += pad + nlohmann::json(key).dump() + ": ";
        write(item, depth + 1, out);
      }
      out += "\n" + close + "}";
      return;
    }
    case nlohmann::json::value_t::array: {
      if (v.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",\n";
        out += pad;
        write(v[i], depth + 1, out);
      }
      out += "\n" + close + "]";
      return;
    }
    case nlohmann::json::value_t::number_float: {
      const double d = v.get<double>();
      if (!std::isfinite(d)) throw FormatError("canonical JSON cannot hold a non-finite number");
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.6f", d);
      // "-0.000000" and "0.000000" must not depend on the sign of a rounded zero.
      out += std::string(buf) == "-0.000000" ? "0.000000" : buf;
      return;
    }
    default:
      out += v.dump();
  }
}

}  // namespace

std::string canonical_json(const nlohmann::json& value) {
  std::string out;
  write(value, 0, out);
  out += "\n";
  return out;
}

double round6(double value) {
  const double r = std::round(value * 1e6) / 1e6;
  return r == 0.0 ? 0.0 : r;
}

}  // namespace epd::pipeline
