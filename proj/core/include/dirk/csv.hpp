#pragma once

#include <string>

namespace dirk {

/// Quotes a CSV field when it contains a separator, quote or newline. Scheme names such
/// as DIRK(6,6)A need it.
inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + '"';
}

}  // namespace dirk
