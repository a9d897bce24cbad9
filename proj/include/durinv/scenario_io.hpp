#pragma once

#include <iosfwd>
#include <string>

#include "durinv/params.hpp"

namespace durinv {

// Key-value scenario text format: one "key = value" per line, '#' comments,
// blank lines ignored. Required keys: name plus every ModelParams field.
// Optional: phi_grid (whitespace-separated increasing list, entries >= 1).
// Unknown keys, duplicates, missing fields and malformed values all throw
// std::runtime_error with the offending line.
Scenario parse_scenario(std::istream& in);
Scenario load_scenario(const std::string& path);
void save_scenario(const Scenario& sc, std::ostream& out);

}  // namespace durinv
