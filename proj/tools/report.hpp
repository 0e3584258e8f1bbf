#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace scr::report {

enum class Format { table, csv, json };

Format parse_format(const std::string& name);  // throws std::invalid_argument

/// Fixed-point with thousands separators, e.g. 29647058.08 -> "29,647,058.08".
std::string money(double v, int precision);

/// Shortest representation that round-trips to the same double; used for the
/// machine formats so csv and json carry identical numbers.
std::string full(double v);

std::string percent(double fraction, int precision);

void print_table(std::ostream& os, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows);

void print_csv(std::ostream& os, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

}  // namespace scr::report
