#pragma once

#include <filesystem>
#include <iosfwd>

#include "tradelab/data/panel.hpp"

namespace tradelab::data {

// CSV with header `date,symbol,open,high,low,close,volume`, ISO-8601 dates.
// Rows are pivoted into aligned matrices with symbols sorted
// lexicographically and dates ascending; absent (date, symbol) cells are
// invalid with NaN fields.
PanelData load_ohlcv(const std::filesystem::path& path);
PanelData parse_ohlcv(std::istream& in);

// Writes valid cells only, one row per (date, symbol), in date-major order.
// Numbers use the shortest round-trip representation.
void write_ohlcv(std::ostream& out, const PanelData& panel);

bool is_iso_date(std::string_view s);

}  // namespace tradelab::data
