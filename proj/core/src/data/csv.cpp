#include "tradelab/data/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <chrono>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "tradelab/error.hpp"

namespace tradelab::data {

namespace {

constexpr std::string_view kHeader = "date,symbol,open,high,low,close,volume";

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_number(std::string_view field, const char* name, std::size_t line) {
  double v = 0.0;
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (field.empty() || ec != std::errc() || ptr != last)
    throw ParseError(std::string("cannot parse ") + name + " '" + std::string(field) + "'", line);
  if (!std::isfinite(v)) throw ParseError(std::string(name) + " is not finite", line);
  return v;
}

struct Row {
  double open, high, low, close, volume;
};

void append_number(std::string& out, double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, ptr);
}

}  // namespace

bool is_iso_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9})
    if (s[i] < '0' || s[i] > '9') return false;
  const int y = std::stoi(std::string(s.substr(0, 4)));
  const unsigned m = static_cast<unsigned>(std::stoi(std::string(s.substr(5, 2))));
  const unsigned d = static_cast<unsigned>(std::stoi(std::string(s.substr(8, 2))));
  return std::chrono::year_month_day{std::chrono::year{y}, std::chrono::month{m},
                                     std::chrono::day{d}}
      .ok();
}

PanelData load_ohlcv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open market data file '" + path.string() + "'");
  return parse_ohlcv(in);
}

PanelData parse_ohlcv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::map<std::pair<std::string, std::string>, std::pair<Row, std::size_t>> cells;
  std::set<std::string> dates;
  std::set<std::string> symbols;

  while (std::getline(in, line)) {
    ++line_no;
    const auto text = trim(line);
    if (text.empty()) continue;
    if (!have_header) {
      if (text != kHeader)
        throw ParseError("expected header '" + std::string(kHeader) + "'", line_no);
      have_header = true;
      continue;
    }
    const auto fields = split(text);
    if (fields.size() != 7)
      throw ParseError("expected 7 fields, found " + std::to_string(fields.size()), line_no);
    if (!is_iso_date(fields[0]))
      throw ParseError("invalid ISO-8601 date '" + std::string(fields[0]) + "'", line_no);
    if (fields[1].empty()) throw ParseError("empty symbol", line_no);

    Row row{parse_number(fields[2], "open", line_no), parse_number(fields[3], "high", line_no),
            parse_number(fields[4], "low", line_no), parse_number(fields[5], "close", line_no),
            parse_number(fields[6], "volume", line_no)};
    const std::string where = " (line " + std::to_string(line_no) + ")";
    if (row.open <= 0.0) throw ValidationError("nonpositive open price" + where);
    if (row.high <= 0.0) throw ValidationError("nonpositive high price" + where);
    if (row.low <= 0.0) throw ValidationError("nonpositive low price" + where);
    if (row.close <= 0.0) throw ValidationError("nonpositive close price" + where);
    if (row.volume < 0.0) throw ValidationError("negative volume" + where);
    if (row.high < std::max(row.open, row.close) || row.low > std::min(row.open, row.close))
      throw ValidationError("high/low do not bracket open/close" + where);

    std::string date(fields[0]);
    std::string symbol(fields[1]);
    auto key = std::make_pair(date, symbol);
    if (auto it = cells.find(key); it != cells.end())
      throw ConflictError("duplicate row for (" + date + ", " + symbol + ") at line " +
                          std::to_string(line_no) + ", first seen at line " +
                          std::to_string(it->second.second));
    cells.emplace(std::move(key), std::make_pair(row, line_no));
    dates.insert(std::move(date));
    symbols.insert(std::move(symbol));
  }
  if (!have_header) throw ParseError("missing header", line_no == 0 ? 1 : line_no);

  PanelData panel = PanelData::empty({dates.begin(), dates.end()}, {symbols.begin(), symbols.end()});
  for (const auto& [key, entry] : cells) {
    const auto d = panel.day_index(key.first);
    const auto s = static_cast<Eigen::Index>(
        std::lower_bound(panel.symbols.begin(), panel.symbols.end(), key.second) -
        panel.symbols.begin());
    const Row& r = entry.first;
    panel.open(d, s) = r.open;
    panel.high(d, s) = r.high;
    panel.low(d, s) = r.low;
    panel.close(d, s) = r.close;
    panel.volume(d, s) = r.volume;
    panel.valid(d, s) = true;
  }
  return panel;
}

void write_ohlcv(std::ostream& out, const PanelData& panel) {
  std::string buf;
  buf.append(kHeader);
  buf.push_back('\n');
  for (int d = 0; d < panel.num_days(); ++d) {
    for (int s = 0; s < panel.num_symbols(); ++s) {
      if (!panel.valid(d, s)) continue;
      buf.append(panel.dates[static_cast<std::size_t>(d)]);
      buf.push_back(',');
      buf.append(panel.symbols[static_cast<std::size_t>(s)]);
      for (double v : {panel.open(d, s), panel.high(d, s), panel.low(d, s), panel.close(d, s),
                       panel.volume(d, s)}) {
        buf.push_back(',');
        append_number(buf, v);
      }
      buf.push_back('\n');
    }
  }
  out << buf;
}

}  // namespace tradelab::data
