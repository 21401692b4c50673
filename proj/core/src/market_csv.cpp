#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "lmpgan/errors.hpp"
#include "lmpgan/market_data.hpp"

namespace lmpgan {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_double_field(const std::string& s, const std::string& path, std::size_t lineno) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite");
    return v;
  } catch (const std::exception&) {
    throw DataError(path + ":" + std::to_string(lineno) + ": bad numeric field '" + s + "'");
  }
}

}  // namespace

IngestResult ingest_csv(const std::string& path, const GridLayout& layout,
                        const std::vector<std::string>& features) {
  layout.validate();
  if (features.empty() || features[0] != "RTLMP") {
    throw ConfigError("feature list must start with RTLMP (channel 0)");
  }

  std::ifstream in(path);
  if (!in) throw DataError("cannot open data file '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  auto header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "timestamp" || header[1] != "zone") {
    throw DataError(path + ":1: header must be 'timestamp,zone,<features...>'");
  }
  // Column index of each requested feature.
  std::vector<std::size_t> column;
  for (const auto& f : features) {
    std::size_t idx = 0;
    bool found = false;
    for (std::size_t c = 2; c < header.size(); ++c) {
      if (header[c] == f) {
        idx = c;
        found = true;
        break;
      }
    }
    if (!found) throw DataError(path + ": feature column '" + f + "' not present in header");
    column.push_back(idx);
  }

  const int zones = layout.zone_count();
  const std::size_t nf = features.size();

  // cells[t][z] -> feature vector (empty until seen).
  std::map<std::int64_t, std::vector<std::vector<double>>> cells;
  std::size_t rows_read = 0;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw DataError(path + ":" + std::to_string(lineno) + ": expected " +
                      std::to_string(header.size()) + " fields, got " +
                      std::to_string(fields.size()));
    }
    std::int64_t ts;
    try {
      ts = parse_iso8601_utc_hour(fields[0]);
    } catch (const DataError& e) {
      throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    int z = layout.index_of(fields[1]);
    if (z < 0) {
      throw DataError(path + ":" + std::to_string(lineno) + ": unknown zone '" + fields[1] + "'");
    }
    auto& slot = cells[ts];
    if (slot.empty()) slot.resize(zones);
    if (!slot[z].empty()) {
      throw DataError(path + ":" + std::to_string(lineno) + ": duplicate row for (" + fields[0] +
                      ", " + fields[1] + ")");
    }
    std::vector<double> vals(nf);
    for (std::size_t c = 0; c < nf; ++c) {
      vals[c] = parse_double_field(fields[column[c]], path, lineno);
    }
    slot[z] = std::move(vals);
    ++rows_read;
  }
  if (cells.empty()) throw DataError(path + ": no data rows");

  IngestResult result;
  result.rows_read = rows_read;

  MarketVideo& video = result.video;
  video.layout = layout;
  video.features = features;

  const std::int64_t t0 = cells.begin()->first;
  const std::int64_t t1 = cells.rbegin()->first;
  const std::size_t hours = static_cast<std::size_t>((t1 - t0) / kHourSeconds) + 1;

  std::vector<std::vector<double>> last_seen(zones);  // forward-fill source
  std::vector<int> gap_len(zones, 0);
  std::vector<std::int64_t> gap_start(zones, 0);

  video.frames.reserve(hours);
  for (std::size_t h = 0; h < hours; ++h) {
    const std::int64_t ts = t0 + static_cast<std::int64_t>(h) * kHourSeconds;
    auto it = cells.find(ts);
    MarketFrame frame;
    frame.timestamp = ts;
    frame.values = nn::Tensor({static_cast<std::size_t>(layout.rows),
                               static_cast<std::size_t>(layout.cols), nf});
    for (int z = 0; z < zones; ++z) {
      const std::vector<double>* vals = nullptr;
      if (it != cells.end() && !it->second[z].empty()) {
        vals = &it->second[z];
        if (gap_len[z] > 0) {
          result.warnings.push_back("zone '" + layout.zone_order[z] + "': forward-filled " +
                                    std::to_string(gap_len[z]) + " hour(s) starting " +
                                    format_iso8601_utc(gap_start[z]));
          gap_len[z] = 0;
        }
        last_seen[z] = *vals;
      } else {
        if (last_seen[z].empty()) {
          throw DataError(path + ": zone '" + layout.zone_order[z] +
                          "' has no data at the start of the span (" + format_iso8601_utc(ts) +
                          "); cannot forward-fill");
        }
        if (gap_len[z] == 0) gap_start[z] = ts;
        if (++gap_len[z] > 6) {
          throw DataError(path + ": zone '" + layout.zone_order[z] + "' is missing more than 6 " +
                          "consecutive hours starting " + format_iso8601_utc(gap_start[z]));
        }
        vals = &last_seen[z];
        ++result.cells_filled;
      }
      int row, col;
      layout.cell_of(z, row, col);
      for (std::size_t c = 0; c < nf; ++c) {
        frame.values.at3(static_cast<std::size_t>(row), static_cast<std::size_t>(col), c) =
            (*vals)[c];
      }
    }
    video.frames.push_back(std::move(frame));
  }
  // Trailing gaps end the file; report them too.
  for (int z = 0; z < zones; ++z) {
    if (gap_len[z] > 0) {
      result.warnings.push_back("zone '" + layout.zone_order[z] + "': forward-filled " +
                                std::to_string(gap_len[z]) + " hour(s) starting " +
                                format_iso8601_utc(gap_start[z]));
    }
  }
  video.validate();
  return result;
}

void write_market_csv(const std::string& path, const MarketVideo& video) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out << "timestamp,zone";
  for (const auto& f : video.features) out << ',' << f;
  out << '\n';
  char buf[64];
  for (const auto& frame : video.frames) {
    const std::string ts = format_iso8601_utc(frame.timestamp);
    for (int z = 0; z < video.layout.zone_count(); ++z) {
      int row, col;
      video.layout.cell_of(z, row, col);
      out << ts << ',' << video.layout.zone_order[z];
      for (std::size_t c = 0; c < video.features.size(); ++c) {
        std::snprintf(buf, sizeof(buf), "%.10g",
                      frame.values.at3(static_cast<std::size_t>(row),
                                       static_cast<std::size_t>(col), c));
        out << ',' << buf;
      }
      out << '\n';
    }
  }
}

}  // namespace lmpgan
