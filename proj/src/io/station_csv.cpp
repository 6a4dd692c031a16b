#include "airtemp/io/station_csv.hpp"

#include <cstdio>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "airtemp/core/errors.hpp"
#include "airtemp/io/grid_io.hpp"

namespace airtemp::io {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& s, int line_no, const char* what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw DataError("line " + std::to_string(line_no) + ": bad " + what + " value '" + s + "'");
    }
}

} // namespace

std::vector<StationRecord> read_stations(const std::string& path, const StationReadOptions& opts) {
    const std::string bytes = read_file_bytes(path);
    std::istringstream in(bytes);
    std::string line;
    int line_no = 0;
    std::vector<StationRecord> records;
    std::set<std::pair<std::string, std::string>> seen;

    if (!std::getline(in, line)) {
        std::cerr << "warning: station file '" << path << "' is empty\n";
        return records;
    }
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kStationCsvHeader) {
        throw DataError("line 1: expected header '" + std::string(kStationCsvHeader) + "', got '" + line + "'");
    }

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_fields(line);
        if (fields.size() != 6) {
            throw DataError("line " + std::to_string(line_no) + ": expected 6 fields, got " +
                            std::to_string(fields.size()));
        }
        StationRecord rec;
        rec.station_id = fields[0];
        if (rec.station_id.empty()) {
            throw DataError("line " + std::to_string(line_no) + ": empty station id");
        }
        rec.lat = parse_double(fields[1], line_no, "lat");
        rec.lon = parse_double(fields[2], line_no, "lon");
        rec.elevation_m = parse_double(fields[3], line_no, "elevation_m");
        try {
            rec.timestamp = parse_iso_hour(fields[4]);
        } catch (const DataError& e) {
            throw DataError("line " + std::to_string(line_no) + ": " + e.what());
        }
        rec.t_air_c = parse_double(fields[5], line_no, "t_air_c");
        if (rec.t_air_c < -60.0 || rec.t_air_c > 60.0) {
            throw DataError("line " + std::to_string(line_no) + ": t_air " + fields[5] +
                            " outside [-60, 60] degC");
        }
        if (!seen.emplace(rec.station_id, format_iso_hour(rec.timestamp)).second) {
            throw DataError("line " + std::to_string(line_no) + ": duplicate timestamp " +
                            format_iso_hour(rec.timestamp) + " for station " + rec.station_id);
        }
        records.push_back(std::move(rec));
    }

    if (records.empty()) {
        std::cerr << "warning: station file '" << path << "' has no records\n";
        return records;
    }

    if (opts.apply_validity_filter) {
        std::map<std::pair<std::string, int>, std::int64_t> counts;
        for (const StationRecord& r : records) ++counts[{r.station_id, r.timestamp.year}];
        std::vector<StationRecord> kept;
        kept.reserve(records.size());
        for (StationRecord& r : records) {
            const std::int64_t slots = static_cast<std::int64_t>(days_in_year(r.timestamp.year)) * 24;
            if (2 * counts[{r.station_id, r.timestamp.year}] >= slots) kept.push_back(std::move(r));
        }
        return kept;
    }
    return records;
}

void write_stations(const std::vector<StationRecord>& records, const std::string& path) {
    std::string out = kStationCsvHeader;
    out += "\n";
    char buf[256];
    for (const StationRecord& r : records) {
        std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%.2f,%s,%.4f\n", r.station_id.c_str(), r.lat,
                      r.lon, r.elevation_m, format_iso_hour(r.timestamp).c_str(), r.t_air_c);
        out += buf;
    }
    atomic_write_file(path, out);
}

} // namespace airtemp::io
