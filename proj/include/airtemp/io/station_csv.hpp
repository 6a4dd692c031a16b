#ifndef AIRTEMP_IO_STATION_CSV_HPP
#define AIRTEMP_IO_STATION_CSV_HPP

#include <string>
#include <vector>

#include "airtemp/core/time_utils.hpp"

namespace airtemp {

/// One in-situ air-temperature observation.
struct StationRecord {
    std::string station_id;
    double lat = 0;
    double lon = 0;
    double elevation_m = 0;
    UtcHour timestamp;
    double t_air_c = 0;
};

namespace io {

inline constexpr const char* kStationCsvHeader = "station_id,lat,lon,elevation_m,timestamp_utc,t_air_c";

struct StationReadOptions {
    /// Drop a station's records for any calendar year in which it has fewer
    /// than 50% of the hourly slots.
    bool apply_validity_filter = false;
};

/// Strict CSV reader; malformed rows raise DataError with the line number,
/// duplicate (station_id, timestamp) rows raise DataError naming the
/// station. An empty file yields an empty list with a warning on stderr.
std::vector<StationRecord> read_stations(const std::string& path, const StationReadOptions& opts = {});

void write_stations(const std::vector<StationRecord>& records, const std::string& path);

} // namespace io
} // namespace airtemp

#endif
