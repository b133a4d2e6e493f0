#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "tspc/orbital.hpp"

namespace tspc::orbital {

/// One row of the ephemeris CSV, in file units (meters, radians).
struct EphemerisRecord {
  int id = 0;
  double epoch_mjd2000 = 0.0;
  double a_m = 0.0;
  double e = 0.0;
  double i_rad = 0.0;
  double raan_rad = 0.0;
  double argp_rad = 0.0;
  double m_rad = 0.0;
};

inline constexpr const char* kEphemerisHeader = "id,epoch_mjd2000,a_m,e,i_rad,raan_rad,argp_rad,m_rad";

/// Converts to internal units (km) and normalizes angles; throws
/// ValidationError naming the record id when a or e is out of range.
OrbitalElements elements_from_record(const EphemerisRecord& row, const Constants& c = {});

/// Parses the header-required CSV. Throws ValidationError on a bad header,
/// malformed row or duplicate id.
std::vector<EphemerisRecord> read_ephemeris_csv(std::istream& in);
std::vector<EphemerisRecord> read_ephemeris_csv_file(const std::string& path);

void write_ephemeris_csv(std::ostream& out, const std::vector<EphemerisRecord>& rows);

/// Reads the whitespace-separated table published for the competition
/// (id epoch a e i raan argp M per line; '#' or '%' comments and blank lines
/// are skipped).
std::vector<EphemerisRecord> read_gtoc9_table(std::istream& in);

}  // namespace tspc::orbital
