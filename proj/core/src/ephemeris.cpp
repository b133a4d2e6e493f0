#include "tspc/ephemeris.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <iomanip>
#include <set>
#include <sstream>

#include "tspc/error.hpp"

namespace tspc::orbital {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_real(const std::string& field, std::size_t line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(field, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || trim(field.substr(used)).size() != 0 || !std::isfinite(v)) {
    throw ValidationError("line " + std::to_string(line) + ": cannot parse '" + field + "'");
  }
  return v;
}

EphemerisRecord record_from_fields(const std::vector<std::string>& f, std::size_t line) {
  if (f.size() != 8) {
    throw ValidationError("line " + std::to_string(line) + ": expected 8 fields, got " +
                          std::to_string(f.size()));
  }
  EphemerisRecord r;
  const double id = parse_real(f[0], line);
  if (id != std::floor(id)) {
    throw ValidationError("line " + std::to_string(line) + ": id must be an integer");
  }
  r.id = static_cast<int>(id);
  r.epoch_mjd2000 = parse_real(f[1], line);
  r.a_m = parse_real(f[2], line);
  r.e = parse_real(f[3], line);
  r.i_rad = parse_real(f[4], line);
  r.raan_rad = parse_real(f[5], line);
  r.argp_rad = parse_real(f[6], line);
  r.m_rad = parse_real(f[7], line);
  return r;
}

void check_unique(const std::vector<EphemerisRecord>& rows) {
  std::set<int> seen;
  for (const auto& r : rows) {
    if (!seen.insert(r.id).second) {
      throw ValidationError("duplicate debris id " + std::to_string(r.id));
    }
  }
}

}  // namespace

OrbitalElements elements_from_record(const EphemerisRecord& row, const Constants& c) {
  OrbitalElements el;
  el.a = row.a_m / 1000.0;
  el.e = row.e;
  el.i = row.i_rad;
  el.raan = wrap_two_pi(row.raan_rad);
  el.argp = wrap_two_pi(row.argp_rad);
  el.mean_anom = wrap_two_pi(row.m_rad);
  el.epoch = row.epoch_mjd2000;
  try {
    el.validate(c);
  } catch (const ValidationError& e) {
    throw ValidationError("record " + std::to_string(row.id) + ": " + e.what());
  }
  return el;
}

std::vector<EphemerisRecord> read_ephemeris_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  std::string header;
  for (char ch : trim(line)) {
    if (ch != ' ' && ch != '\t') header.push_back(ch);
  }
  if (header != kEphemerisHeader) {
    throw ValidationError(std::string("ephemeris CSV: expected header '") + kEphemerisHeader + "'");
  }
  std::vector<EphemerisRecord> rows;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(t);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(trim(f));
    rows.push_back(record_from_fields(fields, line_no));
  }
  check_unique(rows);
  return rows;
}

std::vector<EphemerisRecord> read_ephemeris_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open ephemeris file '" + path + "'");
  return read_ephemeris_csv(in);
}

void write_ephemeris_csv(std::ostream& out, const std::vector<EphemerisRecord>& rows) {
  out << kEphemerisHeader << '\n';
  out << std::setprecision(17);
  for (const auto& r : rows) {
    out << r.id << ',' << r.epoch_mjd2000 << ',' << r.a_m << ',' << r.e << ',' << r.i_rad << ','
        << r.raan_rad << ',' << r.argp_rad << ',' << r.m_rad << '\n';
  }
}

std::vector<EphemerisRecord> read_gtoc9_table(std::istream& in) {
  std::vector<EphemerisRecord> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#' || t.front() == '%') continue;
    std::vector<std::string> fields;
    std::stringstream ss(t);
    std::string f;
    while (ss >> f) fields.push_back(f);
    rows.push_back(record_from_fields(fields, line_no));
  }
  check_unique(rows);
  return rows;
}

}  // namespace tspc::orbital
