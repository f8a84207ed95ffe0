#ifndef SURVEYFUSE_DATA_IO_HPP
#define SURVEYFUSE_DATA_IO_HPP

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "surveyfuse/types.hpp"

namespace surveyfuse {

// Column mapping for delimited survey files. Names refer to header fields.
struct CsvSchema {
  char delimiter = ',';
  std::string lon = "lon";
  std::string lat = "lat";
  std::string year = "year";
  std::string gear = "gear";
  std::string species = "species";
  std::string value = "value";
};

struct RowError {
  long line = 0;  // 1-based line number in the input stream
  std::string message;
};

struct ParseResult {
  std::vector<HaulRecord> records;
  std::vector<RowError> errors;  // rejected rows, order of appearance
};

// Reads delimited text with a header row. Rows with unparseable numerics
// or negative values are rejected into `errors` with their line number;
// a missing mapped column throws ValidationError.
ParseResult parse_haul_records(std::istream& in, const CsvSchema& schema);

// Hurdle split of the raw records (detection / positive abundance).
struct DetectionTable {
  std::vector<int> record_index;
  std::vector<int> z;  // 1 iff value > 0
};

struct AbundanceTable {
  std::vector<int> record_index;  // records with value > 0 only
  std::vector<double> log_value;  // natural log of value
};

struct HurdleTables {
  DetectionTable detection;
  AbundanceTable abundance;
};

HurdleTables split_hurdle(const std::vector<HaulRecord>& records);

// Equirectangular projection to planar km with cosine correction at a
// reference latitude. Adequate at North-Sea scale; Euclidean distances on
// the output feed the Matern correlation.
std::array<double, 2> project_coordinates(double lon, double lat,
                                          double reference_lat);

// Per-record indices into the declared catalogs plus planar coordinates.
struct DesignIndex {
  std::vector<int> species;             // 0-based index into species catalog
  std::vector<int> gear;                // 0-based index into gear catalog
  std::vector<int> year_slot;           // year - year_min
  std::vector<std::array<double, 2>> xy;  // km
};

// Validates codes and year range while assembling the index. Throws
// ValidationError naming the first offending record.
DesignIndex build_design_index(const std::vector<HaulRecord>& records,
                               const std::vector<std::string>& species_catalog,
                               const std::vector<std::string>& gear_catalog,
                               int year_min, int year_max,
                               double reference_lat);

void write_row_errors(std::ostream& out, const std::vector<RowError>& errors);

}  // namespace surveyfuse

#endif
