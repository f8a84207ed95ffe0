#ifndef SURVEYFUSE_TYPES_HPP
#define SURVEYFUSE_TYPES_HPP

#include <stdexcept>
#include <string>

namespace surveyfuse {

// Input validation problems: bad config, bad data, unknown catalog codes.
// CLI maps these to exit code 2.
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failures: factorization breakdown, non-convergence.
// CLI maps these to exit code 3.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// One survey observation in gear-native units (kg/hr for trawls,
// NASC m^2/nm^2 for acoustics). Units are never harmonized; gear random
// effects absorb scale differences.
struct HaulRecord {
  double lon = 0.0;        // degrees east
  double lat = 0.0;        // degrees north
  int year = 0;            // survey year
  std::string gear;        // gear code, e.g. "IBTS", "BTS", "AS"
  std::string species;     // species code, e.g. "HER"
  double value = 0.0;      // nonnegative response
};

}  // namespace surveyfuse

#endif
