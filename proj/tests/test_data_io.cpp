#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "surveyfuse/data_io.hpp"

using namespace surveyfuse;

TEST_SUITE("data_io") {

TEST_CASE("parse_haul_records reads one record per data row") {
  std::istringstream in(
      "lon,lat,year,gear,species,value\n"
      "3.1,54.2,2009,IBTS,HER,12.5\n"
      "4.0,55.0,2010,BTS,HER,0\n");
  const ParseResult r = parse_haul_records(in, CsvSchema{});
  REQUIRE(r.records.size() == 2);
  CHECK(r.errors.empty());
  CHECK(r.records[0].lon == doctest::Approx(3.1));
  CHECK(r.records[0].lat == doctest::Approx(54.2));
  CHECK(r.records[0].year == 2009);
  CHECK(r.records[0].gear == "IBTS");
  CHECK(r.records[0].species == "HER");
  CHECK(r.records[0].value == doctest::Approx(12.5));
  CHECK(r.records[1].value == 0.0);
}

TEST_CASE("parse respects the column mapping and delimiter") {
  std::istringstream in(
      "v;sp;g;yr;la;lo\n"
      "2.5;MAC;AS;2011;56.0;1.5\n");
  CsvSchema schema;
  schema.delimiter = ';';
  schema.lon = "lo";
  schema.lat = "la";
  schema.year = "yr";
  schema.gear = "g";
  schema.species = "sp";
  schema.value = "v";
  const ParseResult r = parse_haul_records(in, schema);
  REQUIRE(r.records.size() == 1);
  CHECK(r.records[0].lon == doctest::Approx(1.5));
  CHECK(r.records[0].value == doctest::Approx(2.5));
}

TEST_CASE("missing mapped column is a schema error") {
  std::istringstream in("lon,lat,year,gear,value\n1,2,2000,A,3\n");
  CHECK_THROWS_AS(parse_haul_records(in, CsvSchema{}), ValidationError);
}

TEST_CASE("bad rows are rejected with their line numbers") {
  std::istringstream in(
      "lon,lat,year,gear,species,value\n"
      "1.0,2.0,2000,A,S,3.0\n"
      "oops,2.0,2000,A,S,3.0\n"
      "1.0,2.0,2000,A,S,-4.0\n"
      "1.0,2.0,2000,A,S\n"
      "1.0,2.0,2000,A,S,5.0\n");
  const ParseResult r = parse_haul_records(in, CsvSchema{});
  CHECK(r.records.size() == 2);
  REQUIRE(r.errors.size() == 3);
  CHECK(r.errors[0].line == 3);
  CHECK(r.errors[1].line == 4);
  CHECK(r.errors[1].message.find("negative") != std::string::npos);
  CHECK(r.errors[2].line == 5);
}

TEST_CASE("parsing is deterministic and order-preserving") {
  const std::string text =
      "lon,lat,year,gear,species,value\n"
      "1,1,2000,A,S,1\n"
      "2,2,2001,B,S,2\n"
      "3,3,2002,C,S,3\n";
  std::istringstream in1(text), in2(text);
  const ParseResult a = parse_haul_records(in1, CsvSchema{});
  const ParseResult b = parse_haul_records(in2, CsvSchema{});
  REQUIRE(a.records.size() == 3);
  for (size_t i = 0; i < 3; ++i) {
    CHECK(a.records[i].lon == b.records[i].lon);
    CHECK(a.records[i].lon == doctest::Approx(static_cast<double>(i + 1)));
  }
}

TEST_CASE("split_hurdle zero and positive branches") {
  std::vector<HaulRecord> records(2);
  records[0].value = 0.0;
  records[1].value = 5.2;
  const HurdleTables t = split_hurdle(records);
  REQUIRE(t.detection.z.size() == 2);
  CHECK(t.detection.z[0] == 0);
  CHECK(t.detection.z[1] == 1);
  REQUIRE(t.abundance.log_value.size() == 1);
  CHECK(t.abundance.record_index[0] == 1);
  CHECK(t.abundance.log_value[0] == doctest::Approx(1.6487).epsilon(1e-3));
}

TEST_CASE("split_hurdle counts on a 10-record fixture with 4 zeros") {
  std::vector<HaulRecord> records(10);
  const double values[10] = {1.0, 0.0, 2.0, 0.0, 3.5, 8.0, 0.0, 0.25, 4.0, 0.0};
  for (int i = 0; i < 10; ++i) records[i].value = values[i];
  const HurdleTables t = split_hurdle(records);
  CHECK(t.detection.z.size() == 10);
  int zsum = 0;
  for (int z : t.detection.z) zsum += z;
  CHECK(zsum == 6);
  CHECK(t.abundance.record_index.size() == 6);
}

TEST_CASE("hurdle split round-trips values and is information disjoint") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<HaulRecord> records(500);
  for (auto& r : records)
    r.value = unif(gen) < 0.4 ? 0.0 : std::exp(4.0 * unif(gen) - 2.0);
  const HurdleTables t = split_hurdle(records);

  // no abundance row for a z = 0 record
  for (int idx : t.abundance.record_index) CHECK(t.detection.z[idx] == 1);

  std::vector<double> rebuilt(records.size(), 0.0);
  for (size_t k = 0; k < t.abundance.record_index.size(); ++k)
    rebuilt[t.abundance.record_index[k]] = std::exp(t.abundance.log_value[k]);
  for (size_t i = 0; i < records.size(); ++i) {
    if (records[i].value == 0.0)
      CHECK(rebuilt[i] == 0.0);
    else
      CHECK(std::abs(rebuilt[i] - records[i].value) <=
            1e-12 * records[i].value);
  }
}

TEST_CASE("project_coordinates matches the equirectangular formula") {
  const auto origin = project_coordinates(0, 0, 0);
  CHECK(origin[0] == 0.0);
  CHECK(origin[1] == 0.0);
  const auto lon1 = project_coordinates(1, 0, 0);
  CHECK(lon1[0] == doctest::Approx(111.32).epsilon(1e-12));
  CHECK(lon1[1] == 0.0);
  const auto lat1 = project_coordinates(0, 1, 37.0);
  CHECK(lat1[0] == 0.0);
  CHECK(lat1[1] == doctest::Approx(111.32).epsilon(1e-12));
  // cosine shrinks longitudinal distance away from the equator
  const auto north = project_coordinates(1, 0, 60.0);
  CHECK(north[0] == doctest::Approx(111.32 * 0.5).epsilon(1e-6));
}

TEST_CASE("build_design_index validates catalogs and years") {
  std::vector<HaulRecord> records(1);
  records[0] = {1.0, 2.0, 2005, "IBTS", "HER", 3.0};
  const DesignIndex idx =
      build_design_index(records, {"HER", "MAC"}, {"AS", "IBTS"}, 2004, 2006, 0.0);
  CHECK(idx.species[0] == 0);
  CHECK(idx.gear[0] == 1);
  CHECK(idx.year_slot[0] == 1);

  records[0].gear = "XX";
  CHECK_THROWS_AS(
      build_design_index(records, {"HER"}, {"AS"}, 2004, 2006, 0.0),
      ValidationError);
  records[0].gear = "AS";
  records[0].year = 2010;
  CHECK_THROWS_AS(
      build_design_index(records, {"HER"}, {"AS"}, 2004, 2006, 0.0),
      ValidationError);
}

TEST_CASE("row error report format") {
  std::ostringstream out;
  write_row_errors(out, {{12, "unparseable value 'x'"}});
  CHECK(out.str() == "line 12: unparseable value 'x'\n");
}

}  // TEST_SUITE
