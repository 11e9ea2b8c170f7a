#include <cstdlib>
#include <stdexcept>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "doctest.h"
#include "fvselect/csv.hpp"

using namespace fvselect;

TEST_CASE("shortest round-trip formatting") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(-2.5e-7) == "-2.5e-07");
  CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
  CHECK(format_double(INFINITY) == "inf");
  for (double v : {1.0 / 3.0, 0.331898, 6.02214076e23, 5e-324}) {
    CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
  }
}

TEST_CASE("write then read back") {
  const auto path = std::filesystem::temp_directory_path() / "fvselect_csv_test.csv";
  {
    CsvWriter w(path, {"a", "b", "c"});
    w.row({std::string("x"), 1.5, std::int64_t{-3}});
    w.row({std::string("y"), 1.0 / 3.0, std::uint64_t{7}});
  }
  const auto t = CsvTable::read(path);
  CHECK(t.rows() == 2);
  CHECK(t.cell(0, "a") == "x");
  CHECK(t.number(1, "b") == 1.0 / 3.0);
  CHECK(t.number(0, "c") == -3.0);
  CHECK(t.has_column("b"));
  CHECK_THROWS_WITH_AS(t.column("zzz"), doctest::Contains("zzz"), std::exception);

  SUBCASE("row width is checked on write") {
    CsvWriter w(path, {"a", "b"});
    CHECK_THROWS(w.row({1.0}));
  }
  SUBCASE("ragged files are rejected on read") {
    std::ofstream(path) << "a,b\n1\n";
    CHECK_THROWS(CsvTable::read(path));
  }
  std::filesystem::remove(path);
}
