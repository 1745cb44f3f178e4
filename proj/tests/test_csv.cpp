#include <doctest.h>

#include "transitgap/csv.hpp"
#include "transitgap/error.hpp"

using namespace transitgap;

TEST_CASE("quoted fields keep embedded commas and quotes") {
  auto t = csv::Table::parse("id,wkt,note\nB1,\"POLYGON((1 2, 3 4))\",\"say \"\"hi\"\"\"\n");
  REQUIRE(t.rows() == 1);
  CHECK(t.cell(0, "wkt") == "POLYGON((1 2, 3 4))");
  CHECK(t.cell(0, "note") == "say \"hi\"");
}

TEST_CASE("trailing optional column may be omitted") {
  auto t = csv::Table::parse("a,b,c\n1,2\n3,4,5\r\n");
  REQUIRE(t.rows() == 2);
  CHECK(t.cell(0, "c").empty());
  CHECK(t.number(1, "c") == 5.0);
}

TEST_CASE("missing column and bad numbers are schema errors") {
  auto t = csv::Table::parse("a\nx\n");
  try {
    t.column("b");
    FAIL("expected SchemaError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SchemaError);
  }
  CHECK_THROWS_AS(t.number(0, "a"), Error);
  CHECK_THROWS_AS(csv::parse_bool("maybe", "ctx"), Error);
}

TEST_CASE("booleans accept common spellings") {
  CHECK(csv::parse_bool("true", ""));
  CHECK(csv::parse_bool("1", ""));
  CHECK_FALSE(csv::parse_bool("false", ""));
  CHECK_FALSE(csv::parse_bool("0", ""));
}

TEST_CASE("number formatting round-trips") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-7, 123456789.125, 0.0}) {
    CHECK(csv::parse_number(csv::format_number(v), "") == v);
  }
  CHECK(csv::format_number(-0.0) == "0");
  CHECK(csv::format_number(36800.0) == "36800");
}

TEST_CASE("writer escapes and parses back") {
  csv::Writer w({"id", "text"});
  w.add_row({"1", "a,b"});
  w.add_row({"2", "q\"x"});
  auto t = csv::Table::parse(w.str());
  CHECK(t.cell(0, "text") == "a,b");
  CHECK(t.cell(1, "text") == "q\"x");
}
