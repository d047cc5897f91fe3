#include "doctest.h"

#include "nimbus/csv.hpp"
#include "nimbus/error.hpp"

#include "temp_dir.hpp"

#include <cmath>
#include <string>

using namespace nimbus;
using namespace nimbus::csv;
using testutil::TempDir;

TEST_CASE("format_double round-trips exactly") {
  for (double v : {0.0, 1.0, -1.0, 0.1, 1.0 / 3.0, 1e-300, 1e300, 0.12,
                   3.141592653589793, -2.2250738585072014e-308}) {
    CHECK(parse_double(format_double(v), "test") == v);
  }
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("parse_double rejects trailing garbage and empty input") {
  CHECK_THROWS_AS(parse_double("1.5x", "field"), DataError);
  CHECK_THROWS_AS(parse_double("", "field"), DataError);
  CHECK_THROWS_AS(parse_double("  1.5", "field"), DataError);
  CHECK_THROWS_AS(parse_long("12.5", "field"), DataError);
  CHECK(parse_long("-42", "field") == -42);
}

TEST_CASE("read_csv parses quoting, escapes and CRLF") {
  TempDir dir;
  const std::string path = dir.write(
      "t.csv", "id,text,score\r\n1,\"a, b\",0.5\r\n2,\"say \"\"hi\"\"\",1\r\n");
  Table t = read_csv(path);
  REQUIRE(t.header.size() == 3);
  CHECK(t.column("text") == 1);
  CHECK(t.column("missing") == -1);
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][1] == "a, b");
  CHECK(t.rows[1][1] == "say \"hi\"");
}

TEST_CASE("read_csv keeps newlines inside quoted fields") {
  TempDir dir;
  const std::string path = dir.write("t.csv", "id,text\n1,\"two\nlines\"\n");
  Table t = read_csv(path);
  REQUIRE(t.rows.size() == 1);
  CHECK(t.rows[0][1] == "two\nlines");
}

TEST_CASE("read_csv rejects ragged rows with position info") {
  TempDir dir;
  const std::string path = dir.write("t.csv", "a,b\n1,2\n3\n");
  CHECK_THROWS_WITH_AS(read_csv(path), doctest::Contains("row 3"), DataError);
  CHECK_THROWS_AS(read_csv(dir.write("empty.csv", "")), DataError);
  CHECK_THROWS_AS(read_csv(dir.file("absent.csv")), DataError);
}

TEST_CASE("write_csv then read_csv preserves fields") {
  TempDir dir;
  const std::string path = dir.file("out.csv");
  write_csv(path, {"x", "y"}, {{"plain", "with,comma"}, {"with \"quote\"", "nl\nhere"}});
  Table t = read_csv(path);
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][0] == "plain");
  CHECK(t.rows[0][1] == "with,comma");
  CHECK(t.rows[1][0] == "with \"quote\"");
  CHECK(t.rows[1][1] == "nl\nhere");
}

TEST_CASE("escape_field quotes only when needed") {
  CHECK(escape_field("plain") == "plain");
  CHECK(escape_field("a,b") == "\"a,b\"");
  CHECK(escape_field("q\"q") == "\"q\"\"q\"");
}
