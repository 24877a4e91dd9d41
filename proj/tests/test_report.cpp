#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "mmm/error.hpp"
#include "mmm/report.hpp"

using namespace mmm;

TEST_CASE("format_number round trips") {
  for (double v : {0.1, 1.0 / 3.0, 2.005, 1e-300, -7.25, 123456789.0}) {
    CHECK(std::stod(format_number(v)) == v);
  }
  CHECK(format_number(1.0) == "1");
  CHECK(format_number(0.5) == "0.5");
}

TEST_CASE("csv output") {
  Table t{"demo", {"n", "label", "value"}, {}};
  t.add({25, "a,b", 0.5});
  t.add({50, "say \"hi\"", NAN});
  const std::string csv = to_csv(t);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "n,label,value");
  std::getline(in, line);
  CHECK(line == "25,\"a,b\",0.5");
  std::getline(in, line);
  CHECK(line.rfind("50,\"say \"\"hi\"\"\",", 0) == 0);
  CHECK(t.numbers("value")[0] == 0.5);
  CHECK(std::isnan(t.numbers("label")[0]));
  CHECK_THROWS(t.column("missing"));
}

TEST_CASE("report files") {
  ConvergenceReport r;
  r.title = "demo";
  r.table("x", {"a", "b"}).add({1, 2.5});
  r.flag("ok", true);
  CHECK(r.flag_value("ok"));
  CHECK_THROWS_AS(r.flag_value("nope"), std::out_of_range);
  const auto dir = std::filesystem::temp_directory_path() / "mmm_report_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const auto files = write_report(r, dir, "demo", OutputFormat::Both);
  CHECK(files.size() == 2);
  for (const auto& f : files) CHECK(std::filesystem::exists(f));
  std::ifstream j(dir / "demo.json");
  const auto parsed = nlohmann::json::parse(j);
  CHECK(parsed["title"] == "demo");
  CHECK(parse_format("csv") == OutputFormat::Csv);
  CHECK_THROWS(parse_format("xml"));

  const std::string svg = to_svg(r.get("x"), "a", "b");
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("polyline") != std::string::npos);
}
