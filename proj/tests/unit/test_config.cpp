#include <doctest.h>

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "multibeam/config.hpp"
#include "multibeam/runner.hpp"

using namespace multibeam;

namespace {

int error_line(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

std::string error_field(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "";
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("minimal config fills defaults") {
  const RunConfig c = parse_config("[array]\nlattice = triangular\na = 1.8\nN = 149\n[mode]\nNA = 0.7\n");
  CHECK(c.lattice == LatticeKind::triangular);
  CHECK(c.a == 1.8);
  CHECK(c.n_atoms == 149);
  CHECK(c.na == 0.7);
  CHECK(!c.waist_ratio);
  CHECK(!c.detuning);
  CHECK(c.grid_resolution == 256);
  CHECK(c.bz_resolution == 201);
  CHECK(c.is_explicit("NA"));
  CHECK(!c.is_explicit("N_k"));
}

TEST_CASE("keys before any section and comments") {
  const RunConfig c = parse_config("# spacing study\na = 1.5   # inline\nw = 0.25\ndelta = -0.3\n");
  CHECK(c.a == 1.5);
  CHECK(*c.waist_ratio == 0.25);
  CHECK(*c.detuning == -0.3);
}

TEST_CASE("errors name the field and line") {
  CHECK(error_line("a = 1.7\n\nbogus = 3\n") == 3);
  CHECK(error_field("a = 1.7\n\nbogus = 3\n") == "bogus");
  CHECK(error_line("[array]\nN = many\n") == 2);
  CHECK(error_field("[array]\nN = many\n") == "N");
  CHECK(error_line("[mode]\nNA = 1.4\n") == 2);
  CHECK(error_line("[mode]\na = 1.4\n") == 2);
  CHECK(error_line("a = 1.4\na = 1.5\n") == 2);
  CHECK(error_line("[nowhere]\n") == 1);
  CHECK(error_line("a 1.4\n") == 1);
  CHECK(error_line("[array]\nlattice = hexagonal\n") == 2);
  CHECK_THROWS_AS(parse_config("{\"array\": {\"a\": \"x\"}}"), ConfigError);
  CHECK_THROWS_AS(parse_config("{ broken"), ConfigError);
}

TEST_CASE("spacing outside the window is rejected before running") {
  const RunConfig c = parse_config("a = 2.5\n");
  CHECK_THROWS_AS(validate_for(c, "scatter-r0"), ConfigError);
  CHECK_NOTHROW(validate_for(c, "infinite-r0"));
  const RunConfig sweep = parse_config("[sweep]\na_list = 1.5, 2.5\n");
  CHECK_THROWS_AS(validate_for(sweep, "sweep-spacing"), ConfigError);
  CHECK_THROWS_AS(validate_for(c, "no-such-command"), ConfigError);
  const RunConfig square = parse_config("lattice = square\na = 1.2\n");
  CHECK_NOTHROW(validate_for(square, "theory-r0"));
  const RunConfig square_out = parse_config("lattice = square\na = 1.5\n");
  CHECK_THROWS_AS(validate_for(square_out, "theory-r0"), ConfigError);
}

TEST_CASE("ranges and lists") {
  const RunConfig c = parse_config("[sweep]\na_list = 1.6:1.8:0.05\nN_list = 61, 149\n");
  REQUIRE(c.a_list.size() == 5);
  CHECK(c.a_list.back() == doctest::Approx(1.8));
  CHECK(c.n_list == std::vector<std::size_t>{61, 149});
  CHECK_THROWS_AS(parse_config("[sweep]\na_list = 1.8, 1.6\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[sweep]\nN_list = 0\n"), ConfigError);
}

TEST_CASE("emitted config parses back to the same values") {
  RunConfig c = parse_config(
      "[array]\nlattice = square\na = 1.23\nN = 61\n[mode]\nw = 0.3\nNA = 0.8\nprojection = unfiltered\n"
      "[sweep]\na_list = 1.1,1.2\na_range = 1.05,1.3\n[shift]\nshift = 0.1,0,0.25\n[disorder]\nantithetic = false\n"
      "[output]\nformat = csv\n");
  const RunConfig back = parse_config(emit_config(c));
  CHECK(back == c);
  CHECK(emit_config(back) == emit_config(c));
  CHECK(parse_config(emit_config(RunConfig{})) == RunConfig{});
}

TEST_CASE("JSON mirror") {
  const RunConfig text = parse_config("[array]\na = 1.7\nN = 203\n[mode]\nw = 0.25\n[sweep]\nNA_list = 1, 0.7\n");
  const RunConfig sectioned =
      parse_config(R"({"array": {"a": 1.7, "N": 203}, "mode": {"w": 0.25}, "sweep": {"NA_list": [1, 0.7]}})");
  const RunConfig flat = parse_config(R"({"a": 1.7, "N": 203, "w": 0.25, "NA_list": [1, 0.7]})");
  CHECK(sectioned == text);
  CHECK(flat == text);
}

TEST_CASE("command-line overrides") {
  RunConfig c = parse_config("a = 1.7\n");
  apply_override(c, "a=1.8");
  apply_override(c, "mode.NA = 0.6");
  CHECK(c.a == 1.8);
  CHECK(c.na == 0.6);
  CHECK_THROWS_AS(apply_override(c, "array.NA=0.5"), ConfigError);
  CHECK_THROWS_AS(apply_override(c, "novalue"), ConfigError);
}

}

TEST_SUITE("runner") {

TEST_CASE("CSV headers are stable") {
  std::ifstream in(MULTIBEAM_TEST_DATA "/csv_headers.txt");
  REQUIRE(in.good());
  std::string line;
  std::size_t seen = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto colon = line.find(':');
    const std::string sub = line.substr(0, colon);
    std::string joined;
    for (const auto& col : csv_columns(sub)) joined += (joined.empty() ? "" : ",") + col;
    CHECK_MESSAGE(joined == line.substr(colon + 1), sub);
    ++seen;
  }
  CHECK(seen == 9);
}

TEST_CASE("single-point JSON output") {
  const RunConfig c = parse_config("a = 1.8\n");
  std::ostringstream out, log;
  CHECK(run("infinite-r0", c, out, log) == 0);
  const auto j = nlohmann::json::parse(out.str());
  CHECK(j["r0"].get<double>() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(j["orders"].size() == 7);
  CHECK(j.contains("config"));
  CHECK(j.contains("version"));
  CHECK(log.str().find("r0") != std::string::npos);
}

TEST_CASE("failures produce an error object") {
  const RunConfig c = parse_config("a = 2.5\n");
  std::ostringstream out, log;
  CHECK(run("theory-r0", c, out, log) == 1);
  const auto j = nlohmann::json::parse(out.str());
  CHECK(j["kind"] == "config");
  CHECK(j["field"] == "a");
  CHECK(j["error"].get<std::string>().find("window") != std::string::npos);
}

TEST_CASE("small CSV sweep") {
  const RunConfig c = parse_config(
      "[array]\nN = 19\n[mode]\nw = 0.3\n[numerics]\nN_k = 64\nbz_resolution = 41\n[sweep]\na_list = 1.5,1.8\nNA_list = 1\n"
      "[output]\nformat = csv\n");
  std::ostringstream out, log;
  REQUIRE(run("sweep-spacing", c, out, log) == 0);
  std::istringstream in(out.str());
  std::string line, header;
  std::size_t data = 0;
  bool has_config = false;
  while (std::getline(in, line)) {
    if (line.rfind("# config:", 0) == 0) has_config = true;
    if (line.empty() || line[0] == '#') continue;
    if (header.empty()) {
      header = line;
    } else {
      ++data;
    }
  }
  CHECK(has_config);
  CHECK(data == 2);
  std::string joined;
  for (const auto& col : csv_columns("sweep-spacing")) joined += (joined.empty() ? "" : ",") + col;
  CHECK(header == joined);
}

}
