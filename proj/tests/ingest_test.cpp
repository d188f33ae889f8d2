#include <string>

#include "doctest.h"
#include "routeemu/error.hpp"
#include "routeemu/ingest.hpp"
#include "support.hpp"

using namespace routeemu;

namespace {

template <typename Fn>
ErrorKind kind_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::io_failure;
}

}  // namespace

TEST_SUITE("ingest") {
  TEST_CASE("position trace parses") {
    const auto p = parse_position_csv("ts_ms,lat,lon\n0,35.0,139.0\n1000,35.001,139.001");
    REQUIRE(p.size() == 2);
    CHECK(p[1] == PositionSample{1000, 35.001, 139.001});
  }

  TEST_CASE("header-only position trace is empty") {
    CHECK(kind_of([] { parse_position_csv("ts_ms,lat,lon\n"); }) == ErrorKind::empty_trace);
  }

  TEST_CASE("duplicate position timestamps are rejected") {
    CHECK(kind_of([] { parse_position_csv("ts_ms,lat,lon\n0,35,139\n0,35.1,139.1\n"); }) ==
          ErrorKind::duplicate_timestamp);
  }

  TEST_CASE("out-of-order rows are sorted") {
    const auto p = parse_position_csv("ts_ms,lat,lon\n2000,1,1\n0,0,0\n1000,0.5,0.5\n");
    REQUIRE(p.size() == 3);
    CHECK(p[0].t_ms == 0);
    CHECK(p[2].t_ms == 2000);
    const auto n = parse_net_csv("ts_ms,throughput_kbps,delay_ms,jitter_ms,loss_rate\n50,1,1,0,0\n0,2,2,0,0\n");
    CHECK(n[0].throughput_bps == 2000);
  }

  TEST_CASE("net trace converts kbps to bps") {
    const auto n = parse_net_csv("ts_ms,throughput_kbps,delay_ms,jitter_ms,loss_rate\n0,5000,30,2,0\n50,5000,31,2,0");
    REQUIRE(n.size() == 2);
    CHECK(n[0].throughput_bps == 5'000'000);
    CHECK(n[1].delay_ms == 31.0);
  }

  TEST_CASE("fractional kbps keeps whole bits") {
    CHECK(parse_kbps("2500.5") == 2'500'500);
    CHECK(parse_kbps("0.001") == 1);
    CHECK(format_kbps(2'500'500) == "2500.500");
    CHECK(format_kbps(5'000'000) == "5000");
    CHECK(format_kbps(1) == "0.001");
  }

  TEST_CASE("irregular net grid is rejected") {
    CHECK(kind_of([] {
            parse_net_csv("ts_ms,throughput_kbps,delay_ms,jitter_ms,loss_rate\n0,1,1,0,0\n50,1,1,0,0\n120,1,1,0,0\n");
          }) == ErrorKind::non_uniform_grid);
  }

  TEST_CASE("negative loss is a range violation") {
    CHECK(kind_of([] {
            parse_net_csv("ts_ms,throughput_kbps,delay_ms,jitter_ms,loss_rate\n0,1,1,0,0\n50,1,1,0,-0.1\n");
          }) == ErrorKind::range_violation);
  }

  TEST_CASE("malformed rows name their line") {
    const auto scan = scan_net_csv("ts_ms,throughput_kbps,delay_ms,jitter_ms,loss_rate\n0,1,1,0,0\n50,abc,1,0,0\n100,1,1\n");
    REQUIRE(scan.issues.size() == 2);
    CHECK(scan.issues[0].kind == ErrorKind::malformed_row);
    CHECK(scan.issues[0].line == 3);
    CHECK(scan.issues[1].line == 4);
    CHECK(scan.samples.size() == 1);
    try {
      parse_net_csv("ts_ms,throughput_kbps,delay_ms,jitter_ms,loss_rate\n0,1,1,0,0\n50,abc,1,0,0\n");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.kind() == ErrorKind::malformed_row);
      CHECK(e.issues().size() == 1);
    }
  }

  TEST_CASE("single-row scenario prints with fixed precision") {
    Scenario s;
    s.path_id = "lte0";
    s.rows.push_back(ScenarioRow{0, 35.0, 139.0, 5'000'000, 30.0, 2.0, 0.0, false});
    const auto text = write_scenario_csv(s);
    CHECK(text ==
          "# path_id=lte0,delta_ms=50\n"
          "ts_ms,lat,lon,throughput_kbps,delay_ms,jitter_ms,loss_rate,corrected\n"
          "0,35.000000,139.000000,5000,30.000,2.000,0.000000,0\n");
  }

  TEST_CASE("three-row scenario survives a round trip") {
    auto s = testsupport::dip_scenario(150, 50, 50);
    s.rows[1].corrected = true;
    CHECK(read_scenario_csv(write_scenario_csv(s)) == s);
  }

  TEST_CASE("missing column is a grid violation naming it") {
    const std::string text =
        "ts_ms,lat,lon,throughput_kbps,delay_ms,jitter_ms,loss_rate\n0,35,139,5000,30,2,0\n";
    try {
      read_scenario_csv(text);
      FAIL("expected error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::grid_violation);
      CHECK(std::string(e.what()).find("corrected") != std::string::npos);
    }
  }

  TEST_CASE("scenario file without metadata uses defaults and the given id") {
    const auto s = read_scenario_csv(
        "ts_ms,lat,lon,throughput_kbps,delay_ms,jitter_ms,loss_rate,corrected\n0,35,139,5000,30,2,0,0\n"
        "50,35,139,5000,30,2,0,1\n",
        "wwan1");
    CHECK(s.path_id == "wwan1");
    CHECK(s.delta_ms == 50);
    CHECK(s.rows[1].corrected);
  }

  TEST_CASE("scenario file with a broken grid is rejected") {
    CHECK(kind_of([] {
            read_scenario_csv(
                "ts_ms,lat,lon,throughput_kbps,delay_ms,jitter_ms,loss_rate,corrected\n0,35,139,5000,30,2,0,0\n"
                "50,35,139,5000,30,2,0,0\n150,35,139,5000,30,2,0,0\n");
          }) == ErrorKind::grid_violation);
  }

  TEST_CASE("property: scenario CSV round trip is the identity") {
    testsupport::Gen g(7);
    for (int trial = 0; trial < 200; ++trial) {
      const auto s = testsupport::random_scenario(g, static_cast<std::size_t>(g.integer(1, 60)),
                                                  g.chance(0.5) ? 50 : g.integer(1, 400));
      const auto text = write_scenario_csv(s);
      const auto back = read_scenario_csv(text);
      REQUIRE_MESSAGE(back == s, "trial " << trial);
      CHECK(write_scenario_csv(back) == text);
    }
  }

  TEST_CASE("property: parsers account for every data line") {
    testsupport::Gen g(11);
    for (int trial = 0; trial < 200; ++trial) {
      const auto lines = g.integer(0, 40);
      std::string pos = "ts_ms,lat,lon\n";
      std::string net = "ts_ms,throughput_kbps,delay_ms,jitter_ms,loss_rate\n";
      std::size_t data = 0;
      for (std::int64_t i = 0; i < lines; ++i) {
        // Mostly valid rows, with garbage, range errors, duplicates and blanks mixed in.
        const auto t = std::to_string(g.chance(0.1) ? 0 : i * 50);
        switch (g.integer(0, 6)) {
          case 0: pos += t + ",abc,1\n"; net += t + ",1,2\n"; break;
          case 1: pos += t + ",95,1\n"; net += t + ",1,2,3,1.5\n"; break;
          case 2: pos += "\n"; net += "\n"; --data; break;
          default: pos += t + ",35.1,139.2\n"; net += t + ",1000,30,2,0.01\n"; break;
        }
        ++data;
      }
      const auto p = scan_position_csv(pos);
      const auto n = scan_net_csv(net);
      CHECK(p.data_lines == data);
      CHECK(n.data_lines == data);
      CHECK(p.samples.size() + p.issues.size() == data);
      CHECK(n.samples.size() + n.issues.size() == data);
    }
  }

  TEST_CASE("file helpers report missing files") {
    CHECK(kind_of([] { read_file("/nonexistent/routeemu/file.csv"); }) == ErrorKind::io_failure);
  }
}
