#include <algorithm>

#include "doctest.h"
#include "routeemu/error.hpp"
#include "routeemu/ingest.hpp"
#include "routeemu/orchestrator.hpp"
#include "routeemu/scenario_pipeline.hpp"
#include "support.hpp"

using namespace routeemu;

namespace {

ProbeConfig probe_for(TimeMs duration) {
  ProbeConfig p;
  p.duration_ms = duration;
  return p;
}

SessionOptions probed(TimeMs duration) {
  SessionOptions o;
  o.probe = probe_for(duration);
  return o;
}

PathSetup path(std::string id, Scenario s, std::uint64_t seed = 1) {
  s.path_id = id;
  LinkConfig cfg;
  cfg.rng_seed = seed;
  return PathSetup{std::move(id), std::move(s), cfg};
}

std::vector<ApiEvent> of_kind(const std::vector<ApiEvent>& events, EventKind kind, const std::string& path_id = {}) {
  std::vector<ApiEvent> out;
  for (const auto& e : events)
    if (e.kind == kind && (path_id.empty() || e.path_id == path_id)) out.push_back(e);
  return out;
}

bool same_events(const std::vector<ApiEvent>& a, const std::vector<ApiEvent>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].t_ms != b[i].t_ms || a[i].kind != b[i].kind || a[i].path_id != b[i].path_id ||
        a[i].payload != b[i].payload)
      return false;
  return true;
}

ErrorKind error_kind(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::io_failure;
}

}  // namespace

TEST_SUITE("orchestrator") {
  TEST_CASE("topology defaults and overrides") {
    const auto t = parse_topology(R"({"paths":[{"path_id":"a","scenario_file":"a.csv"}]})", "/data");
    CHECK(t.mode == ReplayMode::simulated);
    CHECK(t.clock == ClockKind::virtual_clock);
    CHECK(t.position_stream_hz == 20);
    CHECK(resolve_path(t, "a.csv") == "/data/a.csv");
    CHECK(resolve_path(t, "/abs/a.csv") == "/abs/a.csv");

    const auto u = parse_topology(R"({"mode":"udp_proxy","endpoints":{"receiver":"10.0.0.2:5000"},
      "probe":{"offered_load_bps":2000000,"duration_ms":1000},
      "paths":[{"path_id":"a","scenario_file":"a.csv","listen_port":6000,
                "link_config":{"queue_capacity_bytes":9000,"rng_seed":7}}]})");
    CHECK(u.clock == ClockKind::wall);
    CHECK(u.endpoints.receiver_host == "10.0.0.2");
    CHECK(u.endpoints.receiver_port == 5000);
    REQUIRE(u.probe);
    CHECK(u.probe->spacing_ms() == 5.0);
    CHECK(u.paths[0].listen_port == 6000);
    CHECK(*u.paths[0].link_config.queue_capacity_bytes == 9000);
    CHECK(u.paths[0].link_config.rng_seed == 7);
    CHECK(parse_topology(R"({"mode":"tc_script","paths":[{"path_id":"a","scenario_file":"a"}]})").clock ==
          ClockKind::none);
  }

  TEST_CASE("topology errors") {
    CHECK(error_kind([] { parse_topology(R"({"paths":[]})"); }) == ErrorKind::invalid_argument);
    CHECK(error_kind([] { parse_topology("{not json"); }) == ErrorKind::invalid_argument);
    CHECK(error_kind([] {
            parse_topology(R"({"paths":[{"path_id":"a","scenario_file":"x"},{"path_id":"a","scenario_file":"y"}]})");
          }) == ErrorKind::invalid_argument);
    CHECK(error_kind([] {
            parse_topology(R"({"mode":"simulated","clock":"wall","paths":[{"path_id":"a","scenario_file":"x"}]})");
          }) == ErrorKind::invalid_argument);
    CHECK(error_kind([] {
            parse_topology(R"({"mode":"udp_proxy","clock":"virtual","paths":[{"path_id":"a","scenario_file":"x"}]})");
          }) == ErrorKind::invalid_argument);
  }

  TEST_CASE("topology files load their scenarios") {
    const auto t = load_topology(testsupport::data_file("topology_two.json"));
    const auto paths = load_paths(t);
    REQUIRE(paths.size() == 2);
    CHECK(paths[0].scenario.rows.size() == 600);
    CHECK(paths[1].scenario.rows.size() == 1200);
    CHECK(paths[1].link.rng_seed == 2);
  }

  TEST_CASE("single path replay equals driving the link and aggregating by hand") {
    const auto s = testsupport::dip_scenario(20'000, 5000, 2000);
    const auto out = run_replay({path("lte0", s)}, probed(20'000));

    Link link;
    const auto probe = probe_for(20'000);
    const auto sends = send_schedule(probe);
    const auto events = drive_from_scenario(link, s, to_packets(sends));
    CHECK(out.paths[0].events == events);
    CHECK(out.paths[0].reports == aggregate(sends, events, probe));
    CHECK(out.paths[0].reports.size() == 400);
  }

  TEST_CASE("three paths match their single-path runs") {
    const std::vector<PathSetup> three{path("a", testsupport::constant_scenario(10'000, 5'000'000, 30, 2, 0.01), 1),
                                       path("b", testsupport::constant_scenario(10'000, 2'000'000, 50, 5, 0.05), 2),
                                       path("c", testsupport::dip_scenario(10'000, 3000, 1000), 3)};
    const auto joint = run_replay(three, probed(10'000));
    for (std::size_t i = 0; i < 3; ++i) {
      const auto alone = run_replay({three[i]}, probed(10'000));
      CHECK(joint.paths[i].reports == alone.paths[0].reports);
      CHECK(joint.paths[i].events == alone.paths[0].events);
      CHECK(same_events(of_kind(joint.events, EventKind::link_params, three[i].path_id),
                        of_kind(alone.events, EventKind::link_params, three[i].path_id)));
    }
    CHECK(joint.paths[0].reports != joint.paths[1].reports);
  }

  TEST_CASE("changing one path leaves the others untouched") {
    auto a = path("a", testsupport::constant_scenario(8000, 5'000'000, 30, 2, 0.02), 1);
    auto b = path("b", testsupport::constant_scenario(8000, 3'000'000, 40, 3, 0.02), 2);
    const auto before = run_replay({a, b}, probed(8000));
    b.scenario = testsupport::dip_scenario(8000, 2000, 3000);
    b.scenario.path_id = "b";
    const auto after = run_replay({a, b}, probed(8000));
    CHECK(before.paths[0].events == after.paths[0].events);
    CHECK(before.paths[0].reports == after.paths[0].reports);
    CHECK(same_events(of_kind(before.events, EventKind::probe_report, "a"),
                      of_kind(after.events, EventKind::probe_report, "a")));
    CHECK(before.paths[1].reports != after.paths[1].reports);
  }

  TEST_CASE("position events carry the scenario row position") {
    auto s = testsupport::constant_scenario(3000, 5'000'000, 30);
    for (std::size_t i = 0; i < s.rows.size(); ++i) {
      s.rows[i].lat_deg = 35.0 + 1e-5 * static_cast<double>(i);
      s.rows[i].lon_deg = 139.0 - 1e-5 * static_cast<double>(i);
    }
    SessionOptions o;
    o.position_stream_hz = 4;
    const auto out = run_replay({path("lte0", s)}, o);
    const auto pos = of_kind(out.events, EventKind::position);
    REQUIRE(pos.size() == 12);  // 3 s at 4 Hz
    for (const auto& e : pos) {
      const auto& p = std::get<PositionSample>(e.payload);
      const auto& row = s.rows[s.row_index_at(static_cast<TimeMs>(e.t_ms))];
      CHECK(p.t_ms == row.t_ms);
      CHECK(p.lat_deg == row.lat_deg);
      CHECK(p.lon_deg == row.lon_deg);
      CHECK(static_cast<TimeMs>(e.t_ms) % 250 == 0);
    }
  }

  TEST_CASE("event times never go backwards within a kind and path") {
    const auto out = run_replay({path("a", testsupport::dip_scenario(6000, 1000, 2000), 1),
                                 path("b", testsupport::constant_scenario(6000, 1'000'000, 10), 2)},
                                probed(6000));
    std::map<std::pair<int, std::string>, double> last;
    for (const auto& e : out.events) {
      auto key = std::make_pair(static_cast<int>(e.kind), e.path_id);
      auto it = last.find(key);
      if (it != last.end()) CHECK(e.t_ms >= it->second);
      last[key] = e.t_ms;
    }
    const auto states = of_kind(out.events, EventKind::state_change);
    REQUIRE(states.size() == 2);
    CHECK(std::get<ReplayStatus>(states.back().payload) == ReplayStatus::finished);
  }

  TEST_CASE("paused session does not move") {
    ReplaySession s({path("lte0", testsupport::constant_scenario(5000, 5'000'000, 30))}, probed(5000));
    s.control({ControlKind::start});
    s.advance_to(1000);
    const auto reports = s.reports(0).size();
    const auto paused = s.control({ControlKind::pause});
    CHECK(paused.status == ReplayStatus::paused);
    s.advance_to(3000);
    CHECK(s.now() == 1000);
    CHECK(s.reports(0).size() == reports);
    const auto resumed = s.control({ControlKind::resume});
    CHECK(resumed.t_ms == paused.t_ms);
    CHECK(resumed.status == ReplayStatus::running);
    s.run_to_end();
    CHECK(s.status() == ReplayStatus::finished);
    CHECK(s.reports(0).size() == 100);
  }

  TEST_CASE("pause and resume do not change the outcome") {
    const auto setup = path("lte0", testsupport::dip_scenario(6000, 2000, 1500));
    const auto reference = run_replay({setup}, probed(6000));
    ReplaySession s({setup}, probed(6000));
    s.control({ControlKind::start});
    for (double t = 0; s.status() != ReplayStatus::finished; t += 333) {
      s.advance_to(t);
      if (s.status() == ReplayStatus::running) {
        s.control({ControlKind::pause});
        s.control({ControlKind::resume});
      }
    }
    CHECK(s.reports(0) == reference.paths[0].reports);
  }

  TEST_CASE("seek to zero looks like a fresh start") {
    const auto setup = path("lte0", testsupport::dip_scenario(6000, 2000, 1500));
    ReplaySession fresh({setup}, probed(6000));
    const auto started = fresh.control({ControlKind::start});

    ReplaySession s({setup}, probed(6000));
    s.control({ControlKind::start});
    s.advance_to(3210);
    s.control({ControlKind::pause});
    s.control({ControlKind::seek, 0});
    const auto sought = s.state();
    CHECK(sought.t_ms == started.t_ms);
    CHECK(sought.lat_deg == started.lat_deg);
    CHECK(sought.paths[0].params == started.paths[0].params);
    CHECK(s.reports(0).empty());
    s.control({ControlKind::resume});
    s.run_to_end();
    fresh.run_to_end();
    CHECK(s.reports(0) == fresh.reports(0));
  }

  TEST_CASE("seek mid-run restarts measurement at the target") {
    ReplaySession s({path("lte0", testsupport::constant_scenario(6000, 5'000'000, 30))}, probed(6000));
    s.control({ControlKind::start});
    s.advance_to(500);
    s.control({ControlKind::pause});
    const auto st = s.control({ControlKind::seek, 4000});
    CHECK(st.t_ms == 4000);
    s.control({ControlKind::resume});
    s.run_to_end();
    REQUIRE(s.reports(0).size() == 40);
    CHECK(s.reports(0).front().t_ms == 4000);
    for (const auto& r : s.reports(0)) CHECK(r.throughput_bps == 1'000'000);
  }

  TEST_CASE("invalid transitions") {
    ReplaySession s({path("lte0", testsupport::constant_scenario(1000, 5'000'000, 30))});
    CHECK(error_kind([&] { s.control({ControlKind::pause}); }) == ErrorKind::invalid_transition);
    CHECK(error_kind([&] { s.control({ControlKind::resume}); }) == ErrorKind::invalid_transition);
    s.control({ControlKind::start});
    CHECK(error_kind([&] { s.control({ControlKind::start}); }) == ErrorKind::invalid_transition);
    CHECK(error_kind([&] { s.control({ControlKind::seek, 500}); }) == ErrorKind::invalid_transition);
    s.control({ControlKind::pause});
    CHECK(error_kind([&] { s.control({ControlKind::seek, 5000}); }) == ErrorKind::invalid_argument);
    CHECK(error_kind([&] { s.control({ControlKind::set_speed, 0, 0.0}); }) == ErrorKind::invalid_argument);
    s.control({ControlKind::resume});
    s.run_to_end();
    CHECK(s.status() == ReplayStatus::finished);
    CHECK(s.control({ControlKind::start}).status == ReplayStatus::running);
  }

  TEST_CASE("paths must share grid and epoch") {
    auto a = testsupport::constant_scenario(1000, 1, 1);
    auto b = testsupport::constant_scenario(1000, 1, 1, 0, 0, "b", 100);
    CHECK(error_kind([&] { ReplaySession({path("a", a), path("b", b)}); }) == ErrorKind::scenario_mismatch);
    auto c = a;
    for (auto& r : c.rows) r.t_ms += 50;
    CHECK(error_kind([&] { ReplaySession({path("a", a), path("c", c)}); }) == ErrorKind::scenario_mismatch);
    // Different lengths are fine; the shorter one holds its last row.
    ReplaySession ok({path("a", a), path("d", testsupport::constant_scenario(3000, 1, 1))});
    CHECK(ok.timeline_end_ms() == 3000);
  }

  TEST_CASE("corrected variant drives the link when selected") {
    const auto raw = testsupport::dip_scenario(6000, 2000, 1000);
    ReplaySession s({path("lte0", raw)}, probed(6000));
    CHECK(error_kind([&] { s.control({ControlKind::start, 0, 1.0, ScenarioVariant::corrected}); }) ==
          ErrorKind::invalid_argument);
    auto corrected = correct_delay(raw).scenario;
    s.set_corrected(0, corrected);
    CHECK(s.has_corrected(0));
    s.control({ControlKind::start, 0, 1.0, ScenarioVariant::corrected});
    CHECK(s.state().variant == ScenarioVariant::corrected);
    CHECK(error_kind([&] { s.set_corrected(0, corrected); }) == ErrorKind::invalid_transition);
    s.advance_to(2500);
    CHECK(s.state().paths[0].params.base_delay_ms == 30.0);
    s.run_to_end();
    auto short_one = corrected;
    short_one.rows.pop_back();
    CHECK(error_kind([&] { s.set_corrected(0, short_one); }) == ErrorKind::scenario_mismatch);
  }

  TEST_CASE("explicit workload is routed by path id") {
    std::vector<TaggedPacket> w{{"b", Packet{0, 1250, 100, {}}}, {"a", Packet{1, 1250, 200, {}}}};
    const auto out = run_replay({path("a", testsupport::constant_scenario(1000, 5'000'000, 30)),
                                 path("b", testsupport::constant_scenario(1000, 5'000'000, 10))},
                                {}, w);
    REQUIRE(out.paths[0].events.size() == 1);
    REQUIRE(out.paths[1].events.size() == 1);
    CHECK(out.paths[0].events[0].egress_ts_ms == 232.0);
    CHECK(out.paths[1].events[0].egress_ts_ms == 112.0);
    CHECK_THROWS_AS(run_replay({path("a", testsupport::constant_scenario(1000, 1, 1))}, {},
                               {{"zzz", Packet{}}}),
                    Error);
  }

  TEST_CASE("probe duration is clipped to the scenario") {
    const auto out = run_replay({path("lte0", testsupport::constant_scenario(2000, 5'000'000, 30))}, probed(30'000));
    CHECK(out.paths[0].reports.size() == 40);
  }

  TEST_CASE("scenario epoch may be non-zero") {
    auto s = testsupport::constant_scenario(2000, 5'000'000, 30);
    for (auto& r : s.rows) r.t_ms += 100'000;
    const auto out = run_replay({path("lte0", s)}, probed(2000));
    REQUIRE(out.paths[0].reports.size() == 40);
    CHECK(out.paths[0].reports.front().t_ms == 100'000);
    CHECK(out.paths[0].reports.front().mean_delay_ms == 32.0);
  }
}
