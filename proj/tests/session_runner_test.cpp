#include <chrono>

#include "doctest.h"
#include "routeemu/error.hpp"
#include "routeemu/session_runner.hpp"
#include "support.hpp"

using namespace routeemu;
using namespace std::chrono_literals;

namespace {

ReplaySession short_session(TimeMs duration = 1000, double drain = 200) {
  SessionOptions o;
  o.drain_ms = drain;
  ProbeConfig p;
  p.duration_ms = duration;
  o.probe = p;
  return ReplaySession({PathSetup{"lte0", testsupport::dip_scenario(duration, duration / 4, duration / 4), {}}}, o);
}

std::vector<ApiEvent> drain(Subscription& sub) {
  std::vector<ApiEvent> out;
  while (!sub.ended())
    if (auto e = sub.next(2000ms)) out.push_back(*e);
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

}  // namespace

TEST_SUITE("session_runner") {
  TEST_CASE("filters select by kind and path, session events always pass") {
    EventFilter f;
    f.kinds = {EventKind::probe_report};
    f.path_id = "a";
    CHECK(f.matches(ApiEvent{0, EventKind::probe_report, "a", ProbeReport{}}));
    CHECK_FALSE(f.matches(ApiEvent{0, EventKind::probe_report, "b", ProbeReport{}}));
    CHECK_FALSE(f.matches(ApiEvent{0, EventKind::link_params, "a", LinkParams{}}));
    EventFilter g;
    g.path_id = "a";
    CHECK(g.matches(ApiEvent{0, EventKind::state_change, "", ReplayStatus::paused}));
    CHECK(g.matches(ApiEvent{0, EventKind::position, "", PositionSample{}}));
  }

  TEST_CASE("slow subscribers are cut off, others keep receiving") {
    EventBus bus(4);
    auto slow = bus.subscribe({});
    auto fast = bus.subscribe({});
    for (int i = 0; i < 10; ++i) {
      bus.publish(ApiEvent{static_cast<double>(i), EventKind::state_change, "", ReplayStatus::running});
      while (fast->next(0ms)) {
      }
    }
    CHECK(slow->overflowed());
    CHECK_FALSE(fast->overflowed());
    CHECK(bus.subscriber_count() == 1);
    int got = 0;
    while (slow->next(0ms)) ++got;
    CHECK(got == 4);
    CHECK(slow->ended());
  }

  TEST_CASE("subscribers all see the same sequence") {
    SessionRunner runner(short_session(3000), ClockKind::virtual_clock);
    runner.control({ControlKind::set_speed, 0, 20.0});
    auto a = runner.subscribe({});
    auto b = runner.subscribe({});
    runner.control({ControlKind::start});
    const auto ea = drain(*a);
    const auto eb = drain(*b);
    CHECK(ea.size() > 100);
    CHECK(same_events(ea, eb));
    CHECK(std::get<ReplayStatus>(ea.back().payload) == ReplayStatus::finished);
  }

  TEST_CASE("subscribing after the end gives one finished event") {
    SessionRunner runner(short_session(), ClockKind::virtual_clock);
    runner.control({ControlKind::set_speed, 0, 50.0});
    runner.control({ControlKind::start});
    REQUIRE(runner.wait_until(ReplayStatus::finished, 10s));
    auto sub = runner.subscribe({});
    const auto events = drain(*sub);
    REQUIRE(events.size() == 1);
    CHECK(events[0].kind == EventKind::state_change);
    CHECK(std::get<ReplayStatus>(events[0].payload) == ReplayStatus::finished);
  }

  TEST_CASE("speed changes pacing, not results") {
    auto timed = [](double speed) {
      SessionRunner runner(short_session(1000, 200), ClockKind::virtual_clock);
      runner.control({ControlKind::set_speed, 0, speed});
      auto sub = runner.subscribe({});
      const auto t0 = std::chrono::steady_clock::now();
      runner.control({ControlKind::start});
      auto events = drain(*sub);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      return std::make_pair(events, secs);
    };
    const auto [slow, slow_s] = timed(1.0);
    const auto [fast, fast_s] = timed(10.0);
    CHECK(same_events(slow, fast));
    CHECK(slow_s >= 1.1);
    CHECK(fast_s < slow_s / 4);
  }

  TEST_CASE("subscribers do not change the reports") {
    auto reports = [](int subscribers) {
      SessionRunner runner(short_session(2000, 200), ClockKind::virtual_clock);
      runner.control({ControlKind::set_speed, 0, 50.0});
      std::vector<std::shared_ptr<Subscription>> subs;
      for (int i = 0; i < subscribers; ++i) subs.push_back(runner.subscribe({}));
      runner.control({ControlKind::start});
      REQUIRE(runner.wait_until(ReplayStatus::finished, 20s));
      return runner.with_session([](ReplaySession& s) { return s.reports(0); });
    };
    const auto none = reports(0);
    CHECK(none.size() == 40);
    CHECK(reports(2) == none);
  }

  TEST_CASE("controls take effect immediately") {
    SessionRunner runner(short_session(60'000), ClockKind::virtual_clock);
    CHECK(runner.state().status == ReplayStatus::idle);
    runner.control({ControlKind::start});
    CHECK(runner.state().status == ReplayStatus::running);
    std::this_thread::sleep_for(50ms);
    const auto paused = runner.control({ControlKind::pause});
    CHECK(runner.state().status == ReplayStatus::paused);
    std::this_thread::sleep_for(50ms);
    CHECK(runner.state().t_ms == paused.t_ms);
    runner.control({ControlKind::seek, 30'000});
    CHECK(runner.state().t_ms == 30'000);
    CHECK_THROWS_AS(runner.control({ControlKind::pause}), Error);
    runner.control({ControlKind::resume});
    std::this_thread::sleep_for(50ms);
    CHECK(runner.state().t_ms > 30'000);
  }

  TEST_CASE("wall clock runs at real time only") {
    SessionRunner runner(short_session(), ClockKind::wall);
    CHECK_THROWS_AS(runner.control({ControlKind::set_speed, 0, 2.0}), Error);
    runner.control({ControlKind::set_speed, 0, 1.0});
    CHECK_THROWS_AS(SessionRunner(short_session(), ClockKind::none), Error);
  }
}
