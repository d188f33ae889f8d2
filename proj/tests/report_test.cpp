#include <cmath>

#include "doctest.h"
#include "routeemu/error.hpp"
#include "routeemu/report.hpp"
#include "support.hpp"

using namespace routeemu;

namespace {

std::vector<ProbeReport> series(std::size_t n, double delay, TimeMs start = 0, TimeMs w = 50) {
  std::vector<ProbeReport> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(ProbeReport{start + static_cast<TimeMs>(i) * w, 1'000'000, delay, 0.5, 0.0, 5, 5, false});
  return out;
}

}  // namespace

TEST_SUITE("report") {
  TEST_CASE("identical series join at full length") {
    const auto a = series(10, 32.0);
    const std::vector<ProbeReport> in[] = {a, a, a};
    const auto t = join_reports(in);
    CHECK(t.rows.size() == 10);
    CHECK(t.gaps.empty());
    for (const auto& row : t.rows) CHECK(row.values[0] == row.values[2]);
  }

  TEST_CASE("offset series lose one row") {
    const std::vector<ProbeReport> in[] = {series(10, 32.0), series(10, 32.0, 50)};
    const auto t = join_reports(in);
    CHECK(t.rows.size() == 9);
    CHECK(t.gaps == std::vector<TimeMs>{0, 500});
  }

  TEST_CASE("different report intervals do not join") {
    const std::vector<ProbeReport> in[] = {series(10, 32.0), series(10, 32.0, 0, 100)};
    try {
      join_reports(in);
      FAIL("expected IntervalMismatch");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::interval_mismatch);
    }
  }

  TEST_CASE("equal replays are a tie, not a win") {
    const auto f = series(20, 32.0);
    const auto r = compare(f, f, f);
    CHECK(r.mae_delay_raw_ms == 0.0);
    CHECK(r.mae_delay_corrected_ms == 0.0);
    CHECK(r.mae_throughput_raw_bps == 0.0);
    CHECK(r.tie);
    CHECK_FALSE(r.corrected_tracks_better);
    CHECK(r.congestion_window.start_ms == 0);
    CHECK(r.congestion_window.end_ms == 950);
  }

  TEST_CASE("constant offset inside the window is the raw error") {
    const auto f = series(100, 32.0);
    auto raw = f;
    const TimeWindow w{1000, 2000};
    for (auto& x : raw)
      if (w.contains(x.t_ms)) x.mean_delay_ms += 30.0;
    const auto r = compare(f, raw, f, w);
    CHECK(r.mae_delay_raw_ms == 30.0);
    CHECK(r.rmse_delay_raw_ms == 30.0);
    CHECK(r.mae_delay_corrected_ms == 0.0);
    CHECK(r.corrected_tracks_better);
    CHECK_FALSE(r.tie);
    // 21 of 100 rows carry the offset over the full span.
    CHECK(r.delay_raw_full.mae == doctest::Approx(30.0 * 21 / 100));
  }

  TEST_CASE("congestion window covers all intervals plus a two second tail") {
    const std::vector<CorrectionInterval> iv{{10'000, 11'950, 30, 2, 40}, {4000, 4500, 30, 2, 40}};
    const auto w = congestion_window(iv);
    REQUIRE(w);
    CHECK(w->start_ms == 4000);
    CHECK(w->end_ms == 13'950);
    CHECK_FALSE(congestion_window({}));
  }

  TEST_CASE("plot export has one row per series and metric") {
    const auto f = series(1, 32.0);
    const auto r = compare(f, f, f);
    const auto csv = export_plot_data(r);
    CHECK(csv ==
          "ts_ms,series,metric,value\n"
          "0,field,throughput_kbps,1000.000\n0,field,delay_ms,32.000\n"
          "0,raw,throughput_kbps,1000.000\n0,raw,delay_ms,32.000\n"
          "0,corrected,throughput_kbps,1000.000\n0,corrected,delay_ms,32.000\n");
    CHECK(parse_plot_data(csv).size() == 6);
  }

  TEST_CASE("empty join exports the header only") {
    const auto r = compare(series(3, 1.0), series(3, 1.0, 1000), series(3, 1.0));
    CHECK(r.joined.rows.empty());
    CHECK(export_plot_data(r) == "ts_ms,series,metric,value\n");
  }

  TEST_CASE("plot data parses back at printed precision") {
    testsupport::Gen g(41);
    std::vector<ProbeReport> f, a, b;
    for (TimeMs t = 0; t < 5000; t += 50) {
      f.push_back({t, g.integer(0, 5'000'000), g.real(0, 500), 0, 0, 5, 5, false});
      a.push_back({t, g.integer(0, 5'000'000), g.real(0, 500), 0, 0, 5, 5, false});
      b.push_back({t, g.integer(0, 5'000'000), g.real(0, 500), 0, 0, 5, 5, false});
    }
    const auto r = compare(f, a, b);
    const auto pts = parse_plot_data(export_plot_data(r));
    REQUIRE(pts.size() == r.joined.rows.size() * 6);
    std::size_t k = 0;
    for (const auto& row : r.joined.rows) {
      for (std::size_t s = 0; s < 3; ++s) {
        const auto& thr = pts[k++];
        const auto& delay = pts[k++];
        CHECK(thr.t_ms == row.t_ms);
        CHECK(thr.metric == "throughput_kbps");
        CHECK(std::abs(thr.value - static_cast<double>(row.values[s].throughput_bps) / 1000.0) <= 0.0005 + 1e-9);
        CHECK(delay.metric == "delay_ms");
        CHECK(std::abs(delay.value - row.values[s].mean_delay_ms) <= 0.0005 + 1e-9);
      }
    }
  }

  TEST_CASE("property: MAE is zero on itself and symmetric") {
    testsupport::Gen g(43);
    for (int trial = 0; trial < 300; ++trial) {
      const auto n = static_cast<std::size_t>(g.integer(0, 200));
      std::vector<double> x(n), y(n);
      for (auto& v : x) v = g.real(-1e4, 1e4);
      for (auto& v : y) v = g.real(-1e4, 1e4);
      CHECK(mean_absolute_error(x, x) == 0.0);
      CHECK(mean_absolute_error(x, y) == mean_absolute_error(y, x));
      CHECK(root_mean_square_error(x, y) == root_mean_square_error(y, x));
      CHECK(root_mean_square_error(x, y) >= mean_absolute_error(x, y) - 1e-9);
    }
    CHECK_THROWS_AS(mean_absolute_error(std::vector<double>{1}, std::vector<double>{}), Error);
  }

  TEST_CASE("property: compare is deterministic") {
    testsupport::Gen g(47);
    std::vector<ProbeReport> f, a, b;
    for (TimeMs t = 0; t < 2000; t += 50) {
      f.push_back({t, g.integer(0, 1'000'000), g.real(0, 100), 0, 0, 5, 5, false});
      a.push_back({t, g.integer(0, 1'000'000), g.real(0, 100), 0, 0, 5, 5, false});
      b.push_back({t, g.integer(0, 1'000'000), g.real(0, 100), 0, 0, 5, 5, false});
    }
    const auto r1 = compare(f, a, b, TimeWindow{100, 900});
    const auto r2 = compare(f, a, b, TimeWindow{100, 900});
    CHECK(export_plot_data(r1) == export_plot_data(r2));
    CHECK(r1.mae_delay_raw_ms == r2.mae_delay_raw_ms);
    CHECK(r1.mae_delay_corrected_ms == r2.mae_delay_corrected_ms);
  }
}
