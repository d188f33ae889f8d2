// routeemu: align, correct, replay, compare and serve cellular trace scenarios.

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "routeemu/control_api.hpp"
#include "routeemu/error.hpp"
#include "routeemu/ingest.hpp"
#include "routeemu/json_io.hpp"
#include "routeemu/oracle.hpp"
#include "routeemu/orchestrator.hpp"
#include "routeemu/report.hpp"
#include "routeemu/scenario_pipeline.hpp"
#include "routeemu/session_runner.hpp"
#include "routeemu/tc_script.hpp"
#include "routeemu/udp_proxy.hpp"

namespace fs = std::filesystem;
using namespace routeemu;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitInput = 2;

// Bad input, as opposed to something going wrong while running.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

bool verbose = false;
std::atomic<bool> interrupted{false};

void note(const std::string& msg) {
  if (verbose) std::cerr << msg << "\n";
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::time_regression:
    case ErrorKind::bind_failure:
    case ErrorKind::io_failure:
      return kExitRuntime;
    default:
      return kExitInput;
  }
}

std::string one_line(std::string s) {
  for (auto& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

// reports.csv + "lte0" -> reports_lte0.csv
std::string per_path_file(const std::string& file, const std::string& path_id, std::size_t n_paths) {
  if (n_paths == 1) return file;
  fs::path p(file);
  return (p.parent_path() / (p.stem().string() + "_" + path_id + p.extension().string())).string();
}

void write_events_ndjson(const std::string& file, const std::vector<ApiEvent>& events) {
  std::string out;
  for (const auto& e : events) out += to_json(e).dump() + "\n";
  write_file(file, out);
}

struct Globals {
  std::uint64_t seed = 1;
  bool seed_given = false;
};

// ---------------------------------------------------------------------------

struct AlignArgs {
  std::string positions, net, out, path_id = "path0";
};

int run_align(const AlignArgs& a) {
  const auto pos = scan_position_csv(read_file(a.positions));
  const auto net = scan_net_csv(read_file(a.net));
  bool bad = false;
  auto report = [&](const std::string& file, const std::vector<ParseIssue>& issues) {
    for (const auto& i : issues) {
      std::cerr << file << ":" << i.line << ": " << to_string(i.kind) << ": " << i.reason << "\n";
      bad = true;
    }
  };
  report(a.positions, pos.issues);
  report(a.positions, pos.trace_issues);
  report(a.net, net.issues);
  report(a.net, net.trace_issues);
  if (bad) throw InputError("input traces failed validation");

  if (!positions_overlap(pos.samples, net.samples))
    std::cerr << "warning: position and network traces do not overlap in time; positions are clamped\n";
  const Scenario s = align(pos.samples, net.samples, a.path_id);
  const auto violations = validate_scenario(s);
  for (const auto& v : violations) std::cerr << describe(v) << "\n";
  if (!violations.empty()) throw InputError("aligned scenario failed validation");

  write_file(a.out, write_scenario_csv(s));
  note("wrote " + std::to_string(s.rows.size()) + " rows to " + a.out);
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct CorrectArgs {
  std::string scenario, out, intervals_out;
  double b_th_kbps = 700.0;
  double d_th_ms = 50.0;
  TimeMs t_th_ms = 250;
  TimeMs t_adj_ms = 1000;
};

int run_correct(const CorrectArgs& a) {
  const Scenario s = read_scenario_csv(read_file(a.scenario));
  CorrectionParams p;
  p.b_th_bps = a.b_th_kbps * 1000.0;
  p.d_th_ms = a.d_th_ms;
  p.t_th_ms = a.t_th_ms;
  p.t_adj_ms = a.t_adj_ms;
  const auto result = correct_delay(s, p);
  write_file(a.out, write_scenario_csv(result.scenario));
  if (!a.intervals_out.empty()) write_file(a.intervals_out, to_json(result.intervals).dump(2) + "\n");
  std::cout << result.intervals.size() << " correction interval(s)\n";
  for (const auto& i : result.intervals) {
    char line[160];
    std::snprintf(line, sizeof line, "  [%lld, %lld] ms -> delay %.3f ms, jitter %.3f ms (%zu samples)\n",
                  static_cast<long long>(i.start_ms), static_cast<long long>(i.end_ms), i.replacement_delay_ms,
                  i.replacement_jitter_ms, i.window_sample_count);
    std::cout << line;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct ReplayArgs {
  std::string topology, reports_out, events_out, script_dir = ".", mode;
  bool probe = false;
  bool wall = false;
  TimeMs duration_ms = 30'000;
  double load_kbps = 1000.0;
};

ProbeConfig probe_config(const TopologyConfig& topo, TimeMs duration_ms, double load_kbps, const Globals& g) {
  ProbeConfig cfg = topo.probe.value_or(ProbeConfig{});
  cfg.duration_ms = duration_ms;
  cfg.offered_load_bps = load_kbps * 1000.0;
  if (g.seed_given || !topo.probe) cfg.seed = g.seed;
  validate(cfg);
  return cfg;
}

std::vector<PathSetup> load_seeded_paths(const TopologyConfig& topo, const Globals& g) {
  auto paths = load_paths(topo);
  if (g.seed_given)
    for (std::size_t i = 0; i < paths.size(); ++i) paths[i].link.rng_seed = g.seed + i;
  return paths;
}

void write_reports(const std::string& file, const std::vector<std::string>& ids,
                   const std::vector<std::vector<ProbeReport>>& reports) {
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto name = per_path_file(file, ids[i], ids.size());
    write_file(name, write_probe_csv(reports[i]));
    note("wrote " + std::to_string(reports[i].size()) + " reports to " + name);
  }
}

void summarize(const std::vector<std::string>& ids, const std::vector<std::vector<ProbeReport>>& reports) {
  for (std::size_t i = 0; i < ids.size(); ++i) {
    double thr = 0, delay = 0;
    std::int64_t rx = 0, expected = 0;
    for (const auto& r : reports[i]) {
      thr += static_cast<double>(r.throughput_bps);
      delay += r.mean_delay_ms;
      rx += r.packets_received;
      expected += r.packets_expected;
    }
    const double n = reports[i].empty() ? 1.0 : static_cast<double>(reports[i].size());
    char line[200];
    std::snprintf(line, sizeof line, "%s: %zu intervals, mean %.1f kbps, mean delay %.3f ms, loss %.4f\n",
                  ids[i].c_str(), reports[i].size(), thr / n / 1000.0, delay / n,
                  expected ? 1.0 - static_cast<double>(rx) / static_cast<double>(expected) : 0.0);
    std::cout << line;
  }
}

int run_replay_cmd(const ReplayArgs& a, const Globals& g) {
  const TopologyConfig topo = load_topology(a.topology);
  ReplayMode mode = topo.mode;
  if (a.mode == "simulated") mode = ReplayMode::simulated;
  if (a.mode == "udp-proxy") mode = ReplayMode::udp_proxy;
  if (a.mode == "tc-script") mode = ReplayMode::tc_script;

  if (a.wall && mode == ReplayMode::simulated)
    throw InputError("--wall needs --mode udp-proxy; simulated replays run on the virtual clock");
  if (a.probe && mode == ReplayMode::tc_script)
    throw InputError("--probe is not available in tc-script mode; run the script and measure externally");
  if (a.probe && a.reports_out.empty()) throw InputError("--probe needs --reports-out");

  auto paths = load_seeded_paths(topo, g);
  std::vector<std::string> ids;
  for (const auto& p : paths) ids.push_back(p.path_id);

  if (mode == ReplayMode::tc_script) {
    fs::create_directories(a.script_dir);
    for (std::size_t i = 0; i < paths.size(); ++i) {
      const auto file = (fs::path(a.script_dir) / (paths[i].path_id + ".tc.sh")).string();
      write_file(file, emit_tc_script(paths[i].scenario, topo.paths[i].interface_name, paths[i].link));
      fs::permissions(file, fs::perms::owner_exec | fs::perms::group_exec | fs::perms::others_exec,
                      fs::perm_options::add);
      std::cout << "wrote " << file << "\n";
    }
    return kExitOk;
  }

  if (mode == ReplayMode::simulated) {
    SessionOptions options;
    options.position_stream_hz = topo.position_stream_hz;
    if (a.probe) options.probe = probe_config(topo, a.duration_ms, a.load_kbps, g);
    note("simulated replay of " + std::to_string(paths.size()) + " path(s) on the virtual clock");
    const auto out = run_replay(std::move(paths), options);
    if (!a.events_out.empty()) write_events_ndjson(a.events_out, out.events);
    if (a.probe) {
      std::vector<std::vector<ProbeReport>> reports;
      for (const auto& p : out.paths) reports.push_back(p.reports);
      write_reports(a.reports_out, ids, reports);
      summarize(ids, reports);
    }
    return kExitOk;
  }

  // udp_proxy, wall clock
  if (a.probe) {
    note("live probe replay over loopback relays (wall clock)");
    const auto reports = run_udp_probe_replay(std::move(paths), probe_config(topo, a.duration_ms, a.load_kbps, g),
                                              topo.endpoints.bind_host);
    write_reports(a.reports_out, ids, reports);
    summarize(ids, reports);
    return kExitOk;
  }
  if (topo.endpoints.receiver_port == 0) throw InputError("udp-proxy mode needs endpoints.receiver in the topology");
  std::vector<std::uint16_t> ports;
  for (const auto& p : topo.paths) ports.push_back(p.listen_port);
  SessionOptions options;
  options.position_stream_hz = topo.position_stream_hz;
  SessionRunner runner(ReplaySession(std::move(paths), options), ClockKind::wall);
  auto events = runner.subscribe({});
  UdpProxy proxy(runner, topo.endpoints.bind_host, ports,
                 {UdpEndpoint{topo.endpoints.receiver_host, topo.endpoints.receiver_port}});
  for (std::size_t i = 0; i < ids.size(); ++i)
    std::cout << ids[i] << ": relaying " << topo.endpoints.bind_host << ":" << proxy.port(i) << " -> "
              << topo.endpoints.receiver_host << ":" << topo.endpoints.receiver_port << "\n";
  std::cout.flush();
  runner.control(ControlCommand{ControlKind::start});
  std::vector<ApiEvent> log;
  while (!interrupted) {
    auto e = events->next(std::chrono::milliseconds(100));
    if (e) log.push_back(*e);
    else if (events->ended()) break;
  }
  proxy.stop();
  runner.stop();
  if (!a.events_out.empty()) write_events_ndjson(a.events_out, log);
  std::cout << "forwarded " << proxy.forwarded() << " datagram(s)\n";
  return interrupted ? kExitRuntime : kExitOk;
}

// ---------------------------------------------------------------------------

struct CompareArgs {
  std::string field, raw, corrected, out, plot_out, intervals;
};

int run_compare(const CompareArgs& a) {
  const auto field = read_probe_csv(read_file(a.field));
  const auto raw = read_probe_csv(read_file(a.raw));
  const auto corrected = read_probe_csv(read_file(a.corrected));
  std::optional<TimeWindow> window;
  if (!a.intervals.empty()) {
    const auto intervals = intervals_from_json(nlohmann::json::parse(read_file(a.intervals)));
    window = congestion_window(intervals);
    if (!window) note("no correction intervals; comparing over the full span");
  }
  const auto result = compare(field, raw, corrected, window);
  write_file(a.out, to_json(result).dump(2) + "\n");
  std::string plot = a.plot_out;
  if (plot.empty()) {
    fs::path p(a.out);
    plot = (p.parent_path() / (p.stem().string() + "_plot.csv")).string();
  }
  write_file(plot, export_plot_data(result));

  char line[240];
  std::snprintf(line, sizeof line,
                "window [%lld, %lld] ms: delay MAE raw %.3f ms, corrected %.3f ms -> corrected_tracks_better=%s\n",
                static_cast<long long>(result.congestion_window.start_ms),
                static_cast<long long>(result.congestion_window.end_ms), result.mae_delay_raw_ms,
                result.mae_delay_corrected_ms, result.corrected_tracks_better ? "true" : "false");
  std::cout << line;
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct OracleArgs {
  std::string out_dir;
};

int run_oracle_cmd(const OracleArgs& a, const Globals& g) {
  OracleConfig cfg;
  cfg.seed = g.seed;
  cfg.probe.seed = g.seed;
  const auto t0 = std::chrono::steady_clock::now();
  const auto result = run_oracle(cfg);
  write_oracle_outputs(result, a.out_dir);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto& c = result.comparison;
  char line[300];
  std::snprintf(line, sizeof line,
                "%zu interval(s); window [%lld, %lld] ms; delay MAE raw %.3f ms, corrected %.3f ms; "
                "corrected_tracks_better=%s (%.2f s)\n",
                result.intervals.size(), static_cast<long long>(c.congestion_window.start_ms),
                static_cast<long long>(c.congestion_window.end_ms), c.mae_delay_raw_ms, c.mae_delay_corrected_ms,
                c.corrected_tracks_better ? "true" : "false", secs);
  std::cout << line;
  note("artifacts in " + a.out_dir);
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct ServeArgs {
  std::string topology, bind = "127.0.0.1:8080";
  bool probe = false;
  TimeMs duration_ms = 30'000;
  double load_kbps = 1000.0;
};

void on_signal(int) { interrupted = true; }

int run_serve(const ServeArgs& a, const Globals& g) {
  const TopologyConfig topo = load_topology(a.topology);
  if (topo.mode == ReplayMode::tc_script) throw InputError("tc_script topologies have no live session to serve");
  const auto bind = parse_endpoint(a.bind);

  SessionOptions options;
  options.position_stream_hz = topo.position_stream_hz;
  if (a.probe || topo.probe) {
    if (topo.mode == ReplayMode::udp_proxy) throw InputError("the in-process probe runs in simulated mode only");
    options.probe = probe_config(topo, a.probe ? a.duration_ms : topo.probe->duration_ms,
                                 a.probe ? a.load_kbps : topo.probe->offered_load_bps / 1000.0, g);
  }

  std::optional<ComparisonResult> comparison;
  if (topo.comparison) {
    const auto& c = *topo.comparison;
    std::optional<TimeWindow> window;
    if (!c.intervals.empty())
      window = congestion_window(intervals_from_json(nlohmann::json::parse(read_file(resolve_path(topo, c.intervals)))));
    comparison = compare(read_probe_csv(read_file(resolve_path(topo, c.field))),
                         read_probe_csv(read_file(resolve_path(topo, c.raw))),
                         read_probe_csv(read_file(resolve_path(topo, c.corrected))), window);
  }

  SessionRunner runner(ReplaySession(load_seeded_paths(topo, g), options), topo.clock);
  std::unique_ptr<UdpProxy> proxy;
  if (topo.mode == ReplayMode::udp_proxy) {
    std::vector<std::uint16_t> ports;
    for (const auto& p : topo.paths) ports.push_back(p.listen_port);
    proxy = std::make_unique<UdpProxy>(runner, topo.endpoints.bind_host, ports,
                                       std::vector{UdpEndpoint{topo.endpoints.receiver_host,
                                                               topo.endpoints.receiver_port}});
  }

  ControlServer server(runner, comparison);
  const int port = server.start(bind.host, bind.port);
  std::cout << "listening on http://" << bind.host << ":" << port << " (" << to_string(topo.mode) << ", "
            << to_string(topo.clock) << " clock)" << std::endl;

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  note("shutting down");
  server.stop();
  if (proxy) proxy->stop();
  runner.stop();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trace-driven cellular link replay: align, correct, replay, compare, serve"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "RNG seed for loss/jitter draws and the probe")->default_val(1);
  app.add_flag("-v,--verbose", verbose, "Progress messages on stderr");

  AlignArgs align_args;
  auto* align_cmd = app.add_subcommand("align", "Fuse a 1 Hz position trace and a network trace into a scenario");
  align_cmd->add_option("--positions", align_args.positions, "Position CSV (ts_ms,lat,lon)")->required();
  align_cmd->add_option("--net", align_args.net, "Network CSV (ts_ms,throughput_kbps,delay_ms,jitter_ms,loss_rate)")
      ->required();
  align_cmd->add_option("--out", align_args.out, "Scenario CSV to write")->required();
  align_cmd->add_option("--path-id", align_args.path_id, "Path id stored in the scenario")->capture_default_str();

  CorrectArgs correct_args;
  auto* correct_cmd = app.add_subcommand("correct", "Remove double-counted queuing delay from a scenario");
  correct_cmd->add_option("--scenario", correct_args.scenario, "Scenario CSV")->required();
  correct_cmd->add_option("--b-th", correct_args.b_th_kbps, "Throughput threshold in kbps (flag below)")
      ->capture_default_str();
  correct_cmd->add_option("--d-th", correct_args.d_th_ms, "Delay threshold in ms (flag above)")->capture_default_str();
  correct_cmd->add_option("--t-th", correct_args.t_th_ms, "Minimum run length in ms")->capture_default_str();
  correct_cmd->add_option("--t-adj", correct_args.t_adj_ms, "Averaging window before/after each run in ms")
      ->capture_default_str();
  correct_cmd->add_option("--out", correct_args.out, "Corrected scenario CSV")->required();
  correct_cmd->add_option("--intervals-out", correct_args.intervals_out, "Correction intervals JSON");

  ReplayArgs replay_args;
  auto* replay_cmd = app.add_subcommand("replay", "Replay the scenarios of a topology");
  replay_cmd->add_option("--topology", replay_args.topology, "Topology JSON")->required();
  replay_cmd->add_flag("--probe", replay_args.probe, "Measure each path with a CBR probe");
  replay_cmd->add_option("--duration", replay_args.duration_ms, "Probe duration in ms (clipped to the scenario)")
      ->capture_default_str();
  replay_cmd->add_option("--load", replay_args.load_kbps, "Probe offered load in kbps")->capture_default_str();
  replay_cmd->add_option("--reports-out", replay_args.reports_out,
                         "Probe report CSV; with several paths, one file per path with _<path_id> appended");
  replay_cmd->add_option("--events-out", replay_args.events_out, "Event log as NDJSON");
  replay_cmd->add_option("--mode", replay_args.mode, "Override the topology mode")
      ->check(CLI::IsMember({"simulated", "udp-proxy", "tc-script"}));
  replay_cmd->add_flag("--wall", replay_args.wall, "Run on the wall clock (udp-proxy only)");
  replay_cmd->add_option("--script-dir", replay_args.script_dir, "Output directory for tc scripts")
      ->capture_default_str();

  CompareArgs compare_args;
  auto* compare_cmd = app.add_subcommand("compare", "Score raw and corrected replays against field reports");
  compare_cmd->add_option("--field", compare_args.field, "Field probe reports CSV")->required();
  compare_cmd->add_option("--raw", compare_args.raw, "Raw-scenario replay reports CSV")->required();
  compare_cmd->add_option("--corrected", compare_args.corrected, "Corrected-scenario replay reports CSV")->required();
  compare_cmd->add_option("--out", compare_args.out, "Comparison JSON")->required();
  compare_cmd->add_option("--plot-out", compare_args.plot_out, "Plot CSV (default: <out stem>_plot.csv)");
  compare_cmd->add_option("--intervals", compare_args.intervals,
                          "Correction intervals JSON; errors are then scored over the congestion window");

  OracleArgs oracle_args;
  auto* oracle_cmd = app.add_subcommand("oracle", "Run the synthetic capacity-dip pipeline end to end");
  oracle_cmd->add_option("--out-dir", oracle_args.out_dir, "Directory for all artifacts")->required();

  ServeArgs serve_args;
  auto* serve_cmd = app.add_subcommand("serve", "Serve the HTTP control API for a topology");
  serve_cmd->add_option("--topology", serve_args.topology, "Topology JSON")->required();
  serve_cmd->add_option("--bind", serve_args.bind, "host:port (port 0 picks one)")->capture_default_str();
  serve_cmd->add_flag("--probe", serve_args.probe, "Attach a CBR probe to every path");
  serve_cmd->add_option("--duration", serve_args.duration_ms, "Probe duration in ms")->capture_default_str();
  serve_cmd->add_option("--load", serve_args.load_kbps, "Probe offered load in kbps")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << one_line(e.what()) << "\n";
    return kExitInput;
  }
  g.seed_given = app.count("--seed") > 0;

  try {
    if (*align_cmd) return run_align(align_args);
    if (*correct_cmd) return run_correct(correct_args);
    if (*replay_cmd) return run_replay_cmd(replay_args, g);
    if (*compare_cmd) return run_compare(compare_args);
    if (*oracle_cmd) return run_oracle_cmd(oracle_args, g);
    if (*serve_cmd) return run_serve(serve_args, g);
  } catch (const InputError& e) {
    std::cerr << "error: " << one_line(e.what()) << "\n";
    return kExitInput;
  } catch (const Error& e) {
    std::cerr << "error: " << one_line(e.what()) << "\n";
    return exit_code_for(e.kind());
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << one_line(e.what()) << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << one_line(e.what()) << "\n";
    return kExitRuntime;
  }
  return kExitRuntime;
}
