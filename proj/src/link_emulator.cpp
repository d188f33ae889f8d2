#include "routeemu/link_emulator.hpp"

#include <algorithm>
#include <cmath>

#include "routeemu/error.hpp"

namespace routeemu {

namespace {

constexpr std::uint64_t kJitterStream = 0x9E3779B97F4A7C15ULL;

void check_params(const LinkParams& p) {
  if (std::isnan(p.rate_bps) || p.rate_bps < 0.0)
    throw Error(ErrorKind::invalid_argument, "rate_bps must be >= 0");
  if (!std::isfinite(p.base_delay_ms) || p.base_delay_ms < 0.0)
    throw Error(ErrorKind::invalid_argument, "base_delay_ms must be >= 0");
  if (!std::isfinite(p.jitter_ms) || p.jitter_ms < 0.0)
    throw Error(ErrorKind::invalid_argument, "jitter_ms must be >= 0");
  if (!(p.loss_rate >= 0.0 && p.loss_rate <= 1.0))
    throw Error(ErrorKind::invalid_argument, "loss_rate must be in [0, 1]");
}

}  // namespace

LinkParams params_from_row(const ScenarioRow& row) {
  return LinkParams{static_cast<double>(row.throughput_bps), row.delay_ms, row.jitter_ms, row.loss_rate};
}

double LinkConfig::effective_queue_capacity(double rate_bps) const {
  if (queue_capacity_bytes) return *queue_capacity_bytes;
  if (std::isinf(rate_bps)) return std::numeric_limits<double>::infinity();
  return std::max(rate_bps / 8.0 * 0.5, 10.0 * mtu_bytes);
}

double LinkConfig::effective_bucket_depth(double rate_bps) const {
  if (bucket_depth_bytes) return *bucket_depth_bytes;
  if (std::isinf(rate_bps)) return std::numeric_limits<double>::infinity();
  return std::max(static_cast<double>(mtu_bytes), rate_bps / 8.0 * 0.010);
}

Link::Link(LinkConfig config, LinkParams initial)
    : config_(std::move(config)),
      params_(initial),
      now_(-std::numeric_limits<double>::infinity()),
      loss_rng_(config_.rng_seed),
      jitter_rng_(config_.rng_seed ^ kJitterStream) {
  check_params(params_);
  capacity_bytes_ = config_.effective_queue_capacity(params_.rate_bps);
}

void Link::check_time(double t_ms) const {
  if (std::isnan(t_ms) || t_ms < now_)
    throw Error(ErrorKind::time_regression,
                "event at " + std::to_string(t_ms) + " ms precedes link time " + std::to_string(now_) + " ms");
}

double Link::head_finish() const {
  const double rate = params_.rate_bps;
  if (std::isinf(rate)) return head_start_ms_;
  if (rate <= 0.0) return std::numeric_limits<double>::infinity();
  return head_start_ms_ + head_remaining_bits_ * 1000.0 / rate;
}

void Link::start_service(double t_ms) {
  head_start_ms_ = t_ms;
  head_remaining_bits_ = queue_.front().size_bytes * 8.0;
}

void Link::advance(double t_ms) {
  while (!queue_.empty()) {
    const double finish = head_finish();
    if (finish > t_ms) break;
    Packet done = std::move(queue_.front());
    queue_.pop_front();
    queued_bytes_ -= done.size_bytes;
    release(std::move(done), finish);
    if (!queue_.empty()) start_service(std::max(finish, queue_.front().ingress_ts_ms));
  }
}

void Link::release(Packet packet, double departure_ms) {
  double t = departure_ms + params_.base_delay_ms;
  if (params_.jitter_ms > 0.0) {
    std::uniform_real_distribution<double> jitter(-params_.jitter_ms, params_.jitter_ms);
    t += jitter(jitter_rng_);
  }
  t = std::max({t, departure_ms, last_release_ms_});
  last_release_ms_ = t;
  pending_.emplace(t, EgressEvent{std::move(packet), t, false, DropReason::none});
}

void Link::set_params(double t_ms, const LinkParams& params) {
  check_time(t_ms);
  check_params(params);
  advance(t_ms);
  now_ = t_ms;
  if (params == params_) return;
  if (!queue_.empty()) {
    // Bits already served at the old rate stay served; the rest go at the new rate.
    const double old_rate = params_.rate_bps;
    if (std::isfinite(old_rate) && old_rate > 0.0 && t_ms > head_start_ms_) {
      head_remaining_bits_ = std::max(0.0, head_remaining_bits_ - (t_ms - head_start_ms_) * old_rate / 1000.0);
    }
    head_start_ms_ = std::max(head_start_ms_, t_ms);
  }
  params_ = params;
  capacity_bytes_ = config_.effective_queue_capacity(params_.rate_bps);
  advance(t_ms);
}

std::optional<EgressEvent> Link::ingress(Packet packet) {
  if (packet.size_bytes < 1) throw Error(ErrorKind::invalid_argument, "packet size must be >= 1 byte");
  const double t = packet.ingress_ts_ms;
  check_time(t);
  advance(t);
  now_ = t;

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const bool lost = unit(loss_rng_) < params_.loss_rate;
  std::optional<DropReason> drop;
  if (lost) {
    drop = DropReason::loss_draw;
  } else if (queued_bytes_ + packet.size_bytes > capacity_bytes_) {
    drop = DropReason::queue_full;
  }
  if (drop) {
    EgressEvent ev{std::move(packet), t, true, *drop};
    pending_.emplace(t, ev);
    return ev;
  }

  queued_bytes_ += packet.size_bytes;
  queue_.push_back(std::move(packet));
  if (queue_.size() == 1) start_service(t);
  advance(t);
  return std::nullopt;
}

double Link::next_event_ms() const {
  double t = pending_.empty() ? std::numeric_limits<double>::infinity() : pending_.begin()->first;
  if (!queue_.empty()) t = std::min(t, head_finish() + params_.base_delay_ms - params_.jitter_ms);
  return t;
}

std::vector<EgressEvent> Link::run_until(double t_ms) {
  check_time(t_ms);
  advance(t_ms);
  now_ = t_ms;
  std::vector<EgressEvent> out;
  auto it = pending_.begin();
  for (; it != pending_.end() && it->first <= t_ms; ++it) out.push_back(std::move(it->second));
  pending_.erase(pending_.begin(), it);
  return out;
}

void Link::reset(double t_ms, const LinkParams& params) {
  check_params(params);
  queue_.clear();
  queued_bytes_ = 0.0;
  pending_.clear();
  last_release_ms_ = -std::numeric_limits<double>::infinity();
  params_ = params;
  capacity_bytes_ = config_.effective_queue_capacity(params_.rate_bps);
  now_ = t_ms;
  loss_rng_.seed(config_.rng_seed);
  jitter_rng_.seed(config_.rng_seed ^ kJitterStream);
}

std::vector<EgressEvent> drive_from_scenario(Link& link, const Scenario& s, std::vector<Packet> packets,
                                             DriveOptions options) {
  std::stable_sort(packets.begin(), packets.end(),
                   [](const Packet& a, const Packet& b) { return a.ingress_ts_ms < b.ingress_ts_ms; });
  std::vector<EgressEvent> events;
  auto collect = [&](double t) {
    auto batch = link.run_until(t);
    std::move(batch.begin(), batch.end(), std::back_inserter(events));
  };

  std::size_t row = 0;
  double horizon = static_cast<double>(s.end_ms());
  for (auto& p : packets) {
    // Rows at the same instant as a packet apply before it.
    while (row < s.rows.size() && static_cast<double>(s.rows[row].t_ms) <= p.ingress_ts_ms) {
      link.set_params(static_cast<double>(s.rows[row].t_ms), params_from_row(s.rows[row]));
      ++row;
    }
    horizon = std::max(horizon, p.ingress_ts_ms);
    link.ingress(std::move(p));
  }
  for (; row < s.rows.size(); ++row)
    link.set_params(static_cast<double>(s.rows[row].t_ms), params_from_row(s.rows[row]));
  collect(horizon + options.drain_ms);
  return events;
}

}  // namespace routeemu
