#include "routeemu/session_runner.hpp"

#include <algorithm>

#include "routeemu/error.hpp"
#include "routeemu/realtime.hpp"

namespace routeemu {

bool EventFilter::matches(const ApiEvent& e) const {
  if (!kinds.empty() && !kinds.contains(e.kind)) return false;
  // Path filters never hide session-wide events.
  if (!path_id.empty() && !e.path_id.empty() && e.path_id != path_id) return false;
  return true;
}

Subscription::Subscription(EventFilter filter, std::size_t capacity) : filter_(std::move(filter)), capacity_(capacity) {}

void Subscription::push(const ApiEvent& e) {
  {
    std::lock_guard lock(mutex_);
    if (closed_) return;
    if (queue_.size() >= capacity_) {
      overflowed_ = true;
      closed_ = true;
    } else {
      queue_.push_back(e);
    }
  }
  cv_.notify_all();
}

void Subscription::close() {
  {
    std::lock_guard lock(mutex_);
    closed_ = true;
  }
  cv_.notify_all();
}

std::optional<ApiEvent> Subscription::next(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mutex_);
  cv_.wait_for(lock, timeout, [&] { return !queue_.empty() || closed_; });
  if (queue_.empty()) return std::nullopt;
  ApiEvent e = std::move(queue_.front());
  queue_.pop_front();
  return e;
}

bool Subscription::ended() const {
  std::lock_guard lock(mutex_);
  return closed_ && queue_.empty();
}

bool Subscription::overflowed() const {
  std::lock_guard lock(mutex_);
  return overflowed_;
}

std::shared_ptr<Subscription> EventBus::subscribe(EventFilter filter) {
  auto sub = std::make_shared<Subscription>(std::move(filter), capacity_);
  std::lock_guard lock(mutex_);
  subs_.push_back(sub);
  return sub;
}

void EventBus::publish(const ApiEvent& e) {
  std::lock_guard lock(mutex_);
  std::erase_if(subs_, [](const std::shared_ptr<Subscription>& s) {
    std::lock_guard l(s->mutex_);
    return s->closed_;
  });
  for (const auto& s : subs_)
    if (s->filter_.matches(e)) s->push(e);
}

void EventBus::close_all() {
  std::lock_guard lock(mutex_);
  for (const auto& s : subs_) s->close();
  subs_.clear();
}

std::size_t EventBus::subscriber_count() const {
  std::lock_guard lock(mutex_);
  return subs_.size();
}

// ---------------------------------------------------------------------------

SessionRunner::SessionRunner(ReplaySession session, ClockKind clock) : session_(std::move(session)), clock_(clock) {
  if (clock_ == ClockKind::none) throw Error(ErrorKind::invalid_argument, "a live session needs a clock");
  session_.set_event_handler([this](const ApiEvent& e) {
    bus_.publish(e);
    if (e.kind == EventKind::state_change) {
      if (std::get<ReplayStatus>(e.payload) == ReplayStatus::finished) bus_.close_all();
      cv_.notify_all();
    }
  });
  reanchor_locked();
  thread_ = std::thread([this] { loop(); });
}

SessionRunner::~SessionRunner() { stop(); }

void SessionRunner::stop() {
  stop_ = true;
  cv_.notify_all();
  if (thread_.joinable()) thread_.join();
}

void SessionRunner::reanchor_locked() {
  wall_anchor_ = std::chrono::steady_clock::now();
  virtual_anchor_ = session_.now();
}

double SessionRunner::target_time_locked() const {
  const double elapsed =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - wall_anchor_).count();
  const double speed = clock_ == ClockKind::wall ? 1.0 : session_.state().speed;
  return virtual_anchor_ + elapsed * speed;
}

void SessionRunner::loop() {
  if (clock_ == ClockKind::wall) request_realtime_priority();
  std::unique_lock lock(mutex_);
  constexpr auto kMaxIdle = std::chrono::milliseconds(20);
  while (!stop_) {
    if (session_.status() != ReplayStatus::running) {
      cv_.wait_for(lock, kMaxIdle);
      continue;
    }
    session_.advance_to(target_time_locked());
    // Sleep until the next due event; submit() and control() wake the loop early.
    const double speed = clock_ == ClockKind::wall ? 1.0 : session_.state().speed;
    const double ahead_ms = (session_.next_event_ms() - virtual_anchor_) / speed;
    auto due = wall_anchor_ + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                  std::chrono::duration<double, std::milli>(ahead_ms));
    due = std::min(due, std::chrono::steady_clock::now() + kMaxIdle);
    cv_.wait_until(lock, due);
  }
}

ReplayState SessionRunner::control(const ControlCommand& cmd) {
  std::lock_guard lock(mutex_);
  if (clock_ == ClockKind::wall && cmd.kind == ControlKind::set_speed && cmd.speed != 1.0)
    throw Error(ErrorKind::invalid_argument, "playback speed is fixed at 1 on the wall clock");
  if (session_.status() == ReplayStatus::running) session_.advance_to(target_time_locked());
  auto state = session_.control(cmd);
  reanchor_locked();
  cv_.notify_all();
  return state;
}

ReplayState SessionRunner::state() const {
  std::lock_guard lock(mutex_);
  return session_.state();
}

std::shared_ptr<Subscription> SessionRunner::subscribe(EventFilter filter) {
  std::lock_guard lock(mutex_);
  auto sub = bus_.subscribe(std::move(filter));
  if (session_.status() == ReplayStatus::finished) {
    sub->push(ApiEvent{session_.now(), EventKind::state_change, {}, ReplayStatus::finished});
    sub->close();
  }
  return sub;
}

void SessionRunner::submit(std::size_t path, Packet packet) {
  std::lock_guard lock(mutex_);
  packet.ingress_ts_ms = target_time_locked();
  session_.submit(path, std::move(packet));
  cv_.notify_all();
}

bool SessionRunner::wait_until(ReplayStatus status, std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mutex_);
  return cv_.wait_for(lock, timeout, [&] { return session_.status() == status; });
}

}  // namespace routeemu
