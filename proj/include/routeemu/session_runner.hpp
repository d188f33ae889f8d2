#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "routeemu/orchestrator.hpp"

namespace routeemu {

struct EventFilter {
  std::set<EventKind> kinds;  // empty = all
  std::string path_id;        // empty = all

  bool matches(const ApiEvent& e) const;
};

/// One subscriber queue. A subscriber that falls more than `capacity` events
/// behind is disconnected instead of slowing the publisher.
class Subscription {
 public:
  Subscription(EventFilter filter, std::size_t capacity);

  /// Next event, or nullopt on timeout or once the stream has ended.
  std::optional<ApiEvent> next(std::chrono::milliseconds timeout);
  bool ended() const;
  bool overflowed() const;
  /// Ends the stream; the bus drops closed subscriptions.
  void close();

 private:
  friend class EventBus;
  friend class SessionRunner;
  void push(const ApiEvent& e);

  EventFilter filter_;
  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<ApiEvent> queue_;
  bool closed_ = false;
  bool overflowed_ = false;
};

class EventBus {
 public:
  explicit EventBus(std::size_t capacity = 8192) : capacity_(capacity) {}

  std::shared_ptr<Subscription> subscribe(EventFilter filter);
  void publish(const ApiEvent& e);
  /// Ends every current stream.
  void close_all();
  std::size_t subscriber_count() const;

 private:
  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::vector<std::shared_ptr<Subscription>> subs_;
};

/// Drives a ReplaySession from a background thread. With the virtual clock the
/// timeline is paced at `speed` times wall rate (deterministic regardless of
/// pacing); with the wall clock replay time is elapsed real time.
class SessionRunner {
 public:
  SessionRunner(ReplaySession session, ClockKind clock);
  ~SessionRunner();

  SessionRunner(const SessionRunner&) = delete;
  SessionRunner& operator=(const SessionRunner&) = delete;

  ReplayState control(const ControlCommand& cmd);
  ReplayState state() const;
  ClockKind clock() const { return clock_; }

  /// Subscribing after the replay finished yields state_change(finished) then
  /// end of stream.
  std::shared_ptr<Subscription> subscribe(EventFilter filter);
  EventBus& bus() { return bus_; }

  /// Wall mode: injects an external packet stamped with the current replay time.
  void submit(std::size_t path, Packet packet);

  bool wait_until(ReplayStatus status, std::chrono::milliseconds timeout) const;

  /// Runs `fn(session)` under the runner lock.
  template <typename Fn>
  auto with_session(Fn&& fn) {
    std::lock_guard lock(mutex_);
    struct Wake {
      std::condition_variable& cv;
      ~Wake() { cv.notify_all(); }
    } wake{cv_};
    return fn(session_);
  }
  template <typename Fn>
  auto with_session(Fn&& fn) const {
    std::lock_guard lock(mutex_);
    return fn(session_);
  }

  void stop();

 private:
  void loop();
  double target_time_locked() const;
  void reanchor_locked();

  ReplaySession session_;
  ClockKind clock_;
  EventBus bus_;
  mutable std::mutex mutex_;
  mutable std::condition_variable cv_;
  std::chrono::steady_clock::time_point wall_anchor_;
  double virtual_anchor_ = 0.0;
  std::atomic<bool> stop_{false};
  std::thread thread_;
};

}  // namespace routeemu
