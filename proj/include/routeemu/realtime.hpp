#pragma once

namespace routeemu {

/// Moves the calling thread to SCHED_FIFO when the process is allowed to.
/// Wall-clock relay threads use this to keep timer wakeups tight; returns false
/// and leaves the thread unchanged otherwise.
bool request_realtime_priority();

}  // namespace routeemu
