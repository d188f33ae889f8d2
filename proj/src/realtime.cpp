#include "routeemu/realtime.hpp"

#include <pthread.h>
#include <sched.h>

namespace routeemu {

bool request_realtime_priority() {
  sched_param param{};
  param.sched_priority = sched_get_priority_min(SCHED_FIFO) + 10;
  return pthread_setschedparam(pthread_self(), SCHED_FIFO, &param) == 0;
}

}  // namespace routeemu
