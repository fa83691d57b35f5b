#include "birdxfer/error.hpp"

#include <atomic>
#include <cstdio>
#include <mutex>

namespace birdxfer {
namespace {
std::atomic<bool> g_muted{false};
std::mutex g_log_mutex;
}  // namespace

void warn(const std::string& msg) {
  if (g_muted.load()) return;
  std::lock_guard lock(g_log_mutex);
  std::fprintf(stderr, "warning: %s\n", msg.c_str());
}

void set_warnings_muted(bool muted) { g_muted.store(muted); }

}  // namespace birdxfer
