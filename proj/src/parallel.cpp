#include "topogs/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace topogs {
namespace {

int default_threads() {
  if (const char* env = std::getenv("TOPOGS_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (...) {
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

std::atomic<int>& thread_setting() {
  static std::atomic<int> value{default_threads()};
  return value;
}

}  // namespace

int num_threads() { return thread_setting().load(); }

void set_num_threads(int n) { thread_setting().store(n > 0 ? n : default_threads()); }

}  // namespace topogs
