#include "compbench/parallel.hpp"

#include <cstdlib>
#include <string>

namespace compbench {

unsigned worker_count() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("COMPBENCH_THREADS")) {
    try {
      const long cap = std::stol(env);
      if (cap >= 1) return std::min<unsigned>(hw, static_cast<unsigned>(cap));
    } catch (const std::exception&) {
      // Unparseable values fall back to the hardware count.
    }
  }
  return hw;
}

}  // namespace compbench
