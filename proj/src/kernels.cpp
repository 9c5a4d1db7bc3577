#include "popfj/kernels.hpp"

#include <thread>

namespace popfj::kernels {

int hardware_jobs() {
  unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

int resolve_jobs(int jobs) { return jobs <= 0 ? hardware_jobs() : jobs; }

}  // namespace popfj::kernels
