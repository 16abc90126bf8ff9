#include "hocurve/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace hocurve {

namespace {
std::atomic<int> g_threads{1};
}

int num_threads() { return g_threads.load(); }

void set_num_threads(int n) { g_threads.store(std::max(1, n)); }

void parallel_for(Eigen::Index n,
                  const std::function<void(Eigen::Index, Eigen::Index)>& body) {
  const int nt = static_cast<int>(std::min<Eigen::Index>(num_threads(), n));
  if (nt <= 1) {
    if (n > 0) body(0, n);
    return;
  }
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(nt);
  const Eigen::Index chunk = (n + nt - 1) / nt;
  for (int t = 0; t < nt; ++t) {
    const Eigen::Index b = t * chunk;
    const Eigen::Index e = std::min(n, b + chunk);
    if (b >= e) break;
    workers.emplace_back([&, t, b, e] {
      try {
        body(b, e);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (auto& err : errors)
    if (err) std::rethrow_exception(err);
}

}  // namespace hocurve
