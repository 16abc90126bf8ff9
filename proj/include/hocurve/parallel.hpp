#pragma once

#include <Eigen/Core>

#include <functional>

namespace hocurve {

/// Number of worker threads used by element loops. Defaults to 1.
int num_threads();
void set_num_threads(int n);

/// Calls body(begin, end) on contiguous, disjoint ranges covering [0, n).
/// Ranges are fixed by n and the thread count only, so callers that write
/// per-item results and reduce them afterwards in index order get output
/// that does not depend on scheduling.
void parallel_for(Eigen::Index n,
                  const std::function<void(Eigen::Index, Eigen::Index)>& body);

}  // namespace hocurve
