#pragma once

#include <functional>
#include <thread>
#include <vector>

namespace domcert {

/// Deterministic chunked map: results are produced per chunk and merged in
/// chunk order, so the outcome does not depend on scheduling.
template <typename Result>
std::vector<Result> parallel_chunks(std::size_t n, int workers,
                                    const std::function<Result(std::size_t, std::size_t)>& run) {
  const int w = std::max(1, workers);
  const std::size_t chunk = (n + w - 1) / std::max<std::size_t>(1, w);
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  for (std::size_t lo = 0; lo < n; lo += chunk) {
    ranges.emplace_back(lo, std::min(n, lo + chunk));
  }
  std::vector<Result> results(ranges.size());
  if (w == 1 || ranges.size() <= 1) {
    for (std::size_t i = 0; i < ranges.size(); ++i) {
      results[i] = run(ranges[i].first, ranges[i].second);
    }
    return results;
  }
  std::vector<std::thread> threads;
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    threads.emplace_back([&, i] { results[i] = run(ranges[i].first, ranges[i].second); });
  }
  for (auto& t : threads) t.join();
  return results;
}

}  // namespace domcert
