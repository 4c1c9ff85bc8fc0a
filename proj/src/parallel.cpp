#include "conseg/parallel.hpp"

#include "conseg/error.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <thread>
#include <vector>

namespace conseg {

unsigned worker_count() {
  unsigned requested = 0;
  if (const char* env = std::getenv("CONSEG_THREADS"); env != nullptr && *env != '\0') {
    const char* last = env + std::strlen(env);
    const auto [ptr, ec] = std::from_chars(env, last, requested);
    if (ec != std::errc() || ptr != last) {
      throw ValidationError(std::string("CONSEG_THREADS must be a non-negative integer, got '") +
                            env + "'");
    }
  }
  if (requested == 0) requested = std::max(1u, std::thread::hardware_concurrency());
  return requested;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(worker_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = n * w / workers;
    const std::size_t end = n * (w + 1) / workers;
    threads.emplace_back([&, w, begin, end] {
      try {
        for (std::size_t i = begin; i < end; ++i) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace conseg
