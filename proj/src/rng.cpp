#include "ncmd/rng.hpp"

#include <algorithm>
#include <atomic>
#include <stdexcept>
#include <thread>
#include <vector>

namespace ncmd {

namespace {
std::atomic<unsigned> g_default_threads{1};
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Engine make_stream(std::uint64_t seed, std::uint64_t index) {
  return Engine(splitmix64(seed ^ splitmix64(index)));
}

void set_default_threads(unsigned threads) { g_default_threads = std::max(1u, threads); }

unsigned default_threads() { return g_default_threads; }

SampleBatch generate_batch(std::size_t n, std::size_t dim, std::uint64_t seed, const DrawFn& draw,
                           std::string source, unsigned threads) {
  if (n == 0) throw std::invalid_argument("generate_batch: n must be >= 1");
  SampleBatch batch;
  batch.draws.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  batch.seed = seed;
  batch.chunk_size = kDefaultChunk;
  batch.source = std::move(source);

  const std::size_t chunks = (n + kDefaultChunk - 1) / kDefaultChunk;
  auto run_chunk = [&](std::size_t c) {
    Engine primary = make_stream(seed, 2 * c);
    Engine auxiliary = make_stream(seed, 2 * c + 1);
    const std::size_t lo = c * kDefaultChunk;
    const std::size_t hi = std::min(n, lo + kDefaultChunk);
    for (std::size_t i = lo; i < hi; ++i) {
      Vector v = draw(primary, auxiliary);
      if (static_cast<std::size_t>(v.size()) != dim)
        throw std::logic_error("generate_batch: draw has wrong dimension");
      batch.draws.row(static_cast<Eigen::Index>(i)) = v.transpose();
    }
  };

  unsigned workers = threads == 0 ? default_threads() : threads;
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, chunks));
  if (workers <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) run_chunk(c);
    return batch;
  }

  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t c = next++; c < chunks; c = next++) run_chunk(c);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return batch;
}

}  // namespace ncmd
