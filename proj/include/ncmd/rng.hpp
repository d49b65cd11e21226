#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>

#include <Eigen/Dense>

namespace ncmd {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

using Engine = std::mt19937_64;

// Deterministic stream derivation: stream `index` of `seed` is seeded with a
// splitmix64 scramble of (seed xor index), so chunk i of a batch never shares
// state with chunk j regardless of which thread draws it.
std::uint64_t splitmix64(std::uint64_t x);
Engine make_stream(std::uint64_t seed, std::uint64_t index);

/// i.i.d. vector draws, one per row, plus the RNG lineage that produced them.
struct SampleBatch {
  Matrix draws;  // n x dim
  std::uint64_t seed = 0;
  std::size_t chunk_size = 0;
  std::string source;

  std::size_t size() const { return static_cast<std::size_t>(draws.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(draws.cols()); }
};

// Draw callback receives two independent engines: a primary stream and an
// auxiliary one (clocks use the auxiliary stream, drivers the primary).
using DrawFn = std::function<Vector(Engine& primary, Engine& auxiliary)>;

inline constexpr std::size_t kDefaultChunk = 4096;

/// Fills an n x dim batch in fixed-size chunks. Chunk c uses streams 2c and
/// 2c+1 of `seed`, so the output is bit-identical for any thread count.
SampleBatch generate_batch(std::size_t n, std::size_t dim, std::uint64_t seed, const DrawFn& draw,
                           std::string source, unsigned threads = 0);

/// Global worker count used when a call passes threads == 0.
void set_default_threads(unsigned threads);
unsigned default_threads();

}  // namespace ncmd
