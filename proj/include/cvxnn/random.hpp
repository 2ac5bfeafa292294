#pragma once

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

#include <cstdint>
#include <initializer_list>

namespace cvxnn {

using Engine = boost::random::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seedable source of independent engines. stream({a, b, ...}) always yields the same
/// engine for the same seed and path, so work can be split across threads or
/// replayed piecemeal without changing any draw.
class StreamFactory {
 public:
  explicit StreamFactory(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  Engine stream(std::initializer_list<std::uint64_t> path) const {
    std::uint64_t h = splitmix64(seed_);
    for (std::uint64_t part : path) h = splitmix64(h ^ splitmix64(part + 0x632be59bd9b4e019ULL));
    return Engine(h);
  }

 private:
  std::uint64_t seed_;
};

// Boost's ziggurat sampler produces the same sequence on every platform, unlike
// std::normal_distribution.
inline double standard_normal(Engine& engine) {
  boost::random::normal_distribution<double> dist(0.0, 1.0);
  return dist(engine);
}

inline double uniform(Engine& engine, double lo, double hi) {
  boost::random::uniform_01<double> dist;
  return lo + (hi - lo) * dist(engine);
}

}  // namespace cvxnn
