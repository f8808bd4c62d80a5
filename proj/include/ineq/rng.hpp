#ifndef INEQ_RNG_HPP
#define INEQ_RNG_HPP

#include <cstdint>
#include <limits>

namespace ineq {

inline constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based generator: the n-th output is a keyed hash of n, so any
// substream can be addressed directly without advancing a shared state.
// Substreams are derived from (seed, stream ids) and are independent of
// the order in which they are consumed.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t seed = 0) noexcept
      : key_lo_(mix64(seed)), key_hi_(mix64(seed ^ 0x5851f42d4c957f2dULL)) {}

  CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept
      : CounterRng(mix64(seed) ^ mix64(stream + 0x632be59bd9b4e019ULL)) {}

  CounterRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream) noexcept
      : CounterRng(mix64(seed) ^ mix64(stream + 0x632be59bd9b4e019ULL),
                   substream) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
    std::uint64_t c = counter_++;
    return mix64(mix64(c ^ key_lo_) + key_hi_);
  }

  // Child stream keyed on this generator's key; does not consume outputs.
  CounterRng substream(std::uint64_t id) const noexcept {
    return CounterRng(key_lo_ ^ mix64(key_hi_ + id));
  }

  std::uint64_t counter() const noexcept { return counter_; }

  double uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

 private:
  std::uint64_t key_lo_;
  std::uint64_t key_hi_;
  std::uint64_t counter_ = 0;
};

}  // namespace ineq

#endif
