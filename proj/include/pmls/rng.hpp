#pragma once

#include <cstdint>
#include <limits>
#include <vector>

namespace pmls {

// Philox4x32-10 counter-based generator. Substreams are addressed by the
// stream word of the counter, so (seed, stream) pairs give independent,
// bit-reproducible sequences.
class Philox4x32 {
 public:
  using result_type = uint32_t;

  explicit Philox4x32(uint64_t seed, uint64_t stream = 0);

  result_type operator()();

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  static const char* name() { return "philox4x32-10"; }

 private:
  void next_block();

  uint32_t key_[2];
  uint32_t counter_[4];
  uint32_t block_[4];
  int pos_;
};

// uniform in [0,1), 53-bit resolution
double uniform_double(Philox4x32& rng);
// uniform integer in [0, bound)
uint64_t uniform_below(Philox4x32& rng, uint64_t bound);
// standard normal via Box-Muller
double standard_normal(Philox4x32& rng);

template <typename T>
void shuffle_inplace(std::vector<T>& v, Philox4x32& rng) {
  for (size_t i = v.size(); i > 1; --i) {
    size_t j = static_cast<size_t>(uniform_below(rng, i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace pmls
