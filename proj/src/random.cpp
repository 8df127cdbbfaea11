#include "fibrescan/random.hpp"

#include <random>

namespace fibrescan {

namespace {

constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream) noexcept
    : key_(mix64(mix64(seed + kGamma) ^ mix64(stream + 2 * kGamma))) {}

RandomStream RandomStream::split(std::uint64_t index) const noexcept {
  return RandomStream(Key{mix64(key_ ^ mix64(index + 3 * kGamma)) + kGamma});
}

RandomStream RandomStream::split(std::string_view name) const noexcept {
  return RandomStream(Key{mix64(key_ ^ mix64(fnv1a(name))) + 5 * kGamma});
}

RandomStream::result_type RandomStream::operator()() noexcept {
  ++counter_;
  return mix64(key_ + counter_ * kGamma);
}

double RandomStream::uniform() noexcept {
  return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

std::uint64_t RandomStream::poisson(double mean) {
  if (mean <= 0.0) return 0;
  std::poisson_distribution<std::uint64_t> dist(mean);
  return dist(*this);
}

}  // namespace fibrescan
