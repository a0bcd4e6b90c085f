// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License

#ifndef HOTSTREAK_COMMON_HPP
#define HOTSTREAK_COMMON_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace hotstreak {

inline constexpr const char* kToolName = "hotstreak";
inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kFormatVersion = 1;

inline constexpr std::int64_t kSecondsPerWeek = 604800;

// Base of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition on arguments was violated (k > N, empty series, ...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// A career or record is malformed (non-monotone timestamps, bad indices).
class StructuralError : public Error {
 public:
  using Error::Error;
};

// Not enough data to compute a statistic.
class InsufficientData : public Error {
 public:
  using Error::Error;
};

// The requested view of the data does not exist (window crosses a career
// boundary, no retweeter data, ...).
class Unavailable : public Error {
 public:
  using Error::Error;
};

// Input could not be parsed.
class ParseError : public Error {
 public:
  using Error::Error;
};

// FNV-1a, 64 bit. Stable across platforms, unlike std::hash.
constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Per-user seed derived from a master seed, independent of processing order.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view user_id) {
  return splitmix64(master ^ splitmix64(fnv1a(user_id)));
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(master ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

}  // namespace hotstreak

#endif  // HOTSTREAK_COMMON_HPP
