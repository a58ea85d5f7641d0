#include "shefk/rng.hpp"

namespace shefk {

namespace {

std::uint32_t lo(std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); }
std::uint32_t hi(std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); }

std::mt19937_64 make_engine(std::uint64_t seed, StreamRole role, std::uint64_t index, std::uint64_t sub) {
    const auto r = static_cast<std::uint64_t>(role);
    std::seed_seq seq{lo(seed), hi(seed), lo(r), lo(index), hi(index), lo(sub), hi(sub)};
    return std::mt19937_64(seq);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, StreamRole role, std::uint64_t index, std::uint64_t sub)
    : engine_(make_engine(seed, role, index, sub)) {}

}  // namespace shefk
