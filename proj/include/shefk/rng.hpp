#pragma once

#include <cstdint>
#include <random>

namespace shefk {

/// Independent purpose tags for random streams. A stream is identified by
/// (seed, role, index, sub) so that results never depend on how work is
/// split across threads.
enum class StreamRole : std::uint64_t {
    brownian = 1,
    noise = 2,
    conditioning = 3,
    simplex = 4,
    expansion = 5,
};

class RngStream {
public:
    RngStream(std::uint64_t seed, StreamRole role, std::uint64_t index, std::uint64_t sub = 0);

    double normal() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }
    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace shefk
