#pragma once

#include <cstdint>

namespace overlap {

/// Counter-based random stream: draw j of stream (seed, replication, stream_id)
/// is a pure function of the tuple. Replications can therefore be generated in
/// any order, or in parallel, and always reproduce bit-identically.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed, std::uint64_t replication = 0,
                          std::uint64_t stream_id = 0)
        : base_(derive_base(seed, replication, stream_id)) {}

    std::uint64_t next_u64() { return mix(base_ + (++counter_) * kGolden); }

    /// Uniform on the open interval (0,1); never returns 0 or 1.
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

private:
    static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

    // splitmix64 finalizer
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    static std::uint64_t derive_base(std::uint64_t seed, std::uint64_t rep,
                                     std::uint64_t stream_id) {
        return mix(mix(seed + kGolden) ^ mix(rep + 0xA5A5A5A5A5A5A5A5ULL) ^
                   mix(stream_id + 0x0123456789ABCDEFULL));
    }

    std::uint64_t base_;
    std::uint64_t counter_ = 0;
};

// Stream ids used by the simulator; kept distinct so that different consumers
// of the same (seed, replication) never overlap.
namespace stream_id {
inline constexpr std::uint64_t kArrivals = 0;
inline constexpr std::uint64_t kServices = 1;
inline constexpr std::uint64_t kTagArrivals = 10;
inline constexpr std::uint64_t kTagServices = 11;
inline constexpr std::uint64_t kTagOwnService = 12;
}  // namespace stream_id

}  // namespace overlap
