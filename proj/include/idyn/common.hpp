#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace idyn {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

inline Mat3 skew(const Vec3& v) {
    Mat3 s;
    s << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
    return s;
}

// SplitMix64; used as a counter-based stream so sample k of a seeded
// sequence can be computed independently of samples 0..k-1.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(seed ^ (0x517cc1b727220a95ULL * (stream + 1)));
}

// Uniform in (0, 1]; never returns 0 so log() stays finite.
inline double uniform01(std::uint64_t bits) {
    return (static_cast<double>(bits >> 11) + 1.0) * (1.0 / 9007199254740992.0);
}

// Deterministic standard normal draw addressed by (seed, index).
inline double normal_draw(std::uint64_t seed, std::uint64_t index) {
    const std::uint64_t a = splitmix64(mix_seed(seed, 2 * index));
    const std::uint64_t b = splitmix64(mix_seed(seed, 2 * index + 1));
    const double u1 = uniform01(a);
    const double u2 = uniform01(b);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

// Bounded integer without modulo bias (Lemire); used by the shuffles.
inline std::uint64_t bounded_draw(std::uint64_t seed, std::uint64_t index, std::uint64_t bound) {
    std::uint64_t x = splitmix64(mix_seed(seed, index));
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(x) * bound) >> 64);
}

inline std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace idyn
