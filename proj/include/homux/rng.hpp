#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace homux {

// Stream derivation: every random consumer gets its own engine keyed by a
// name path (stage, layer, candidate, ...) under one master seed, so results
// never depend on scheduling order.

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t derive_seed(std::uint64_t parent, std::string_view name) noexcept {
    return splitmix64(parent ^ splitmix64(fnv1a64(name)));
}

inline std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) noexcept {
    return splitmix64(parent ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

inline std::uint64_t derive_seed(std::uint64_t parent, std::initializer_list<std::string_view> path) noexcept {
    std::uint64_t s = parent;
    for (auto name : path) s = derive_seed(s, name);
    return s;
}

/// SplitMix64 stream: output n is splitmix64(seed + n * golden), a pure
/// function of (seed, n).
class Engine {
public:
    using result_type = std::uint64_t;

    explicit Engine(std::uint64_t seed = 0) noexcept : state_(seed) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return ~result_type{0}; }

    result_type operator()() noexcept {
        std::uint64_t x = (state_ += 0x9e3779b97f4a7c15ULL);
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    void discard(std::uint64_t n) noexcept { state_ += n * 0x9e3779b97f4a7c15ULL; }

    friend bool operator==(const Engine&, const Engine&) = default;

private:
    std::uint64_t state_;
};

inline Engine make_engine(std::uint64_t seed) { return Engine(seed); }

/// Uniform integer in [0, n), Lemire's multiply-shift with rejection.
inline std::uint64_t bounded(Engine& e, std::uint64_t n) {
    unsigned __int128 m = static_cast<unsigned __int128>(e()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
        const std::uint64_t threshold = -n % n;
        while (low < threshold) {
            m = static_cast<unsigned __int128>(e()) * n;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

/// Bounded draws below 2^32 that use both halves of each engine output.
class BoundedDraws {
public:
    explicit BoundedDraws(Engine& e) : e_(e) {}

    std::uint32_t operator()(std::uint32_t n) {
        std::uint64_t m = std::uint64_t{next()} * n;
        auto low = static_cast<std::uint32_t>(m);
        if (low < n) {
            const std::uint32_t threshold = static_cast<std::uint32_t>(-n) % n;
            while (low < threshold) {
                m = std::uint64_t{next()} * n;
                low = static_cast<std::uint32_t>(m);
            }
        }
        return static_cast<std::uint32_t>(m >> 32);
    }

private:
    std::uint32_t next() {
        if (spare_) {
            spare_ = false;
            return static_cast<std::uint32_t>(buf_ >> 32);
        }
        buf_ = e_();
        spare_ = true;
        return static_cast<std::uint32_t>(buf_);
    }

    Engine& e_;
    std::uint64_t buf_ = 0;
    bool spare_ = false;
};

/// Fisher-Yates on top of bounded draws.
template <typename T>
void shuffle(T* first, std::size_t n, Engine& e) {
    std::size_t i = n;
    for (; i > std::size_t{1} << 32; --i) std::swap(first[i - 1], first[bounded(e, i)]);
    BoundedDraws draw(e);
    for (; i > 1; --i) std::swap(first[i - 1], first[draw(static_cast<std::uint32_t>(i))]);
}

} // namespace homux
