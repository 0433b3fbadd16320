#pragma once

#include <cstdint>
#include <cmath>
#include <future>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace abstain {

/// Deterministic RNG used everywhere a seed appears in a contract.
/// Thin wrapper over mt19937_64 with hand-rolled distributions so that
/// identical seeds give identical streams independent of the standard
/// library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // uniform in [0, 1)
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, m)
    std::size_t index(std::size_t m) {
        return static_cast<std::size_t>(uniform() * static_cast<double>(m)) % m;
    }

    // standard normal via Box-Muller
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform(), u2 = uniform();
        while (u1 <= 1e-300) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    bool coin() { return (next_u64() & 1u) != 0; }

    /// Probability vector of length n, uniform on the simplex
    /// (exponential-spacing construction).
    std::vector<double> simplex(std::size_t n) {
        std::vector<double> p(n);
        double total = 0.0;
        for (auto& v : p) {
            double u = uniform();
            while (u <= 1e-300) u = uniform();
            v = -std::log(u);
            total += v;
        }
        for (auto& v : p) v /= total;
        return p;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[index(i)]);
    }

    /// Independent child stream; used to give parallel chunks stable seeds.
    Rng spawn(std::uint64_t salt) {
        return Rng(next_u64() ^ (salt * 0x9e3779b97f4a7c15ULL));
    }

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

inline double logsumexp(std::span<const double> xs) {
    double m = xs[0];
    for (double x : xs) m = std::max(m, x);
    double s = 0.0;
    for (double x : xs) s += std::exp(x - m);
    return m + std::log(s);
}

inline bool all_finite(std::span<const double> xs) {
    for (double x : xs)
        if (!std::isfinite(x)) return false;
    return true;
}

/// FNV-1a, used for artifact checksums and parameter hashes.
inline std::uint64_t fnv1a64(std::span<const char> bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t fnv1a64(const std::string& s) {
    return fnv1a64(std::span<const char>(s.data(), s.size()));
}

/// Runs fn(chunk_index, begin, end) over [0, total) split into roughly
/// equal chunks, one per worker. Results are merged by the caller;
/// chunk boundaries depend only on (total, workers), so runs are
/// deterministic regardless of scheduling.
template <typename Fn>
void parallel_chunks(std::size_t total, unsigned workers, Fn&& fn) {
    if (workers == 0) workers = 1;
    workers = std::min<unsigned>(workers, std::max<std::size_t>(total, 1));
    if (workers <= 1) {
        fn(0u, std::size_t{0}, total);
        return;
    }
    std::vector<std::future<void>> futs;
    const std::size_t base = total / workers, rem = total % workers;
    std::size_t begin = 0;
    for (unsigned w = 0; w < workers; ++w) {
        const std::size_t len = base + (w < rem ? 1 : 0);
        const std::size_t end = begin + len;
        futs.push_back(std::async(std::launch::async,
                                  [&fn, w, begin, end] { fn(w, begin, end); }));
        begin = end;
    }
    for (auto& f : futs) f.get();
}

inline unsigned default_workers() {
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : hc;
}

}  // namespace abstain
