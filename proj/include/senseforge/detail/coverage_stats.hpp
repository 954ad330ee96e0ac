#pragma once

#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "senseforge/domain.hpp"

namespace senseforge::detail {

// phi computed from volume Q and S = sum over bins of n*ln(n):
// E_nat = ln Q - S/Q, so phi needs only (Q, S). Planner inner loops preview
// route swaps against these two scalars instead of rescanning the tensor.
struct PhiParts {
    long long q = 0;
    double s = 0.0;  // natural-log basis
};

inline double nlogn(long long n) {
    return n > 1 ? static_cast<double>(n) * std::log(static_cast<double>(n)) : 0.0;
}

// phi = alpha*E + (1-alpha)*log(Q) in the configured base; 0 when Q = 0
// (the empty-union convention used by marginal-gain computations).
inline double phi_from(const PhiParts& parts, double alpha, LogBase base) {
    if (parts.q <= 0) return 0.0;
    const double qd = static_cast<double>(parts.q);
    const double log_q_nat = std::log(qd);
    const double e_nat = log_q_nat - parts.s / qd;
    const double scale = base == LogBase::natural ? 1.0 : 1.0 / std::log(10.0);
    return alpha * e_nat * scale + (1.0 - alpha) * log_q_nat * scale;
}

class CoverageStats {
public:
    CoverageStats(int width, int height, int time_slots)
        : width_(width),
          height_(height),
          time_slots_(time_slots),
          counts_(static_cast<std::size_t>(width) * height * time_slots, 0) {}

    static CoverageStats for_task(const TaskSpec& spec) {
        return CoverageStats(spec.grid->width(), spec.grid->height(), spec.horizon + 1);
    }

    std::size_t bin(int x, int y, int t) const {
        return (static_cast<std::size_t>(x) * height_ + y) * time_slots_ + t;
    }

    long long count_at(int x, int y, int t) const { return counts_[bin(x, y, t)]; }

    void add_point(std::size_t b) {
        parts_.s += nlogn(counts_[b] + 1) - nlogn(counts_[b]);
        counts_[b] += 1;
        parts_.q += 1;
    }

    void remove_point(std::size_t b) {
        parts_.s += nlogn(counts_[b] - 1) - nlogn(counts_[b]);
        counts_[b] -= 1;
        parts_.q -= 1;
    }

    void add_route(const Route& route) {
        for (const auto& p : route.points) add_point(bin(p.x, p.y, p.t));
    }

    void remove_route(const Route& route) {
        for (const auto& p : route.points) remove_point(bin(p.x, p.y, p.t));
    }

    const PhiParts& parts() const { return parts_; }

    double phi(double alpha, LogBase base) const { return phi_from(parts_, alpha, base); }

    // (Q, S) after removing `out` and adding `in`, without mutating; either
    // route may be empty.
    PhiParts preview_swap(const Route& out, const Route& in) const {
        PhiParts result = parts_;
        std::unordered_map<std::size_t, long long> overlay;
        overlay.reserve(out.points.size() + in.points.size());
        auto current = [&](std::size_t b) {
            auto it = overlay.find(b);
            return it == overlay.end() ? counts_[b] : it->second;
        };
        for (const auto& p : out.points) {
            const std::size_t b = bin(p.x, p.y, p.t);
            const long long n = current(b);
            result.s += nlogn(n - 1) - nlogn(n);
            overlay[b] = n - 1;
            result.q -= 1;
        }
        for (const auto& p : in.points) {
            const std::size_t b = bin(p.x, p.y, p.t);
            const long long n = current(b);
            result.s += nlogn(n + 1) - nlogn(n);
            overlay[b] = n + 1;
            result.q += 1;
        }
        return result;
    }

    CoverageTensor to_tensor() const {
        CoverageTensor tensor(width_, height_, time_slots_);
        for (int x = 0; x < width_; ++x)
            for (int y = 0; y < height_; ++y)
                for (int t = 0; t < time_slots_; ++t) {
                    const long long n = counts_[bin(x, y, t)];
                    if (n != 0) tensor.add_point(x, y, t, static_cast<double>(n));
                }
        return tensor;
    }

private:
    int width_;
    int height_;
    int time_slots_;
    std::vector<long long> counts_;
    PhiParts parts_;
};

}  // namespace senseforge::detail
