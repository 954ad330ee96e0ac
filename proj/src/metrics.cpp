#include "senseforge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace senseforge::metrics {

namespace {

double log_in_base(double x, LogBase base) {
    return base == LogBase::natural ? std::log(x) : std::log10(x);
}

}  // namespace

double volume(const CoverageTensor& tensor) {
    double q = 0.0;
    for (double c : tensor.counts()) q += c;
    return q;
}

double entropy(const CoverageTensor& tensor, LogBase base) {
    const double q = volume(tensor);
    if (q <= 0.0) throw SenseError("empty_coverage", "entropy of an empty tensor is undefined");
    double e = 0.0;
    for (double c : tensor.counts()) {
        if (c > 0.0) {
            const double p = c / q;
            e -= p * log_in_base(p, base);
        }
    }
    return e;
}

double coverage_utility(const CoverageTensor& tensor, const TaskSpec& spec) {
    const double q = volume(tensor);
    if (q <= 0.0)
        throw SenseError("empty_coverage", "coverage utility of an empty tensor is undefined");
    return spec.alpha * entropy(tensor, spec.log_base) +
           (1.0 - spec.alpha) * log_in_base(q, spec.log_base);
}

CoverageReport coverage_report(const CoverageTensor& tensor, const TaskSpec& spec) {
    CoverageReport report;
    report.q = volume(tensor);
    report.entropy = entropy(tensor, spec.log_base);
    report.phi = spec.alpha * report.entropy +
                 (1.0 - spec.alpha) * log_in_base(report.q, spec.log_base);
    report.per_cell_counts.assign(
        static_cast<std::size_t>(tensor.width()) * tensor.height(), 0.0);
    for (int x = 0; x < tensor.width(); ++x)
        for (int y = 0; y < tensor.height(); ++y) {
            double sum = 0.0;
            for (int t = 0; t < tensor.time_slots(); ++t) sum += tensor.at(x, y, t);
            report.per_cell_counts[static_cast<std::size_t>(x) * tensor.height() + y] = sum;
        }
    return report;
}

double cosine_similarity(const std::array<double, kNumLandUse>& a,
                         const std::array<double, kNumLandUse>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (int k = 0; k < kNumLandUse; ++k) {
        dot += a[k] * b[k];
        na += a[k] * a[k];
        nb += b[k] * b[k];
    }
    if (na <= 0.0 || nb <= 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::array<double, kNumLandUse> route_landuse_histogram(const Route& route,
                                                        const GridMap& grid) {
    if (route.points.empty()) throw SenseError("empty_route", "route has no points");
    std::array<double, kNumLandUse> hist{};
    for (const auto& p : route.points) hist[grid.dominant_category(p.cell())] += 1.0;
    for (double& h : hist) h /= static_cast<double>(route.points.size());
    return hist;
}

double risk(const Route& route, const GridMap& grid) {
    if (route.points.empty()) throw SenseError("empty_route", "route has no points");
    const int lo = grid.min_crime();
    const int hi = grid.max_crime();
    if (hi == lo) return 0.0;
    double sum = 0.0;
    for (const auto& p : route.points)
        sum += static_cast<double>(grid.at(p.cell()).crime_count - lo) / (hi - lo);
    return sum / static_cast<double>(route.points.size());
}

double path_satisfaction(const Route& route, const Participant& participant,
                         const GridMap& grid, double mu) {
    const auto hist = route_landuse_histogram(route, grid);
    return cosine_similarity(participant.preference(), hist) - mu * risk(route, grid);
}

double route_overlap(const Route& a, const Route& b) {
    if (a.points.empty() || b.points.empty())
        throw SenseError("empty_route", "overlap of an empty route is undefined");
    std::set<Coord> cells_a, cells_b;
    for (const auto& p : a.points) cells_a.insert(p.cell());
    for (const auto& p : b.points) cells_b.insert(p.cell());
    std::size_t inter = 0;
    for (const auto& c : cells_a) inter += cells_b.count(c);
    const std::size_t uni = cells_a.size() + cells_b.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

FairnessStats fairness_stats(const std::vector<long>& selection_counts) {
    if (selection_counts.empty())
        throw SenseError("no_candidates", "fairness stats need at least one participant");
    FairnessStats stats;
    const double n = static_cast<double>(selection_counts.size());
    double sum = 0.0;
    for (long c : selection_counts) sum += static_cast<double>(c);
    stats.mean = sum / n;
    double var = 0.0;
    for (long c : selection_counts) {
        const double d = static_cast<double>(c) - stats.mean;
        var += d * d;
    }
    stats.variance = var / n;

    if (stats.mean > 0.0) {
        double abs_diff = 0.0;
        for (long a : selection_counts)
            for (long b : selection_counts) abs_diff += std::abs(static_cast<double>(a - b));
        stats.gini = abs_diff / (2.0 * n * n * stats.mean);
    }

    std::vector<long> sorted = selection_counts;
    std::sort(sorted.begin(), sorted.end());
    std::size_t i = 0;
    while (i < sorted.size()) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        stats.cdf.emplace_back(sorted[i], static_cast<double>(j) / n);
        i = j;
    }
    return stats;
}

}  // namespace senseforge::metrics
