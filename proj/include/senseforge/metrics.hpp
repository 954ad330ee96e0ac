#pragma once

#include <utility>
#include <vector>

#include "senseforge/domain.hpp"

namespace senseforge::metrics {

struct CoverageReport {
    double q = 0.0;
    double entropy = 0.0;
    double phi = 0.0;
    std::vector<double> per_cell_counts;  // width*height marginal over (x, y)
};

double volume(const CoverageTensor& tensor);

// Shannon entropy of p(i,j,t) = counts/Q over positive bins.
// Throws SenseError("empty_coverage") when the volume is zero.
double entropy(const CoverageTensor& tensor, LogBase base);

// alpha*entropy + (1-alpha)*log(Q), logs in the configured base.
double coverage_utility(const CoverageTensor& tensor, const TaskSpec& spec);

CoverageReport coverage_report(const CoverageTensor& tensor, const TaskSpec& spec);

// Cosine similarity with an all-zero guard returning 0.
double cosine_similarity(const std::array<double, kNumLandUse>& a,
                         const std::array<double, kNumLandUse>& b);

// Empirical distribution of dominant land-use categories along the route;
// repeated cells count once per visit.
std::array<double, kNumLandUse> route_landuse_histogram(const Route& route,
                                                        const GridMap& grid);

// Mean over route points of min-max-normalized crime; constant field -> 0.
double risk(const Route& route, const GridMap& grid);

// cosine(preference, histogram) - mu * risk; in [-mu, 1].
double path_satisfaction(const Route& route, const Participant& participant,
                         const GridMap& grid, double mu);

// Jaccard similarity of the visited cell sets (time ignored).
// Throws SenseError("empty_route") when either route is empty.
double route_overlap(const Route& a, const Route& b);

struct FairnessStats {
    double mean = 0.0;
    double variance = 0.0;  // population variance
    double gini = 0.0;
    std::vector<std::pair<long, double>> cdf;  // sorted (count, fraction <= count)
};

FairnessStats fairness_stats(const std::vector<long>& selection_counts);

}  // namespace senseforge::metrics
