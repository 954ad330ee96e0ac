#pragma once

#include <array>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "senseforge/domain.hpp"

namespace test_helpers {

using senseforge::CellAttributes;
using senseforge::Coord;
using senseforge::GridMap;
using senseforge::kNumLandUse;
using senseforge::Participant;
using senseforge::Route;
using senseforge::SenseError;
using senseforge::TaskSpec;

inline std::array<double, kNumLandUse> uniform_pref() {
    std::array<double, kNumLandUse> p{};
    p.fill(1.0 / kNumLandUse);
    return p;
}

inline std::array<double, kNumLandUse> one_hot(int k) {
    std::array<double, kNumLandUse> p{};
    p[static_cast<std::size_t>(k)] = 1.0;
    return p;
}

inline std::shared_ptr<GridMap> uniform_grid(int w, int h) {
    return std::make_shared<GridMap>(w, h);
}

// Dominant land use cycles with (x+y); crime varies cell to cell.
inline std::shared_ptr<GridMap> patterned_grid(int w, int h, bool with_crime = true) {
    std::vector<CellAttributes> cells(static_cast<std::size_t>(w) * h);
    for (int x = 0; x < w; ++x)
        for (int y = 0; y < h; ++y) {
            CellAttributes cell;
            cell.landuse.fill(0.1);
            cell.landuse[static_cast<std::size_t>((x + y) % kNumLandUse)] = 0.5;
            cell.crime_count = with_crime ? (x * 7 + y * 3) % 23 : 0;
            cells[static_cast<std::size_t>(x) * h + y] = cell;
        }
    return std::make_shared<GridMap>(w, h, std::move(cells));
}

inline TaskSpec spec_for(std::shared_ptr<const GridMap> grid, int horizon,
                         double budget = 100.0) {
    return senseforge::make_task_spec(std::move(grid), horizon, 15, budget);
}

inline Participant simple_participant(std::string id, Coord o, Coord d, int depart, int arrive,
                                      int speed = 1, double cost = 1.0, int history = 0,
                                      std::array<double, kNumLandUse> pref = uniform_pref()) {
    return Participant(std::move(id), o, d, depart, arrive, speed, cost, pref, history, {});
}

// Straight-line route along x at unit speed starting at t0, then waits.
inline Route x_walk(int x0, int y, int t0, int x1, int waits = 0) {
    Route r;
    const int step = x1 >= x0 ? 1 : -1;
    int t = t0;
    for (int x = x0;; x += step) {
        r.points.push_back({x, y, t++});
        if (x == x1) break;
    }
    for (int k = 0; k < waits; ++k) r.points.push_back({x1, y, t++});
    return r;
}

template <typename F>
std::string thrown_code(F&& f) {
    try {
        f();
    } catch (const SenseError& e) {
        return e.code();
    } catch (...) {
        return "<other>";
    }
    return "<none>";
}

}  // namespace test_helpers
