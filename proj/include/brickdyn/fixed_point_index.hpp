#pragma once

// Fixed point index of a map along a simple loop: the winding number of
// s -> f(gamma(s)) - gamma(s) around 0.

#include <cmath>
#include <deque>

#include "brickdyn/geometry.hpp"
#include "brickdyn/plane_map.hpp"

namespace brickdyn {

struct FixedPointOnLoop : GeometryError {
    using GeometryError::GeometryError;
};
struct IndexBudgetExhausted : GeometryError {
    using GeometryError::GeometryError;
};

struct IndexResult {
    int value = 0;
    double min_displacement = 0.0;
    std::size_t samples_used = 0;
    double angle_defect = 0.0;  // |sum - 2 pi * value|, should be ~0
};

// Walk the loop accumulating the turning of the displacement vector. Any
// angular step above pi/2 triggers bisection of that parameter span, so the
// winding count cannot silently skip a half-turn. The final sum must land
// within a quarter turn of a multiple of 2 pi.
inline IndexResult loop_index(const PlaneMapSpec& m, const PolyChain& loop,
                              const GeomTol& tol = {}, std::size_t max_samples = (1u << 20)) {
    if (!loop.closed || loop.pts.size() < 3)
        throw GeometryError("loop_index needs a closed loop with >= 3 vertices");

    struct Node {
        Point2 p;
        double ang;
        double mag;
    };
    auto probe = [&](Point2 p) -> Node {
        const Point2 d = eval_map(m, p) - p;
        const double mag = norm(d);
        if (mag <= tol.eps)
            throw FixedPointOnLoop("index loop passes within eps of a fixed point");
        return {p, std::atan2(d.y, d.x), mag};
    };
    auto wrap = [](double a) {
        while (a > M_PI) a -= 2.0 * M_PI;
        while (a < -M_PI) a += 2.0 * M_PI;
        return a;
    };

    IndexResult res;
    res.min_displacement = std::numeric_limits<double>::max();
    double total = 0.0;
    std::size_t used = 0;

    const std::size_t n = loop.pts.size();
    Node start = probe(loop.pts.front());
    ++used;
    Node prev = start;
    for (std::size_t i = 0; i < n; ++i) {
        const Node target = (i + 1 == n) ? start : probe(loop.pts[i + 1]);
        if (i + 1 < n) ++used;
        // Bisect the straight span until each angular step fits in pi/2.
        std::deque<std::pair<Node, Node>> work{{prev, target}};
        while (!work.empty()) {
            auto [a, b] = work.front();
            work.pop_front();
            const double step = wrap(b.ang - a.ang);
            if (std::abs(step) <= M_PI / 2.0 || dist(a.p, b.p) <= tol.eps * 1e-2) {
                total += step;
                res.min_displacement = std::min({res.min_displacement, a.mag, b.mag});
                continue;
            }
            if (++used > max_samples)
                throw IndexBudgetExhausted("loop_index sample budget exhausted");
            Node mid = probe(lerp(a.p, b.p, 0.5));
            work.emplace_front(mid, b);
            work.emplace_front(a, mid);
        }
        prev = target;
    }
    res.samples_used = used;
    const double turns = total / (2.0 * M_PI);
    res.value = static_cast<int>(std::lround(turns));
    res.angle_defect = std::abs(total - 2.0 * M_PI * res.value);
    if (res.angle_defect > 0.25 * 2.0 * M_PI)
        throw IndexBudgetExhausted("loop_index angle sum did not settle near a full turn count");
    return res;
}

struct FixedPointReport {
    Point2 location;
    double residual = 0.0;
    PolyChain index_loop;
    int index_value = 0;
};

// Candidates from the grid/Newton scan, each wrapped with a small index loop.
inline std::vector<FixedPointReport> locate_fixed_points(const PlaneMapSpec& m,
                                                         const BBox& window, int grid = 48,
                                                         const GeomTol& tol = {}) {
    const auto cands = locate_fixed_point_candidates(m, window, grid, tol);
    std::vector<FixedPointReport> out;
    for (std::size_t i = 0; i < cands.size(); ++i) {
        FixedPointReport r;
        r.location = cands[i].location;
        r.residual = cands[i].residual;
        double rad = 0.01 * std::max(window.hi.x - window.lo.x, window.hi.y - window.lo.y);
        for (std::size_t j = 0; j < cands.size(); ++j)
            if (j != i) rad = std::min(rad, 0.25 * dist(cands[i].location, cands[j].location));
        rad = std::max(rad, 100.0 * tol.eps);
        r.index_loop = make_circle(r.location, rad, 64);
        r.index_loop.closed = true;
        r.index_value = loop_index(m, r.index_loop, tol).value;
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace brickdyn
