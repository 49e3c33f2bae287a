#pragma once

// Planar geometry kernel with certified tolerance semantics.
//
// Every predicate that can be fooled by rounding returns a three-state
// verdict (Disjoint / Intersecting / Unknown) instead of guessing. Touching
// within `eps` counts as Intersecting; Disjoint is only reported when the
// minimum distance is certifiably above `eps`.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace brickdyn {

// ============================================================== basic types

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
inline Point2 operator*(Point2 a, double s) { return {s * a.x, s * a.y}; }
inline bool operator==(Point2 a, Point2 b) { return a.x == b.x && a.y == b.y; }

inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm2(Point2 a) { return dot(a, a); }
inline double norm(Point2 a) { return std::sqrt(norm2(a)); }
inline double dist(Point2 a, Point2 b) { return norm(a - b); }
inline Point2 lerp(Point2 a, Point2 b, double t) { return a + t * (b - a); }
inline Point2 perp(Point2 a) { return {-a.y, a.x}; }

// Tolerance context. `eps` is the touching radius; `max_depth` bounds
// adaptive refinement loops before predicates give up with Unknown.
struct GeomTol {
    double eps = 1e-6;
    int max_depth = 24;
};

struct GeometryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DegenerateSegment : GeometryError {
    using GeometryError::GeometryError;
};
struct InvalidRegion : GeometryError {
    using GeometryError::GeometryError;
};

// ==================================================================== boxes

struct BBox {
    Point2 lo{std::numeric_limits<double>::max(), std::numeric_limits<double>::max()};
    Point2 hi{std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest()};

    void add(Point2 p) {
        lo.x = std::min(lo.x, p.x);
        lo.y = std::min(lo.y, p.y);
        hi.x = std::max(hi.x, p.x);
        hi.y = std::max(hi.y, p.y);
    }
    void merge(const BBox& b) {
        add(b.lo);
        add(b.hi);
    }
    bool empty() const { return lo.x > hi.x; }
    // Euclidean gap between boxes, 0 if they overlap.
    double gap(const BBox& b) const {
        double dx = std::max({0.0, lo.x - b.hi.x, b.lo.x - hi.x});
        double dy = std::max({0.0, lo.y - b.hi.y, b.lo.y - hi.y});
        return std::sqrt(dx * dx + dy * dy);
    }
};

// ================================================================= segments

// Intersection of proper segments [a0,a1] and [b0,b1]. Touching endpoints
// count. For collinear overlap the hit with the smallest `ta` is returned.
struct SegmentHit {
    Point2 point;
    double ta = 0.0;
    double tb = 0.0;
};

inline std::optional<SegmentHit> segment_intersection(Point2 a0, Point2 a1, Point2 b0,
                                                      Point2 b1, const GeomTol& tol = {}) {
    if (dist(a0, a1) <= tol.eps * 1e-3 || dist(b0, b1) <= tol.eps * 1e-3)
        throw DegenerateSegment("segment_intersection: zero-length input");
    const Point2 r = a1 - a0;
    const Point2 s = b1 - b0;
    const double denom = cross(r, s);
    const Point2 qp = b0 - a0;
    if (denom != 0.0) {
        double ta = cross(qp, s) / denom;
        double tb = cross(qp, r) / denom;
        const double slack_a = tol.eps / norm(r);
        const double slack_b = tol.eps / norm(s);
        if (ta < -slack_a || ta > 1.0 + slack_a || tb < -slack_b || tb > 1.0 + slack_b)
            return std::nullopt;
        ta = std::clamp(ta, 0.0, 1.0);
        tb = std::clamp(tb, 0.0, 1.0);
        return SegmentHit{lerp(a0, a1, ta), ta, tb};
    }
    // Parallel. Only collinear segments can meet.
    if (std::abs(cross(qp, r)) > tol.eps * norm(r)) return std::nullopt;
    const double rr = norm2(r);
    double t0 = dot(b0 - a0, r) / rr;
    double t1 = dot(b1 - a0, r) / rr;
    double lo = std::min(t0, t1), hi = std::max(t0, t1);
    double ta = std::max(0.0, lo);
    if (ta > std::min(1.0, hi) + tol.eps / norm(r)) return std::nullopt;
    ta = std::clamp(ta, 0.0, 1.0);
    const Point2 p = lerp(a0, a1, ta);
    double tb = dot(p - b0, s) / norm2(s);
    return SegmentHit{p, ta, std::clamp(tb, 0.0, 1.0)};
}

inline double point_segment_dist(Point2 p, Point2 a, Point2 b, double* t_out = nullptr) {
    const Point2 ab = b - a;
    const double l2 = norm2(ab);
    double t = l2 > 0.0 ? std::clamp(dot(p - a, ab) / l2, 0.0, 1.0) : 0.0;
    if (t_out) *t_out = t;
    return dist(p, lerp(a, b, t));
}

// Minimum distance between two segments, with the achieving parameters.
inline double segment_segment_dist(Point2 a0, Point2 a1, Point2 b0, Point2 b1,
                                   double* ta_out = nullptr, double* tb_out = nullptr) {
    const double denom = cross(a1 - a0, b1 - b0);
    if (denom != 0.0) {
        const Point2 qp = b0 - a0;
        double ta = cross(qp, b1 - b0) / denom;
        double tb = cross(qp, a1 - a0) / denom;
        if (ta >= 0.0 && ta <= 1.0 && tb >= 0.0 && tb <= 1.0) {
            if (ta_out) *ta_out = ta;
            if (tb_out) *tb_out = tb;
            return 0.0;
        }
    }
    double best = std::numeric_limits<double>::max();
    double ta = 0.0, tb = 0.0, t = 0.0;
    double d = point_segment_dist(a0, b0, b1, &t);
    if (d < best) { best = d; ta = 0.0; tb = t; }
    d = point_segment_dist(a1, b0, b1, &t);
    if (d < best) { best = d; ta = 1.0; tb = t; }
    d = point_segment_dist(b0, a0, a1, &t);
    if (d < best) { best = d; ta = t; tb = 0.0; }
    d = point_segment_dist(b1, a0, a1, &t);
    if (d < best) { best = d; ta = t; tb = 1.0; }
    if (ta_out) *ta_out = ta;
    if (tb_out) *tb_out = tb;
    return best;
}

// ================================================================ polychains

// Piecewise-linear curve. `closed` chains implicitly join back() to front().
struct PolyChain {
    std::vector<Point2> pts;
    bool closed = false;

    std::size_t segment_count() const {
        if (pts.size() < 2) return 0;
        return closed ? pts.size() : pts.size() - 1;
    }
    Point2 seg_a(std::size_t i) const { return pts[i]; }
    Point2 seg_b(std::size_t i) const { return pts[(i + 1) % pts.size()]; }

    double length() const {
        double s = 0.0;
        for (std::size_t i = 0; i < segment_count(); ++i) s += dist(seg_a(i), seg_b(i));
        return s;
    }

    BBox bbox() const {
        BBox b;
        for (const auto& p : pts) b.add(p);
        return b;
    }

    // Arc-length parametrization on [0,1].
    Point2 point_at(double t) const {
        if (pts.empty()) throw GeometryError("point_at on empty chain");
        if (pts.size() == 1 || segment_count() == 0) return pts.front();
        t = std::clamp(t, 0.0, 1.0);
        const double total = length();
        if (total <= 0.0) return pts.front();
        double want = t * total;
        for (std::size_t i = 0; i < segment_count(); ++i) {
            const double l = dist(seg_a(i), seg_b(i));
            if (want <= l || i + 1 == segment_count())
                return lerp(seg_a(i), seg_b(i), l > 0.0 ? std::min(1.0, want / l) : 0.0);
            want -= l;
        }
        return pts.back();
    }

    // Global parameter of the point at segment `i`, local parameter `u`.
    double param_of(std::size_t i, double u) const {
        const double total = length();
        if (total <= 0.0) return 0.0;
        double s = 0.0;
        for (std::size_t k = 0; k < i; ++k) s += dist(seg_a(k), seg_b(k));
        s += u * dist(seg_a(i), seg_b(i));
        return std::clamp(s / total, 0.0, 1.0);
    }

    // Open sub-chain between arc-length parameters t0 <= t1.
    PolyChain sub_chain(double t0, double t1) const {
        if (closed) throw GeometryError("sub_chain expects an open chain");
        t0 = std::clamp(t0, 0.0, 1.0);
        t1 = std::clamp(t1, t0, 1.0);
        PolyChain out;
        out.pts.push_back(point_at(t0));
        const double total = length();
        double s = 0.0;
        for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
            s += dist(pts[i], pts[i + 1]);
            const double t = total > 0.0 ? s / total : 1.0;
            if (t > t0 && t < t1) out.pts.push_back(pts[i + 1]);
        }
        out.pts.push_back(point_at(t1));
        return out;
    }

    PolyChain reversed() const {
        PolyChain out = *this;
        std::reverse(out.pts.begin(), out.pts.end());
        return out;
    }
};

inline double point_chain_dist(Point2 p, const PolyChain& c) {
    double best = std::numeric_limits<double>::max();
    if (c.pts.size() == 1) return dist(p, c.pts.front());
    for (std::size_t i = 0; i < c.segment_count(); ++i)
        best = std::min(best, point_segment_dist(p, c.seg_a(i), c.seg_b(i)));
    return best;
}

// Closest approach between two chains. Brute force with bounding-box
// rejection; adequate for the sizes this library works at.
struct ChainClosest {
    double distance = std::numeric_limits<double>::max();
    double param_a = 0.0;
    double param_b = 0.0;
    Point2 point_a;
    Point2 point_b;
};

inline ChainClosest chain_closest(const PolyChain& a, const PolyChain& b) {
    ChainClosest best;
    const std::size_t na = a.segment_count(), nb = b.segment_count();
    if (na == 0 || nb == 0) {
        if (a.pts.empty() || b.pts.empty()) return best;
        // Degenerate chains: fall back to point-vs-chain.
        if (na == 0 && nb == 0) {
            best.distance = dist(a.pts.front(), b.pts.front());
            best.point_a = a.pts.front();
            best.point_b = b.pts.front();
            return best;
        }
        const bool a_pt = (na == 0);
        const PolyChain& c = a_pt ? b : a;
        const Point2 p = a_pt ? a.pts.front() : b.pts.front();
        for (std::size_t i = 0; i < c.segment_count(); ++i) {
            double t = 0.0;
            double d = point_segment_dist(p, c.seg_a(i), c.seg_b(i), &t);
            if (d < best.distance) {
                best.distance = d;
                Point2 q = lerp(c.seg_a(i), c.seg_b(i), t);
                best.point_a = a_pt ? p : q;
                best.point_b = a_pt ? q : p;
                best.param_a = a_pt ? 0.0 : c.param_of(i, t);
                best.param_b = a_pt ? c.param_of(i, t) : 0.0;
            }
        }
        return best;
    }
    // Pre-computed per-segment boxes for the inner loop.
    std::vector<BBox> bbs(nb);
    for (std::size_t j = 0; j < nb; ++j) {
        bbs[j].add(b.seg_a(j));
        bbs[j].add(b.seg_b(j));
    }
    for (std::size_t i = 0; i < na; ++i) {
        const Point2 p0 = a.seg_a(i), p1 = a.seg_b(i);
        BBox ab;
        ab.add(p0);
        ab.add(p1);
        for (std::size_t j = 0; j < nb; ++j) {
            if (ab.gap(bbs[j]) >= best.distance) continue;
            double ta = 0.0, tb = 0.0;
            const double d = segment_segment_dist(p0, p1, b.seg_a(j), b.seg_b(j), &ta, &tb);
            if (d < best.distance) {
                best.distance = d;
                best.param_a = a.param_of(i, ta);
                best.param_b = b.param_of(j, tb);
                best.point_a = lerp(p0, p1, ta);
                best.point_b = lerp(b.seg_a(j), b.seg_b(j), tb);
            }
        }
    }
    return best;
}

// All meeting loci of two chains at tolerance eps, as global parameter
// pairs. Each segment pair within eps contributes one hit at its closest
// approach; callers use the extremal parameters, so clustering is not
// needed.
struct ChainHit {
    double param_a = 0.0;
    double param_b = 0.0;
    Point2 point;
};

inline std::vector<ChainHit> chain_intersections(const PolyChain& a, const PolyChain& b,
                                                 const GeomTol& tol = {}) {
    std::vector<ChainHit> hits;
    const std::size_t na = a.segment_count(), nb = b.segment_count();
    std::vector<BBox> bbs(nb);
    for (std::size_t j = 0; j < nb; ++j) {
        bbs[j].add(b.seg_a(j));
        bbs[j].add(b.seg_b(j));
    }
    for (std::size_t i = 0; i < na; ++i) {
        BBox ab;
        ab.add(a.seg_a(i));
        ab.add(a.seg_b(i));
        for (std::size_t j = 0; j < nb; ++j) {
            if (ab.gap(bbs[j]) > tol.eps) continue;
            double ta = 0.0, tb = 0.0;
            const double d =
                segment_segment_dist(a.seg_a(i), a.seg_b(i), b.seg_a(j), b.seg_b(j), &ta, &tb);
            if (d <= tol.eps)
                hits.push_back({a.param_of(i, ta), b.param_of(j, tb),
                                0.5 * (lerp(a.seg_a(i), a.seg_b(i), ta) +
                                       lerp(b.seg_a(j), b.seg_b(j), tb))});
        }
    }
    return hits;
}

// Simplicity check: no two non-adjacent segments come within eps.
inline bool chain_is_simple(const PolyChain& c, const GeomTol& tol = {}) {
    const std::size_t n = c.segment_count();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool adjacent =
                (j == i + 1) || (c.closed && i == 0 && j == n - 1);
            const double d =
                segment_segment_dist(c.seg_a(i), c.seg_b(i), c.seg_a(j), c.seg_b(j));
            if (adjacent) {
                // Adjacent segments may only meet at the shared vertex.
                const Point2 shared = (j == i + 1) ? c.seg_b(i) : c.seg_a(i);
                double ta = 0.0, tb = 0.0;
                segment_segment_dist(c.seg_a(i), c.seg_b(i), c.seg_a(j), c.seg_b(j), &ta, &tb);
                const Point2 pa = lerp(c.seg_a(i), c.seg_b(i), ta);
                if (d <= tol.eps && dist(pa, shared) > tol.eps) return false;
                continue;
            }
            if (d <= tol.eps) return false;
        }
    }
    return true;
}

// =================================================================== regions

// Region bounded by an outer cycle and optional hole cycles. Orientation is
// normalized on demand: outer counterclockwise, holes clockwise.
struct PolyRegion {
    PolyChain outer;                 // closed
    std::vector<PolyChain> holes;    // closed

    BBox bbox() const { return outer.bbox(); }
};

inline double signed_area(const PolyChain& c) {
    double s = 0.0;
    const std::size_t n = c.pts.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point2& p = c.pts[i];
        const Point2& q = c.pts[(i + 1) % n];
        s += cross(p, q);
    }
    return 0.5 * s;
}

inline double area(const PolyRegion& r) {
    double s = std::abs(signed_area(r.outer));
    for (const auto& h : r.holes) s -= std::abs(signed_area(h));
    return s;
}

inline void normalize_orientation(PolyRegion& r) {
    if (signed_area(r.outer) < 0.0) r.outer = r.outer.reversed();
    for (auto& h : r.holes)
        if (signed_area(h) > 0.0) h = h.reversed();
}

inline void validate_region(const PolyRegion& r, const GeomTol& tol = {}) {
    if (r.outer.pts.size() < 3) throw InvalidRegion("region outer cycle has < 3 vertices");
    if (!r.outer.closed) throw InvalidRegion("region outer cycle not marked closed");
    if (!chain_is_simple(r.outer, tol)) throw InvalidRegion("region outer cycle self-intersects");
    for (const auto& h : r.holes) {
        if (h.pts.size() < 3 || !h.closed) throw InvalidRegion("region hole malformed");
        if (!chain_is_simple(h, tol)) throw InvalidRegion("region hole self-intersects");
    }
}

enum class PointLocation { Inside, Outside, Boundary };

inline bool ray_crossings_odd(Point2 p, const PolyChain& c) {
    // Standard even-odd rule with a horizontal ray to +x.
    bool odd = false;
    const std::size_t n = c.pts.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point2 a = c.pts[i];
        const Point2 b = c.pts[(i + 1) % n];
        if ((a.y > p.y) != (b.y > p.y)) {
            const double xs = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if (xs > p.x) odd = !odd;
        }
    }
    return odd;
}

inline PointLocation point_in_region(Point2 p, const PolyRegion& r, const GeomTol& tol = {}) {
    if (point_chain_dist(p, r.outer) <= tol.eps) return PointLocation::Boundary;
    for (const auto& h : r.holes)
        if (point_chain_dist(p, h) <= tol.eps) return PointLocation::Boundary;
    if (!ray_crossings_odd(p, r.outer)) return PointLocation::Outside;
    for (const auto& h : r.holes)
        if (ray_crossings_odd(p, h)) return PointLocation::Outside;
    return PointLocation::Inside;
}

// ==================================================== region vs region test

enum class Relation { Disjoint, Intersecting, Unknown };

struct IntersectVerdict {
    Relation rel = Relation::Unknown;
    std::optional<Point2> witness;
    // Certified boundary gap when Disjoint; 0 when Intersecting.
    double gap = 0.0;
};

namespace detail {
inline ChainClosest boundary_closest(const PolyRegion& a, const PolyRegion& b) {
    ChainClosest best = chain_closest(a.outer, b.outer);
    auto consider = [&](const PolyChain& ca, const PolyChain& cb) {
        ChainClosest c = chain_closest(ca, cb);
        if (c.distance < best.distance) best = c;
    };
    for (const auto& h : b.holes) consider(a.outer, h);
    for (const auto& h : a.holes) consider(h, b.outer);
    for (const auto& ha : a.holes)
        for (const auto& hb : b.holes) consider(ha, hb);
    return best;
}
}  // namespace detail

// Certified overlap test. Touching within eps counts as Intersecting and the
// witness satisfies point_in_region(w) != Outside for both regions at eps.
inline IntersectVerdict region_intersects(const PolyRegion& a, const PolyRegion& b,
                                          const GeomTol& tol = {}) {
    if (a.outer.pts.size() < 3 || b.outer.pts.size() < 3)
        return {Relation::Unknown, std::nullopt, 0.0};
    if (a.bbox().gap(b.bbox()) > tol.eps) {
        IntersectVerdict v;
        v.rel = Relation::Disjoint;
        v.gap = a.bbox().gap(b.bbox());
        return v;
    }
    const ChainClosest c = detail::boundary_closest(a, b);
    if (c.distance <= tol.eps) {
        IntersectVerdict v;
        v.rel = Relation::Intersecting;
        v.witness = 0.5 * (c.point_a + c.point_b);
        return v;
    }
    // Boundaries are separated; containment decides.
    if (point_in_region(b.outer.pts.front(), a, tol) == PointLocation::Inside) {
        IntersectVerdict v;
        v.rel = Relation::Intersecting;
        v.witness = b.outer.pts.front();
        return v;
    }
    if (point_in_region(a.outer.pts.front(), b, tol) == PointLocation::Inside) {
        IntersectVerdict v;
        v.rel = Relation::Intersecting;
        v.witness = a.outer.pts.front();
        return v;
    }
    IntersectVerdict v;
    v.rel = Relation::Disjoint;
    v.gap = c.distance;
    return v;
}

inline IntersectVerdict region_chain_intersects(const PolyRegion& a, const PolyChain& c,
                                                const GeomTol& tol = {}) {
    ChainClosest best = chain_closest(a.outer, c);
    for (const auto& h : a.holes) {
        ChainClosest hc = chain_closest(h, c);
        if (hc.distance < best.distance) best = hc;
    }
    if (best.distance <= tol.eps)
        return {Relation::Intersecting, 0.5 * (best.point_a + best.point_b), 0.0};
    if (!c.pts.empty() && point_in_region(c.pts.front(), a, tol) == PointLocation::Inside)
        return {Relation::Intersecting, c.pts.front(), 0.0};
    IntersectVerdict v;
    v.rel = Relation::Disjoint;
    v.gap = best.distance;
    return v;
}

// =========================================================== small helpers

inline PolyChain make_circle(Point2 center, double radius, int n = 48) {
    PolyChain c;
    c.closed = true;
    c.pts.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double ang = 2.0 * M_PI * static_cast<double>(i) / static_cast<double>(n);
        c.pts.push_back({center.x + radius * std::cos(ang), center.y + radius * std::sin(ang)});
    }
    return c;
}

inline PolyRegion make_disk(Point2 center, double radius, int n = 48) {
    PolyRegion r;
    r.outer = make_circle(center, radius, n);
    return r;
}

inline PolyRegion make_box(Point2 lo, Point2 hi) {
    PolyRegion r;
    r.outer.closed = true;
    r.outer.pts = {lo, {hi.x, lo.y}, hi, {lo.x, hi.y}};
    return r;
}

// One-sided offset of an open chain at signed distance d (positive = left),
// with mitered corners (beveled when the miter would run away).
inline std::vector<Point2> offset_polyline(const std::vector<Point2>& pts, double d,
                                           double miter_limit = 4.0) {
    std::vector<Point2> clean;
    for (const auto& p : pts)
        if (clean.empty() || dist(clean.back(), p) > 1e-12) clean.push_back(p);
    if (clean.size() < 2) throw GeometryError("offset_polyline needs >= 2 distinct points");
    const std::size_t n = clean.size();
    std::vector<Point2> normals(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const Point2 t = clean[i + 1] - clean[i];
        normals[i] = (1.0 / norm(t)) * perp(t);
    }
    std::vector<Point2> out;
    out.push_back(clean[0] + d * normals[0]);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const Point2 na = normals[i - 1], nb = normals[i];
        Point2 m = na + nb;
        const double m2 = norm2(m);
        if (m2 < 1e-12) {
            // U-turn: bevel with both offsets.
            out.push_back(clean[i] + d * na);
            out.push_back(clean[i] + d * nb);
            continue;
        }
        m = (2.0 / m2) * m;  // miter direction, |m| = 1/cos(theta/2)
        if (norm(m) > miter_limit) {
            out.push_back(clean[i] + d * na);
            out.push_back(clean[i] + d * nb);
        } else {
            out.push_back(clean[i] + d * m);
        }
    }
    out.push_back(clean[n - 1] + d * normals[n - 2]);
    return out;
}

// Capsule of half-width w around an open chain: mitered side walls joined by
// fan end caps. Used for thin free neighborhoods of arcs; the caller keeps w
// below the spine's clearance so the result stays simple.
inline PolyRegion make_capsule(const PolyChain& spine, double w, int cap_segments = 6) {
    if (spine.pts.size() < 2) throw GeometryError("make_capsule needs >= 2 points");
    auto arc = [&](Point2 center, double a0, double a1, std::vector<Point2>& out) {
        for (int k = 1; k < cap_segments; ++k) {
            const double t = static_cast<double>(k) / cap_segments;
            const double a = a0 + t * (a1 - a0);
            out.push_back({center.x + w * std::cos(a), center.y + w * std::sin(a)});
        }
    };
    const std::vector<Point2> left = offset_polyline(spine.pts, w);
    const std::vector<Point2> right = offset_polyline(spine.pts, -w);
    PolyRegion r;
    r.outer.closed = true;
    auto& pts = r.outer.pts;
    pts.insert(pts.end(), left.begin(), left.end());
    const std::size_t n = spine.pts.size();
    {
        const Point2 d = spine.pts[n - 1] - spine.pts[n - 2];
        const double a = std::atan2(d.y, d.x);
        arc(spine.pts[n - 1], a + M_PI / 2, a - M_PI / 2, pts);
    }
    for (auto it = right.rbegin(); it != right.rend(); ++it) pts.push_back(*it);
    {
        const Point2 d = spine.pts[1] - spine.pts[0];
        const double a = std::atan2(d.y, d.x);
        arc(spine.pts[0], a - M_PI / 2, a - 3 * M_PI / 2, pts);
    }
    normalize_orientation(r);
    return r;
}

// ================================================ region distance & probing

// A point strictly inside the region, found by horizontal scanline. The
// widest inside interval is used so the probe is as robust as possible.
inline Point2 interior_probe(const PolyRegion& r, const GeomTol& tol = {}) {
    const BBox bb = r.outer.bbox();
    for (int attempt = 0; attempt < 23; ++attempt) {
        const double y = bb.lo.y + (attempt + 1.0) / 24.0 * (bb.hi.y - bb.lo.y);
        std::vector<double> xs;
        bool degenerate = false;
        auto scan = [&](const PolyChain& c) {
            for (std::size_t j = 0; j < c.segment_count() && !degenerate; ++j) {
                const Point2 a = c.seg_a(j), b = c.seg_b(j);
                if (std::abs(a.y - y) < tol.eps || std::abs(b.y - y) < tol.eps) {
                    degenerate = true;
                    return;
                }
                if ((a.y < y) != (b.y < y))
                    xs.push_back(a.x + (y - a.y) / (b.y - a.y) * (b.x - a.x));
            }
        };
        scan(r.outer);
        for (const auto& h : r.holes) {
            if (degenerate) break;
            scan(h);
        }
        if (degenerate || xs.size() < 2 || xs.size() % 2 != 0) continue;
        std::sort(xs.begin(), xs.end());
        double best = -1.0;
        Point2 probe{};
        for (std::size_t j = 0; j + 1 < xs.size(); j += 2) {
            if (xs[j + 1] - xs[j] > best) {
                best = xs[j + 1] - xs[j];
                probe = {0.5 * (xs[j] + xs[j + 1]), y};
            }
        }
        if (best > 4 * tol.eps) return probe;
    }
    throw InvalidRegion("interior_probe: no robust interior point");
}

// Depth of p inside r: distance to the nearest boundary point, 0 outside.
inline double region_depth(const PolyRegion& r, Point2 p, const GeomTol& tol = {}) {
    if (point_in_region(p, r, tol) == PointLocation::Outside) return 0.0;
    double d = point_chain_dist(p, r.outer);
    for (const auto& h : r.holes) d = std::min(d, point_chain_dist(p, h));
    return d;
}

struct RegionGap {
    double distance = 0.0;  // 0 when the closed regions overlap
    Point2 on_a{}, on_b{};
};

// Distance between two closed regions. Returns 0 with an overlap witness
// when they intersect (boundary crossing or containment), otherwise the
// smallest boundary-to-boundary distance with the closest pair.
inline RegionGap region_gap(const PolyRegion& a, const PolyRegion& b, const GeomTol& tol = {}) {
    const ChainClosest c = detail::boundary_closest(a, b);
    if (c.distance == 0.0) return {0.0, c.point_a, c.point_b};
    const Point2 pb = interior_probe(b, tol);
    if (point_in_region(pb, a, tol) != PointLocation::Outside) return {0.0, pb, pb};
    const Point2 pa = interior_probe(a, tol);
    if (point_in_region(pa, b, tol) != PointLocation::Outside) return {0.0, pa, pa};
    return {c.distance, c.point_a, c.point_b};
}

// ======================================================= region transforms

inline PolyChain transform_chain(const PolyChain& c, const std::function<Point2(Point2)>& t) {
    PolyChain out = c;
    for (auto& p : out.pts) p = t(p);
    return out;
}

inline PolyRegion transform_region(const PolyRegion& r,
                                   const std::function<Point2(Point2)>& t) {
    PolyRegion out;
    out.outer = transform_chain(r.outer, t);
    for (const auto& h : r.holes) out.holes.push_back(transform_chain(h, t));
    normalize_orientation(out);
    return out;
}

inline PolyRegion scale_region(const PolyRegion& r, Point2 center, double s) {
    return transform_region(r, [&](Point2 p) { return center + s * (p - center); });
}

// Glue b onto the end of a. The junction vertices must agree within snap.
inline PolyChain chain_concat(const PolyChain& a, const PolyChain& b, double snap) {
    if (a.pts.empty()) return b;
    if (b.pts.empty()) return a;
    if (dist(a.pts.back(), b.pts.front()) > snap)
        throw GeometryError("chain_concat: junction mismatch");
    PolyChain out = a;
    out.pts.insert(out.pts.end(), b.pts.begin() + 1, b.pts.end());
    return out;
}

// ====================================================== paths inside regions

// True when every sample of [a,b] stays in the closed region, keeping the
// requested clearance from the boundary except within `exempt` of a or b
// (endpoints are allowed to sit on the boundary).
inline bool segment_in_region(const PolyRegion& r, Point2 a, Point2 b, double clearance,
                              double exempt, const GeomTol& tol = {}) {
    const double len = dist(a, b);
    const int n = std::max(2, static_cast<int>(std::ceil(len / std::max(clearance, 16 * tol.eps))) * 2);
    for (int i = 0; i <= n; ++i) {
        const Point2 p = lerp(a, b, static_cast<double>(i) / n);
        if (point_in_region(p, r, tol) == PointLocation::Outside) return false;
        const double guard = std::min(dist(p, a), dist(p, b)) >= exempt ? clearance : 0.0;
        if (guard > 0.0 && region_depth(r, p, tol) < guard) return false;
    }
    return true;
}

// Deterministic path from a to b through the interior of r (grid BFS plus
// greedy shortcutting). Endpoints may lie on the boundary.
inline PolyChain region_path(const PolyRegion& r, Point2 a, Point2 b, const GeomTol& tol = {}) {
    const BBox bb = r.outer.bbox();
    const double span = std::max(bb.hi.x - bb.lo.x, bb.hi.y - bb.lo.y);
    if (span <= 0) throw InvalidRegion("region_path: degenerate region");
    for (int level = 0; level < 5; ++level) {
        const double h = span / (24 << level);
        const double exempt = 2.5 * h;
        if (segment_in_region(r, a, b, h / 2, exempt, tol)) {
            PolyChain direct;
            direct.pts = {a, b};
            return direct;
        }
        const int nx = static_cast<int>(std::ceil((bb.hi.x - bb.lo.x) / h)) + 1;
        const int ny = static_cast<int>(std::ceil((bb.hi.y - bb.lo.y) / h)) + 1;
        if (static_cast<long long>(nx) * ny > 400000) continue;
        auto node_pt = [&](int ix, int iy) {
            return Point2{bb.lo.x + ix * h, bb.lo.y + iy * h};
        };
        std::vector<char> open(static_cast<std::size_t>(nx) * ny, 0);
        for (int iy = 0; iy < ny; ++iy)
            for (int ix = 0; ix < nx; ++ix)
                if (region_depth(r, node_pt(ix, iy), tol) >= h / 2)
                    open[static_cast<std::size_t>(iy) * nx + ix] = 1;
        auto nearest_open = [&](Point2 p) -> long long {
            long long best = -1;
            double bd = std::numeric_limits<double>::max();
            for (int iy = 0; iy < ny; ++iy)
                for (int ix = 0; ix < nx; ++ix) {
                    const std::size_t id = static_cast<std::size_t>(iy) * nx + ix;
                    if (!open[id]) continue;
                    const double d = dist(node_pt(ix, iy), p);
                    if (d < bd && d <= 3 * h) {
                        bd = d;
                        best = static_cast<long long>(id);
                    }
                }
            return best;
        };
        const long long sa = nearest_open(a), sb = nearest_open(b);
        if (sa < 0 || sb < 0) continue;
        std::vector<int> prev(static_cast<std::size_t>(nx) * ny, -1);
        std::deque<long long> q{sa};
        prev[static_cast<std::size_t>(sa)] = static_cast<int>(sa);
        while (!q.empty() && prev[static_cast<std::size_t>(sb)] < 0) {
            const long long cur = q.front();
            q.pop_front();
            const int cx = static_cast<int>(cur % nx), cy = static_cast<int>(cur / nx);
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const int mx = cx + dx, my = cy + dy;
                    if ((dx == 0 && dy == 0) || mx < 0 || my < 0 || mx >= nx || my >= ny) continue;
                    const std::size_t id = static_cast<std::size_t>(my) * nx + mx;
                    if (!open[id] || prev[id] >= 0) continue;
                    prev[id] = static_cast<int>(cur);
                    q.push_back(static_cast<long long>(id));
                }
        }
        if (prev[static_cast<std::size_t>(sb)] < 0) continue;
        std::vector<Point2> raw{b};
        for (long long cur = sb;; cur = prev[static_cast<std::size_t>(cur)]) {
            raw.push_back(node_pt(static_cast<int>(cur % nx), static_cast<int>(cur / nx)));
            if (cur == sa) break;
        }
        raw.push_back(a);
        std::reverse(raw.begin(), raw.end());
        // greedy shortcuts: jump to the farthest vertex reachable in one hop
        std::vector<Point2> out{raw.front()};
        std::size_t i = 0;
        while (i + 1 < raw.size()) {
            std::size_t j = raw.size() - 1;
            for (; j > i + 1; --j)
                if (segment_in_region(r, raw[i], raw[j], h / 2, exempt, tol)) break;
            out.push_back(raw[j]);
            i = j;
        }
        PolyChain path;
        path.pts = std::move(out);
        return path;
    }
    throw GeometryError("region_path: endpoints not connectable at resolution");
}

}  // namespace brickdyn
