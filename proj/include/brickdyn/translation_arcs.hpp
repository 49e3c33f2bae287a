#pragma once

// Freeness certificates, translation arcs, and recurrence detection.
//
// A set X is free when f(X) and X are disjoint. Verdicts are certified
// against the image approximation error: Free and NotFree both carry a
// margin, Unknown means the true distance is inside the error envelope of
// the touching threshold. Regions are tested against eps; chains are tested
// as thin tubes of width 2*eps, i.e. against an axis distance of 2*eps.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "brickdyn/geometry.hpp"
#include "brickdyn/plane_map.hpp"

namespace brickdyn {

struct NoFreeScale : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct WitnessNotFound : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct PathNotFound : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConvergenceNotObserved : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Freeness { Free, NotFree, Unknown };

struct FreeVerdict {
    Freeness verdict = Freeness::Unknown;
    // Certified distance bound (Free) or threshold slack (NotFree).
    double margin = 0.0;
    // A point where X meets its image, when NotFree.
    std::optional<Point2> witness;
};

namespace detail {

inline FreeVerdict classify_gap(double d, double err, double threshold, Point2 wa, Point2 wb) {
    FreeVerdict v;
    if (d - err > threshold) {
        v.verdict = Freeness::Free;
        v.margin = d - err;
    } else if (d + err <= threshold) {
        v.verdict = Freeness::NotFree;
        v.margin = threshold - d - err;
        v.witness = 0.5 * (wa + wb);
    }
    return v;
}

}  // namespace detail

// Does f^k(X) meet X? NotFree reports the meeting point. Three refinement
// rounds shrink the image error before giving up with Unknown.
inline FreeVerdict iterate_meets(const PlaneMapSpec& m, const PolyChain& x, int k,
                                 const GeomTol& tol = {}) {
    const PlaneMapSpec mk = map_power(m, k);
    const double threshold = 2 * tol.eps;
    for (int round = 0; round < 3; ++round) {
        const double target = tol.eps / (4 << (2 * round));
        const ImageChain img = image_polychain(mk, x, tol, target);
        const ChainClosest c = chain_closest(x, img.chain);
        const FreeVerdict v =
            detail::classify_gap(c.distance, img.err_bound, threshold, c.point_a, c.point_b);
        if (v.verdict != Freeness::Unknown) return v;
    }
    return {};
}

inline FreeVerdict iterate_meets(const PlaneMapSpec& m, const PolyRegion& x, int k,
                                 const GeomTol& tol = {}) {
    const PlaneMapSpec mk = map_power(m, k);
    for (int round = 0; round < 3; ++round) {
        const double target = tol.eps / (4 << (2 * round));
        double err = 0.0;
        PolyRegion img;
        try {
            img = image_region(mk, x, tol, target, &err);
        } catch (const GeometryError&) {
            continue;  // image boundary failed to validate at this target
        }
        RegionGap g;
        try {
            g = region_gap(x, img, tol);
        } catch (const InvalidRegion&) {
            continue;
        }
        const FreeVerdict v = detail::classify_gap(g.distance, err, tol.eps, g.on_a, g.on_b);
        if (v.verdict != Freeness::Unknown) return v;
    }
    return {};
}

// Pair form: does f^k(A) meet B?
inline FreeVerdict iterate_pair_meets(const PlaneMapSpec& m, const PolyRegion& a, int k,
                                      const PolyRegion& b, const GeomTol& tol = {}) {
    const PlaneMapSpec mk = map_power(m, k);
    for (int round = 0; round < 3; ++round) {
        const double target = tol.eps / (4 << (2 * round));
        double err = 0.0;
        PolyRegion img;
        try {
            img = image_region(mk, a, tol, target, &err);
        } catch (const GeometryError&) {
            continue;
        }
        RegionGap g;
        try {
            g = region_gap(img, b, tol);
        } catch (const InvalidRegion&) {
            continue;
        }
        const FreeVerdict v = detail::classify_gap(g.distance, err, tol.eps, g.on_a, g.on_b);
        if (v.verdict != Freeness::Unknown) return v;
    }
    return {};
}

// Free when the image misses X (verdict Free); NotFree carries the meeting
// point.
inline FreeVerdict is_free(const PlaneMapSpec& m, const PolyRegion& x, const GeomTol& tol = {}) {
    return iterate_meets(m, x, 1, tol);
}

inline FreeVerdict is_free(const PlaneMapSpec& m, const PolyChain& x, const GeomTol& tol = {}) {
    return iterate_meets(m, x, 1, tol);
}

// ========================================================= translation arcs

// A simple arc from z to f(z) meeting its own image only at f(z) (or at both
// endpoints when z is 2-periodic). Scaffolding from the construction is kept
// because ladder stitching and tube fattening reuse it.
struct TranslationArc {
    PolyChain arc;             // z .. f(z)
    Point2 base{};             // z
    PolyChain beta;            // f^-1(y) .. z, inside the critical disk
    PolyChain delta;           // z .. y (starts with the inherited germ, if any)
    PolyChain image_beta;      // f(beta) = the terminal piece of arc
    PolyRegion critical_disk;  // bracket scale: free interior, eps-touching boundary
    PolyRegion free_disk;      // certified free disk strictly inside the bracket
    Point2 witness_y{};
    double germ_len = 0.0;     // arc length shared with the neighbouring ladder arc
};

struct ArcCheck {
    bool simple = false;
    bool endpoints_ok = false;
    bool meets_only_at_image = false;
    bool periodic_case = false;  // hits at z accepted because f^2(z) = z
    std::vector<Point2> stray_hits;
    bool ok() const { return simple && endpoints_ok && meets_only_at_image; }
};

inline ArcCheck check_translation_arc(const PlaneMapSpec& m, const TranslationArc& ta,
                                      const GeomTol& tol = {}) {
    ArcCheck r;
    const PolyChain& arc = ta.arc;
    if (arc.pts.size() < 2) return r;
    r.simple = chain_is_simple(arc, tol);
    const Point2 z = ta.base;
    const Point2 fz = eval_map(m, z);
    r.endpoints_ok = dist(arc.pts.front(), z) <= tol.eps && dist(arc.pts.back(), fz) <= tol.eps;
    const ImageChain img = image_polychain(m, arc, tol);
    const double allow = std::max(10 * tol.eps, 3 * img.err_bound);
    const bool two_periodic = dist(eval_iterate(m, z, 2), z) <= allow;
    for (const auto& hit : chain_intersections(arc, img.chain, tol)) {
        if (dist(hit.point, fz) <= allow) continue;
        if (two_periodic && dist(hit.point, z) <= allow) {
            r.periodic_case = true;
            continue;
        }
        r.stray_hits.push_back(hit.point);
    }
    r.meets_only_at_image = r.stray_hits.empty();
    return r;
}

namespace detail {

// Candidate routes between two points: the straight segment, then bows of
// decreasing bulge on both sides. Small bulges matter inside thin tubes,
// where the straight route may be blocked but wide detours do not fit.
inline std::vector<PolyChain> route_candidates(Point2 a, Point2 b) {
    std::vector<PolyChain> out;
    PolyChain straight;
    straight.pts = {a, b};
    out.push_back(straight);
    const double len = dist(a, b);
    if (len <= 0) return out;
    const Point2 n = (1.0 / len) * perp(b - a);
    for (double scale : {0.5, 0.18, 0.06}) {
        for (double side : {1.0, -1.0}) {
            PolyChain bow;
            for (int i = 0; i <= 8; ++i) {
                const double t = i / 8.0;
                const Point2 on = lerp(a, b, t);
                const double bulge = scale * len * 4 * t * (1 - t) * side;
                bow.pts.push_back(on + bulge * n);
            }
            out.push_back(bow);
        }
    }
    return out;
}

inline bool chain_in_region(const PolyRegion& r, const PolyChain& c, const GeomTol& tol) {
    for (std::size_t i = 0; i + 1 < c.pts.size(); ++i)
        if (!segment_in_region(r, c.pts[i], c.pts[i + 1], 0.0, 0.0, tol)) return false;
    return true;
}

// Nearest on-chain parameter to p.
inline std::pair<double, double> chain_nearest_param(const PolyChain& c, Point2 p) {
    double best = std::numeric_limits<double>::max();
    double param = 0.0;
    for (std::size_t i = 0; i < c.segment_count(); ++i) {
        double t = 0.0;
        const double d = point_segment_dist(p, c.seg_a(i), c.seg_b(i), &t);
        if (d < best) {
            best = d;
            param = c.param_of(i, t);
        }
    }
    return {param, best};
}

// Terminal piece of `c` of the requested arc length, reversed so it starts
// at c's endpoint. Used for germ inheritance.
inline PolyChain tail_reversed(const PolyChain& c, double len) {
    const double total = c.length();
    const double t0 = std::max(0.0, 1.0 - len / std::max(total, 1e-300));
    return c.sub_chain(t0, 1.0).reversed();
}

}  // namespace detail

struct ArcBuildOptions {
    // Forces delta to begin along this chain (a chain ending at z; its tail
    // is reversed into the germ). Used when stitching ladders upward.
    const PolyChain* incoming_tail = nullptr;
    // Forces beta to end along this chain (a chain starting at z, pointing
    // away; beta ends with its reverse). Used when stitching downward.
    const PolyChain* outgoing_tail = nullptr;
    double germ_target = 0.0;  // desired germ arc length; 0 picks automatically
};

// Build a translation arc at z following the critical-disk recipe: bisect
// the seed scale until the free disk almost touches its image, pick the
// touching witness y on the bracket boundary, run beta from f^-1(y) to z and
// delta from z to y through the disk, and return delta * f(beta). The
// defining predicate is re-verified; deterministic reroutes handle stray
// intersections before giving up.
inline TranslationArc build_translation_arc(const PlaneMapSpec& m, Point2 z,
                                            const PolyRegion& seed_disk, const GeomTol& tol = {},
                                            const ArcBuildOptions& opts = {}) {
    if (dist(eval_map(m, z), z) <= tol.eps)
        throw NoFreeScale("build_translation_arc: base point is fixed");
    if (point_in_region(z, seed_disk, tol) != PointLocation::Inside)
        throw InvalidRegion("build_translation_arc: z not inside the seed disk");

    // --- locate the critical scale ------------------------------------
    auto verdict_at = [&](double r) { return is_free(m, scale_region(seed_disk, z, r), tol); };
    double r_lo = 1.0;
    FreeVerdict v = verdict_at(r_lo);
    while (v.verdict != Freeness::Free && r_lo > 1e-6) {
        r_lo *= 0.5;
        v = verdict_at(r_lo);
    }
    if (v.verdict != Freeness::Free)
        throw NoFreeScale("build_translation_arc: no free scale around z");
    double r_hi = r_lo;
    for (int i = 0; i < 60; ++i) {
        r_hi *= 2.0;
        if (verdict_at(r_hi).verdict != Freeness::Free) break;
        r_lo = r_hi;
    }
    if (r_hi == r_lo) throw NoFreeScale("build_translation_arc: image never touches the disk");
    for (int i = 0; i < 40; ++i) {
        const double rm = 0.5 * (r_lo + r_hi);
        if (verdict_at(rm).verdict == Freeness::Free)
            r_lo = rm;
        else
            r_hi = rm;
    }

    TranslationArc ta;
    ta.base = z;
    double r_free = 0.9 * r_lo;
    for (int i = 0;; ++i, r_free *= 0.9) {
        if (i == 20) throw NoFreeScale("build_translation_arc: free disk unverifiable");
        ta.free_disk = scale_region(seed_disk, z, r_free);
        if (is_free(m, ta.free_disk, tol).verdict == Freeness::Free) break;
    }
    ta.critical_disk = scale_region(seed_disk, z, r_hi);
    const PolyRegion& D = ta.critical_disk;

    // --- 2-periodic base: the bracket touch degenerates to the fixed point
    // midway between z and f(z), so route around it directly. The accepted
    // arc meets its image at both endpoints. Germ constraints do not arise
    // here (ladder orbits are not periodic).
    if (dist(eval_iterate(m, z, 2), z) <= std::max(10 * tol.eps, 3 * m.approx_error) &&
        !opts.incoming_tail && !opts.outgoing_tail) {
        const Point2 fz = eval_map(m, z);
        const PlaneMapSpec minv = map_inverse(m);
        for (const auto& route : detail::route_candidates(z, fz)) {
            TranslationArc cand = ta;
            cand.arc = route;
            cand.witness_y = route.point_at(0.5);
            cand.delta = route.sub_chain(0.0, 0.5);
            cand.image_beta = route.sub_chain(0.5, 1.0);
            cand.beta = image_polychain(minv, cand.image_beta, tol).chain;
            if (check_translation_arc(m, cand, tol).ok()) return cand;
        }
        throw WitnessNotFound("build_translation_arc: no periodic-case route survived");
    }

    // --- witness y on the bracket boundary ----------------------------
    {
        const ImageChain imgC = image_polychain(m, D.outer, tol);
        const auto hits = chain_intersections(D.outer, imgC.chain, tol);
        if (!hits.empty()) {
            const auto first = std::min_element(
                hits.begin(), hits.end(),
                [](const ChainHit& a, const ChainHit& b) { return a.param_a < b.param_a; });
            ta.witness_y = first->point;
        } else {
            const ChainClosest c = chain_closest(D.outer, imgC.chain);
            if (c.distance == std::numeric_limits<double>::max())
                throw WitnessNotFound("build_translation_arc: no boundary approach");
            ta.witness_y = c.point_a;
        }
    }
    const Point2 y = ta.witness_y;
    Point2 fiy = eval_inverse(m, y);
    for (int i = 0; i < 60 && point_in_region(fiy, D, tol) == PointLocation::Outside; ++i)
        fiy = z + 0.98 * (fiy - z);

    // --- germ pieces ----------------------------------------------------
    const double clearance = region_depth(D, z, tol);
    auto fit_germ = [&](const PolyChain& tail) -> PolyChain {
        double want = opts.germ_target > 0 ? opts.germ_target : 0.2 * clearance;
        want = std::min(want, 0.3 * clearance);
        for (int i = 0; i < 12 && want >= 4 * tol.eps; ++i, want *= 0.5) {
            PolyChain g = detail::tail_reversed(tail, want);
            if (detail::chain_in_region(D, g, tol)) return g;
        }
        throw WitnessNotFound("build_translation_arc: germ does not fit the critical disk");
    };
    PolyChain delta_prefix;  // starts at z
    if (opts.incoming_tail) delta_prefix = fit_germ(*opts.incoming_tail);
    PolyChain beta_suffix;  // reversed tail: will end beta at z
    if (opts.outgoing_tail) {
        PolyChain g = fit_germ(opts.outgoing_tail->reversed());  // chain starting at z
        beta_suffix = g.reversed();                              // ends at z
    }
    ta.germ_len = std::max(delta_prefix.length(), beta_suffix.length());

    // --- assemble and verify, rerouting deterministically ----------------
    const Point2 delta_from = delta_prefix.pts.empty() ? z : delta_prefix.pts.back();
    const Point2 beta_to = beta_suffix.pts.empty() ? z : beta_suffix.pts.front();
    const auto delta_tails = detail::route_candidates(delta_from, y);
    const auto beta_heads = detail::route_candidates(fiy, beta_to);
    for (const auto& bh : beta_heads) {
        if (!detail::chain_in_region(D, bh, tol)) continue;
        for (const auto& dt : delta_tails) {
            if (!detail::chain_in_region(D, dt, tol)) continue;
            PolyChain beta = beta_suffix.pts.empty() ? bh : chain_concat(bh, beta_suffix, tol.eps);
            PolyChain delta = delta_prefix.pts.empty() ? dt : chain_concat(delta_prefix, dt, tol.eps);
            if (!chain_is_simple(beta, tol) || !chain_is_simple(delta, tol)) continue;
            // beta and delta must meet at z only, else f(beta) re-enters delta's image
            {
                bool clean = true;
                for (const auto& h : chain_intersections(beta, delta, tol))
                    if (dist(h.point, z) > 4 * tol.eps) clean = false;
                if (!clean) continue;
            }
            const ImageChain fb = image_polychain(m, beta, tol);
            PolyChain arc = delta;
            if (dist(arc.pts.back(), fb.chain.pts.front()) > tol.eps)
                arc.pts.push_back(fb.chain.pts.front());  // eps-scale connector at y
            arc.pts.insert(arc.pts.end(), fb.chain.pts.begin() + 1, fb.chain.pts.end());
            TranslationArc cand = ta;
            cand.beta = beta;
            cand.delta = delta;
            cand.image_beta = fb.chain;
            cand.arc = arc;
            if (check_translation_arc(m, cand, tol).ok()) return cand;
        }
    }
    throw WitnessNotFound("build_translation_arc: no candidate passed the arc predicate");
}

// ======================================================= recurrence witness

struct RecurrenceWitness {
    PolyRegion disk;
    int power = 0;
};

namespace detail {

// Free disk around a non-fixed point, shrunk until certified.
inline std::optional<PolyRegion> free_disk_at(const PlaneMapSpec& m, Point2 z,
                                              const GeomTol& tol) {
    double r = 0.45 * dist(eval_map(m, z), z);
    for (int i = 0; i < 14 && r > 2 * tol.eps; ++i, r *= 0.5) {
        PolyRegion d = make_disk(z, r);
        if (is_free(m, d, tol).verdict == Freeness::Free) return d;
    }
    return std::nullopt;
}

// Free capsule containing the chain, shrunk until certified.
inline std::optional<PolyRegion> free_capsule_around(const PlaneMapSpec& m, const PolyChain& c,
                                                     double w0, const GeomTol& tol) {
    double w = w0;
    for (int i = 0; i < 14 && w > 2 * tol.eps; ++i, w *= 0.5) {
        PolyRegion cap;
        try {
            cap = make_capsule(c, w);
            validate_region(cap, tol);
        } catch (const GeometryError&) {
            continue;
        }
        if (is_free(m, cap, tol).verdict == Freeness::Free) return cap;
    }
    return std::nullopt;
}

}  // namespace detail

// Brouwer's recurrence criterion on a candidate arc: if the arc meets a far
// iterate of itself (k in [2, k_max]), extract the subarc from z' to f^k(z'),
// fatten it to a free disk V with f^k(V) meeting V, and return the witness.
// Near-periodic base points short-circuit to a disk around z.
inline std::optional<RecurrenceWitness> brouwer_recurrence_test(const PlaneMapSpec& m,
                                                                const TranslationArc& ta,
                                                                int k_max,
                                                                const GeomTol& tol = {}) {
    const Point2 z = ta.base;
    for (int j = 2; j <= k_max; ++j) {
        if (dist(eval_iterate(m, z, j), z) > 10 * tol.eps) continue;
        if (auto disk = detail::free_disk_at(m, z, tol)) {
            if (iterate_meets(m, *disk, j, tol).verdict == Freeness::NotFree)
                return RecurrenceWitness{*disk, j};
        }
    }
    for (int k = 2; k <= k_max; ++k) {
        const PlaneMapSpec mk = map_power(m, k);
        const ImageChain img = image_polychain(mk, ta.arc, tol, tol.eps / 4);
        auto hits = chain_intersections(ta.arc, img.chain, tol);
        if (hits.empty()) {
            const ChainClosest c = chain_closest(ta.arc, img.chain);
            if (c.distance + img.err_bound <= 2 * tol.eps)
                hits.push_back({c.param_a, c.param_b, 0.5 * (c.point_a + c.point_b)});
        }
        std::sort(hits.begin(), hits.end(),
                  [](const ChainHit& a, const ChainHit& b) { return a.param_a < b.param_a; });
        for (const auto& hit : hits) {
            const double snap_tol = std::max(10 * tol.eps, 3 * img.err_bound);
            // pull the meeting point back to the arc; the inverse may expand,
            // so only reject wildly off-arc candidates here
            const auto [pz, dz] =
                detail::chain_nearest_param(ta.arc, eval_iterate(m, hit.point, -k));
            if (dz > 0.05 * std::max(1.0, ta.arc.length())) continue;
            const Point2 zp = ta.arc.point_at(pz);
            const auto [pw, dw] = detail::chain_nearest_param(ta.arc, eval_iterate(m, zp, k));
            if (dw > snap_tol) continue;
            std::optional<PolyRegion> V;
            const double lo = std::min(pz, pw), hi = std::max(pz, pw);
            if ((hi - lo) * ta.arc.length() < 4 * tol.eps) {
                V = detail::free_disk_at(m, zp, tol);
            } else {
                const PolyChain sub = ta.arc.sub_chain(lo, hi);
                V = detail::free_capsule_around(m, sub, 0.2 * sub.length(), tol);
            }
            if (!V) continue;
            if (iterate_meets(m, *V, k, tol).verdict == Freeness::NotFree)
                return RecurrenceWitness{*V, k};
        }
    }
    return std::nullopt;
}

// ======================================================== free disk chains

struct DiskChain {
    std::vector<PolyRegion> disks;  // cyclic
    std::vector<int> powers;        // k_j >= 1
};

struct DiskChainReport {
    bool ok = true;
    std::vector<std::string> issues;
    void fail(std::string s) {
        ok = false;
        issues.push_back(std::move(s));
    }
};

// Independent re-verification of all three closed-chain invariants.
inline DiskChainReport verify_disk_chain(const PlaneMapSpec& m, const DiskChain& dc,
                                         const GeomTol& tol = {}) {
    DiskChainReport rep;
    const std::size_t r = dc.disks.size();
    if (r == 0 || dc.powers.size() != r) {
        rep.fail("empty chain or power count mismatch");
        return rep;
    }
    for (std::size_t j = 0; j < r; ++j) {
        if (dc.powers[j] < 1) rep.fail("power < 1 at " + std::to_string(j));
        if (is_free(m, dc.disks[j], tol).verdict != Freeness::Free)
            rep.fail("disk " + std::to_string(j) + " not certified free");
        for (std::size_t l = j + 1; l < r; ++l) {
            const auto g = region_gap(dc.disks[j], dc.disks[l], tol);
            if (g.distance <= tol.eps)
                rep.fail("disks " + std::to_string(j) + "," + std::to_string(l) + " not disjoint");
        }
        const auto v = iterate_pair_meets(m, dc.disks[j], dc.powers[j], dc.disks[(j + 1) % r], tol);
        if (v.verdict != Freeness::NotFree)
            rep.fail("overlap f^k(V_" + std::to_string(j) + ") with next not certified");
    }
    return rep;
}

namespace detail {

// A point robustly inside both the approximate image (beyond its error) and
// the target region. Starts from the raw gap witness and probes nearby.
inline std::optional<Point2> deep_overlap_witness(const PolyRegion& img, double err,
                                                  const PolyRegion& target, Point2 raw,
                                                  const GeomTol& tol) {
    auto good = [&](Point2 p) {
        return region_depth(img, p, tol) > err + tol.eps &&
               region_depth(target, p, tol) > tol.eps;
    };
    if (good(raw)) return raw;
    try {
        const Point2 p = interior_probe(target, tol);
        if (region_depth(img, p, tol) > err + tol.eps) return p;
    } catch (const InvalidRegion&) {
    }
    try {
        const Point2 p = interior_probe(img, tol);
        if (region_depth(target, p, tol) > tol.eps) return p;
    } catch (const InvalidRegion&) {
    }
    for (double rad : {2.0, 4.0, 8.0, 16.0}) {
        for (int dir = 0; dir < 8; ++dir) {
            const double a = dir * M_PI / 4;
            const Point2 p = raw + (rad * (err + tol.eps)) * Point2{std::cos(a), std::sin(a)};
            if (good(p)) return p;
        }
    }
    return std::nullopt;
}

}  // namespace detail

// From free connected pieces with iterate overlaps, produce a genuine free
// disks closed chain: pick overlap points, connect them inside each piece,
// fatten the connecting paths to disjoint free capsules.
inline DiskChain chain_from_free_sets(const PlaneMapSpec& m, const std::vector<PolyRegion>& sigma,
                                      std::vector<int> powers, const GeomTol& tol = {}) {
    const std::size_t r = sigma.size();
    if (r == 0 || powers.size() != r) throw PathNotFound("chain_from_free_sets: bad inputs");
    for (std::size_t j = 0; j < r; ++j)
        if (is_free(m, sigma[j], tol).verdict != Freeness::Free)
            throw PathNotFound("chain_from_free_sets: input piece not certified free");

    // minimal powers and overlap points z_j in Sigma_j with f^{k_j}(z_j) in Sigma_{j+1}
    std::vector<Point2> z(r);
    for (std::size_t j = 0; j < r; ++j) {
        const PolyRegion& next = sigma[(j + 1) % r];
        bool found = false;
        for (int k = 1; k <= powers[j] && !found; ++k) {
            const PlaneMapSpec mk = map_power(m, k);
            double err = 0.0;
            PolyRegion img;
            try {
                img = image_region(mk, sigma[j], tol, tol.eps / 4, &err);
            } catch (const GeometryError&) {
                continue;
            }
            const RegionGap g = region_gap(img, next, tol);
            if (g.distance > 0) continue;
            const auto w = detail::deep_overlap_witness(img, err, next, g.on_a, tol);
            if (!w) continue;
            powers[j] = k;
            z[j] = eval_iterate(m, *w, -k);
            // pull z_j inside Sigma_j if the inverse roundtrip drifted out
            if (point_in_region(z[j], sigma[j], tol) == PointLocation::Outside) {
                const Point2 anchor = interior_probe(sigma[j], tol);
                for (int i = 0; i < 50 && point_in_region(z[j], sigma[j], tol) ==
                                              PointLocation::Outside;
                     ++i)
                    z[j] = lerp(z[j], anchor, 0.1);
            }
            found = true;
        }
        if (!found)
            throw PathNotFound("chain_from_free_sets: overlap of piece " + std::to_string(j) +
                               " with its successor not certified");
    }

    // connecting paths gamma_j inside Sigma_j from f^{k_{j-1}}(z_{j-1}) to z_j
    std::vector<PolyChain> paths(r);
    for (std::size_t j = 0; j < r; ++j) {
        const std::size_t prev = (j + r - 1) % r;
        Point2 enter = eval_iterate(m, z[prev], powers[prev]);
        if (point_in_region(enter, sigma[j], tol) == PointLocation::Outside) {
            const Point2 anchor = interior_probe(sigma[j], tol);
            for (int i = 0; i < 50 &&
                            point_in_region(enter, sigma[j], tol) == PointLocation::Outside;
                 ++i)
                enter = lerp(enter, anchor, 0.1);
        }
        if (dist(enter, z[j]) < 4 * tol.eps) {
            paths[j].pts = {z[j]};
        } else {
            paths[j] = region_path(sigma[j], enter, z[j], tol);
        }
    }

    // fatten to pairwise disjoint free capsules
    double width = std::numeric_limits<double>::max();
    for (std::size_t j = 0; j < r; ++j) {
        for (const auto& p : paths[j].pts) width = std::min(width, region_depth(sigma[j], p, tol));
        for (std::size_t l = j + 1; l < r; ++l) {
            if (paths[j].pts.size() < 2 || paths[l].pts.size() < 2) {
                // point-paths: use plain point-chain distances
                for (const auto& p : paths[j].pts)
                    width = std::min(width, 0.5 * point_chain_dist(p, paths[l]));
            } else {
                width = std::min(width, 0.5 * chain_closest(paths[j], paths[l]).distance);
            }
        }
    }
    width = std::min(width * 0.8, 0.1);
    for (int round = 0; round < 12; ++round, width *= 0.5) {
        if (width < 2 * tol.eps) break;
        DiskChain dc;
        dc.powers = powers;
        bool built = true;
        for (std::size_t j = 0; j < r && built; ++j) {
            try {
                if (paths[j].pts.size() < 2)
                    dc.disks.push_back(make_disk(paths[j].pts.at(0), width));
                else
                    dc.disks.push_back(make_capsule(paths[j], width));
                validate_region(dc.disks.back(), tol);
            } catch (const GeometryError&) {
                built = false;
            }
        }
        if (!built) continue;
        if (verify_disk_chain(m, dc, tol).ok) return dc;
    }
    throw PathNotFound("chain_from_free_sets: fattening failed at resolution");
}

// ============================================================== arc ladders

// Translation arcs along one orbit, k in [-K, K], with germ coincidence at
// every interior sample: consecutive arcs share an initial piece of length
// >= 4*eps at their common orbit point.
struct ArcLadder {
    int orbit_index = 0;
    int K = 0;
    std::vector<TranslationArc> arcs;   // index k + K
    std::vector<PolyRegion> scaffolds;  // V^k, same indexing

    const TranslationArc& arc(int k) const {
        const int i = k + K;
        if (i < 0 || i >= static_cast<int>(arcs.size()))
            throw GeometryError("arc ladder index out of range");
        return arcs[static_cast<std::size_t>(i)];
    }
};

namespace detail {

// Scaffold disk around two consecutive orbit points avoiding the fixed-point
// exclusion disks. Tries the straight spine first, then the two bows, then
// the image-crossing construction for the trimmed candidates.
inline PolyRegion scaffold_disk(const PlaneMapSpec& m, Point2 a, Point2 b,
                                const std::vector<Point2>& fixed_pts, const GeomTol& tol) {
    const double excl = 10 * tol.eps;
    const double len = dist(a, b);
    auto clearance_of = [&](const PolyChain& spine) {
        double c = std::numeric_limits<double>::max();
        for (std::size_t i = 0; i + 1 < spine.pts.size(); ++i)
            for (const auto& fp : fixed_pts) {
                double t = 0.0;
                c = std::min(c, point_segment_dist(fp, spine.pts[i], spine.pts[i + 1], &t));
            }
        return c;
    };
    for (const auto& spine : route_candidates(a, b)) {
        const double c = clearance_of(spine);
        if (c <= excl * 2) continue;
        const double w = std::min(len / 4, (c - excl) * 0.8);
        if (w < 50 * tol.eps) continue;
        PolyRegion cap = make_capsule(spine, w);
        validate_region(cap, tol);
        return cap;
    }
    // every route blocked: trim candidates at their first exclusion entry and
    // look for an image crossing f(delta'_{j1}) with delta'_{j2}
    auto trimmed = [&](const PolyChain& spine) {
        PolyChain t;
        for (std::size_t i = 0; i < spine.pts.size(); ++i) {
            bool blocked = false;
            for (const auto& fp : fixed_pts)
                if (i + 1 < spine.pts.size()) {
                    double u = 0.0;
                    if (point_segment_dist(fp, spine.pts[i], spine.pts[i + 1], &u) <= excl)
                        blocked = true;
                }
            t.pts.push_back(spine.pts[i]);
            if (blocked) break;
        }
        return t;
    };
    const auto cands = route_candidates(a, b);
    for (const auto& c1 : cands) {
        const PolyChain d1 = trimmed(c1);
        if (d1.pts.size() < 2) continue;
        const ImageChain fd1 = image_polychain(m, d1, tol);
        for (const auto& c2 : cands) {
            const PolyChain d2 = trimmed(c2);
            if (d2.pts.size() < 2) continue;
            const auto hits = chain_intersections(d2, fd1.chain, tol);
            if (hits.empty()) continue;
            const auto& h = hits.front();
            // spine: along delta_2 to the crossing, then back along f(delta_1) to b
            PolyChain spine = d2.sub_chain(0.0, std::max(h.param_a, 1e-9));
            const PolyChain back = fd1.chain.sub_chain(0.0, std::max(h.param_b, 1e-9)).reversed();
            if (dist(spine.pts.back(), back.pts.front()) > 4 * tol.eps) continue;
            spine.pts.insert(spine.pts.end(), back.pts.begin() + 1, back.pts.end());
            if (spine.pts.size() < 2 || !chain_is_simple(spine, tol)) continue;
            const double c = clearance_of(spine);
            if (c <= excl * 2) continue;
            const double w = std::min(len / 4, (c - excl) * 0.8);
            if (w < 50 * tol.eps) continue;
            PolyRegion cap = make_capsule(spine, w);
            validate_region(cap, tol);
            return cap;
        }
    }
    throw PathNotFound("scaffold_disk: all candidate routes blocked by fixed points");
}

}  // namespace detail

// Build the ladder: k = 0..K forward (delta inherits the germ from the
// previous f(beta)), then k = -1..-K backward (beta ends along the pullback
// of the next delta). Endpoint drift toward the declared limits is checked.
inline ArcLadder build_arc_ladder(const PlaneMapSpec& m, const Orbit& orbit, int K,
                                  const GeomTol& tol = {},
                                  const std::vector<Point2>& fixed_pts = {},
                                  int orbit_index = 0) {
    if (orbit.truncation < K + 1)
        throw GeometryError("build_arc_ladder: orbit truncation must exceed K");
    if (orbit.alpha && dist(orbit.sample(-K), *orbit.alpha) > orbit.convergence_tol)
        throw ConvergenceNotObserved("ladder start has not approached the backward limit");
    if (orbit.omega && dist(orbit.sample(K + 1), *orbit.omega) > orbit.convergence_tol)
        throw ConvergenceNotObserved("ladder end has not approached the forward limit");
    ArcLadder lad;
    lad.orbit_index = orbit_index;
    lad.K = K;
    lad.arcs.resize(2 * static_cast<std::size_t>(K) + 1);
    lad.scaffolds.resize(lad.arcs.size());

    for (const auto& fp : fixed_pts)
        for (int k = -K; k <= K + 1; ++k)
            if (dist(orbit.sample(k), fp) <= 20 * tol.eps)
                throw NoFreeScale("build_arc_ladder: orbit sample inside exclusion disk");

    auto build_at = [&](int k, const ArcBuildOptions& o) {
        const Point2 a = orbit.sample(k), b = orbit.sample(k + 1);
        PolyRegion V = detail::scaffold_disk(m, a, b, fixed_pts, tol);
        lad.scaffolds[static_cast<std::size_t>(k + K)] = V;
        lad.arcs[static_cast<std::size_t>(k + K)] = build_translation_arc(m, a, V, tol, o);
    };

    build_at(0, {});
    for (int k = 1; k <= K; ++k) {
        ArcBuildOptions o;
        o.incoming_tail = &lad.arc(k - 1).image_beta;
        build_at(k, o);
    }
    const PlaneMapSpec minv = map_inverse(m);
    for (int k = -1; k >= -K; --k) {
        // pullback of the next arc's initial piece: a chain starting at z^k
        const PolyChain& next_delta = lad.arc(k + 1).delta;
        const PolyChain prefix = next_delta.sub_chain(0.0, 0.25);
        const ImageChain pullback = image_polychain(minv, prefix, tol);
        ArcBuildOptions o;
        o.outgoing_tail = &pullback.chain;
        build_at(k, o);
    }
    return lad;
}

}  // namespace brickdyn
