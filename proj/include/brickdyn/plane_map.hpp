#pragma once

// Orientation-preserving plane/disk homeomorphisms as evaluatable specs.
//
// A map spec carries forward and inverse evaluators, a domain tag, a
// Lipschitz estimate over the region of interest and a calibrated evaluation
// error bound. Flow maps are integrated with fixed-step RK4; the step error
// is calibrated at construction (Richardson) and must sit far below the
// working eps, so downstream predicates can fold it into their tolerance.

#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "brickdyn/geometry.hpp"

namespace brickdyn {

using cpx = std::complex<double>;

inline cpx to_cpx(Point2 p) { return {p.x, p.y}; }
inline Point2 to_point(cpx z) { return {z.real(), z.imag()}; }

enum class MapDomain { Plane, Disk };

struct DomainEscape : GeometryError {
    using GeometryError::GeometryError;
};
struct OrientationViolation : GeometryError {
    using GeometryError::GeometryError;
};

struct PlaneMapSpec {
    std::string name;
    MapDomain domain = MapDomain::Plane;
    std::function<Point2(Point2)> forward;
    std::function<Point2(Point2)> inverse;
    double lipschitz = 1.0;          // over the working region, with headroom
    double approx_error = 0.0;       // calibrated forward/inverse eval error
    // Continuous extension to selected boundary points (disk maps only).
    std::vector<std::pair<Point2, Point2>> boundary_ext;
};

inline void check_domain(const PlaneMapSpec& m, Point2 p) {
    if (m.domain == MapDomain::Disk && norm(p) >= 1.0)
        throw DomainEscape("disk map evaluated at |z| >= 1");
}

inline Point2 eval_map(const PlaneMapSpec& m, Point2 p) {
    check_domain(m, p);
    return m.forward(p);
}

inline Point2 eval_inverse(const PlaneMapSpec& m, Point2 p) {
    check_domain(m, p);
    return m.inverse(p);
}

inline Point2 eval_iterate(const PlaneMapSpec& m, Point2 p, int k) {
    for (; k > 0; --k) p = eval_map(m, p);
    for (; k < 0; ++k) p = eval_inverse(m, p);
    return p;
}

// ================================================================= builtins

inline PlaneMapSpec map_translation(double dx, double dy) {
    PlaneMapSpec m;
    m.name = "translation(" + std::to_string(dx) + "," + std::to_string(dy) + ")";
    m.domain = MapDomain::Plane;
    m.forward = [dx, dy](Point2 p) { return Point2{p.x + dx, p.y + dy}; };
    m.inverse = [dx, dy](Point2 p) { return Point2{p.x - dx, p.y - dy}; };
    m.lipschitz = 1.0;
    return m;
}

// z -> a z + b with a != 0; orientation preserving for any nonzero a.
inline PlaneMapSpec map_affine(cpx a, cpx b, const std::string& label = "affine") {
    if (std::abs(a) == 0.0) throw GeometryError("affine map needs a != 0");
    PlaneMapSpec m;
    m.name = label;
    m.domain = MapDomain::Plane;
    m.forward = [a, b](Point2 p) { return to_point(a * to_cpx(p) + b); };
    m.inverse = [a, b](Point2 p) { return to_point((to_cpx(p) - b) / a); };
    m.lipschitz = std::abs(a);
    return m;
}

inline PlaneMapSpec map_rotation(double theta) {
    auto m = map_affine(std::polar(1.0, theta), 0.0, "rotation(" + std::to_string(theta) + ")");
    return m;
}

inline PlaneMapSpec map_contraction(double factor) {
    return map_affine(factor, 0.0, "contraction(" + std::to_string(factor) + ")");
}

// Disk automorphism z -> e^{i theta} (z - a) / (1 - conj(a) z), |a| < 1.
inline PlaneMapSpec map_mobius_disk(cpx a, double theta) {
    if (std::abs(a) >= 1.0) throw GeometryError("mobius pole must lie inside the disk");
    PlaneMapSpec m;
    m.name = "mobius";
    m.domain = MapDomain::Disk;
    const cpx rot = std::polar(1.0, theta);
    m.forward = [a, rot](Point2 p) {
        const cpx z = to_cpx(p);
        return to_point(rot * (z - a) / (1.0 - std::conj(a) * z));
    };
    m.inverse = [a, rot](Point2 p) {
        const cpx w = to_cpx(p) / rot;
        return to_point((w + a) / (1.0 + std::conj(a) * w));
    };
    m.lipschitz = (1.0 + std::abs(a)) / (1.0 - std::abs(a));
    return m;
}

// ------------------------------------------------------------- flow maps

// Polynomial vector field: sum of c * z^j * conj(z)^k terms.
struct FieldTerm {
    cpx c;
    int zpow = 0;
    int zbarpow = 0;
};

struct PolyField {
    std::vector<FieldTerm> terms;

    cpx operator()(cpx z) const {
        cpx out = 0.0;
        const cpx zb = std::conj(z);
        for (const auto& t : terms) {
            cpx v = t.c;
            for (int i = 0; i < t.zpow; ++i) v *= z;
            for (int i = 0; i < t.zbarpow; ++i) v *= zb;
            out += v;
        }
        return out;
    }
};

namespace detail {
inline cpx rk4_flow(const PolyField& f, cpx z, double time, int steps) {
    const double h = time / steps;
    for (int i = 0; i < steps; ++i) {
        const cpx k1 = f(z);
        const cpx k2 = f(z + 0.5 * h * k1);
        const cpx k3 = f(z + 0.5 * h * k2);
        const cpx k4 = f(z + h * k3);
        z += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return z;
}
}  // namespace detail

// Time-`time` map of a polynomial field, fixed-step RK4 (256 steps per unit
// time). The construction calibrates the step error by Richardson comparison
// on a probe grid and stores the bound.
inline PlaneMapSpec map_flow(const PolyField& field, double time = 1.0,
                             MapDomain domain = MapDomain::Disk,
                             const std::string& label = "flow") {
    PlaneMapSpec m;
    m.name = label;
    m.domain = domain;
    const int steps = std::max(1, static_cast<int>(std::lround(256.0 * std::abs(time))));
    m.forward = [field, time, steps](Point2 p) {
        return to_point(detail::rk4_flow(field, to_cpx(p), time, steps));
    };
    m.inverse = [field, time, steps](Point2 p) {
        return to_point(detail::rk4_flow(field, to_cpx(p), -time, steps));
    };
    // Richardson calibration over the unit disk (or the unit box for plane
    // fields); RK4 halving gains a factor 16, so diff/15 estimates the fine
    // error. A safety factor covers spots the probe grid missed.
    double worst = 0.0;
    double worst_lip = 1.0;
    for (int ix = -6; ix <= 6; ++ix) {
        for (int iy = -6; iy <= 6; ++iy) {
            const cpx z{ix / 6.5, iy / 6.5};
            if (domain == MapDomain::Disk && std::abs(z) >= 0.995) continue;
            const cpx fine = detail::rk4_flow(field, z, time, steps);
            const cpx coarse = detail::rk4_flow(field, z, time, std::max(1, steps / 2));
            worst = std::max(worst, std::abs(fine - coarse) / 15.0);
            const double h = 1e-6;
            const cpx fx = detail::rk4_flow(field, z + cpx{h, 0}, time, steps);
            const cpx fy = detail::rk4_flow(field, z + cpx{0, h}, time, steps);
            worst_lip = std::max({worst_lip, std::abs(fx - fine) / h, std::abs(fy - fine) / h});
        }
    }
    m.approx_error = worst * 10.0;
    m.lipschitz = worst_lip * 1.25;
    return m;
}

// Rigid rotation by angle(r): full strength inside r_full, smoothly damped
// to zero at r_zero, identity outside. Radius is preserved, so the inverse
// is exact.
inline PlaneMapSpec map_core_twist(double theta, double r_full, double r_zero) {
    if (!(0.0 < r_full && r_full < r_zero)) throw GeometryError("core twist needs 0 < r_full < r_zero");
    PlaneMapSpec m;
    m.name = "core_twist";
    m.domain = MapDomain::Plane;
    auto profile = [theta, r_full, r_zero](double r) {
        if (r <= r_full) return theta;
        if (r >= r_zero) return 0.0;
        const double s = (r - r_full) / (r_zero - r_full);
        const double w = 1.0 - s * s * (3.0 - 2.0 * s);  // smoothstep down
        return theta * w;
    };
    m.forward = [profile](Point2 p) {
        const double r = norm(p);
        return to_point(to_cpx(p) * std::polar(1.0, profile(r)));
    };
    m.inverse = [profile](Point2 p) {
        const double r = norm(p);
        return to_point(to_cpx(p) * std::polar(1.0, -profile(r)));
    };
    // d(theta)/dr <= 1.5 theta / (r_zero - r_full); crude but safe bound.
    m.lipschitz = 1.0 + r_zero * 1.5 * std::abs(theta) / (r_zero - r_full);
    return m;
}

// first applied, then second.
inline PlaneMapSpec map_compose(const PlaneMapSpec& first, const PlaneMapSpec& second,
                                const std::string& label = "") {
    PlaneMapSpec m;
    m.name = label.empty() ? second.name + "*" + first.name : label;
    m.domain = (first.domain == MapDomain::Disk || second.domain == MapDomain::Disk)
                   ? MapDomain::Disk
                   : MapDomain::Plane;
    auto f1 = first.forward, f2 = second.forward;
    auto i1 = first.inverse, i2 = second.inverse;
    m.forward = [f1, f2](Point2 p) { return f2(f1(p)); };
    m.inverse = [i1, i2](Point2 p) { return i1(i2(p)); };
    m.lipschitz = first.lipschitz * second.lipschitz;
    m.approx_error = first.approx_error * second.lipschitz + second.approx_error;
    return m;
}

// The same map run backwards. The declared lipschitz constant is kept: for
// all builtins it bounds both directions.
inline PlaneMapSpec map_inverse(const PlaneMapSpec& m) {
    PlaneMapSpec out = m;
    out.name = m.name + "^-1";
    std::swap(out.forward, out.inverse);
    return out;
}

// f^k as a single map spec (k may be negative). approx_error accumulates
// through the chain of evaluations.
inline PlaneMapSpec map_power(const PlaneMapSpec& m, int k) {
    PlaneMapSpec out = k < 0 ? map_inverse(m) : m;
    const int n = std::abs(k);
    out.name = m.name + "^" + std::to_string(k);
    auto base = out.forward;
    auto base_inv = out.inverse;
    out.forward = [base, n](Point2 p) {
        for (int i = 0; i < n; ++i) p = base(p);
        return p;
    };
    out.inverse = [base_inv, n](Point2 p) {
        for (int i = 0; i < n; ++i) p = base_inv(p);
        return p;
    };
    const double L = std::max(1.0, m.lipschitz);
    out.lipschitz = std::pow(m.lipschitz, n);
    out.approx_error = m.approx_error * n * std::pow(L, n > 0 ? n - 1 : 0);
    return out;
}

// ================================================================== orbits

struct Orbit {
    Point2 base;
    int truncation = 0;                 // K
    std::vector<Point2> samples;        // index k + K, k in [-K, K]
    std::optional<Point2> alpha;        // backward limit, when declared
    std::optional<Point2> omega;        // forward limit, when declared
    double convergence_tol = 0.05;

    Point2 sample(int k) const {
        const int i = k + truncation;
        if (i < 0 || i >= static_cast<int>(samples.size()))
            throw GeometryError("orbit sample index out of range");
        return samples[static_cast<std::size_t>(i)];
    }
};

inline Orbit make_orbit(const PlaneMapSpec& m, Point2 base, int truncation) {
    Orbit o;
    o.base = base;
    o.truncation = truncation;
    o.samples.assign(2 * static_cast<std::size_t>(truncation) + 1, Point2{});
    o.samples[static_cast<std::size_t>(truncation)] = base;
    Point2 fwd = base, bwd = base;
    for (int k = 1; k <= truncation; ++k) {
        fwd = eval_map(m, fwd);
        bwd = eval_inverse(m, bwd);
        o.samples[static_cast<std::size_t>(truncation + k)] = fwd;
        o.samples[static_cast<std::size_t>(truncation - k)] = bwd;
    }
    return o;
}

// ======================================================== curve image

struct ImageChain {
    PolyChain chain;
    double err_bound = 0.0;  // estimated Hausdorff error of the approximation
};

// Image of a polyline under the map, refined until the midpoint deviation
// test passes: |f(mid) - midpoint_of_images| <= target/2 per span.
inline ImageChain image_polychain(const PlaneMapSpec& m, const PolyChain& src,
                                  const GeomTol& tol = {}, double target = 0.0) {
    if (target <= 0.0) target = tol.eps * 0.5;
    ImageChain out;
    out.chain.closed = src.closed;
    if (src.pts.empty()) return out;

    struct Node {
        Point2 pre;
        Point2 img;
    };
    auto emit = [&](const Node& n) { out.chain.pts.push_back(n.img); };

    // Recursive bisection of one source span, depth-limited.
    std::function<void(Node, Node, int)> refine = [&](Node a, Node b, int depth) {
        const Point2 pre_mid = lerp(a.pre, b.pre, 0.5);
        const Point2 img_mid = eval_map(m, pre_mid);
        const double dev = dist(img_mid, lerp(a.img, b.img, 0.5));
        if (dev <= target * 0.5 || depth >= tol.max_depth) {
            out.err_bound = std::max(out.err_bound, dev * 2.0 + m.approx_error);
            emit(Node{pre_mid, img_mid});
            return;
        }
        Node mid{pre_mid, img_mid};
        refine(a, mid, depth + 1);
        emit(mid);
        refine(mid, b, depth + 1);
    };

    const std::size_t nseg = src.segment_count();
    Node first{src.pts.front(), eval_map(m, src.pts.front())};
    emit(first);
    Node prev = first;
    for (std::size_t i = 0; i < nseg; ++i) {
        Node next{src.seg_b(i), eval_map(m, src.seg_b(i))};
        refine(prev, next, 0);
        if (!(src.closed && i + 1 == nseg)) emit(next);
        prev = next;
    }
    return out;
}

inline PolyRegion image_region(const PlaneMapSpec& m, const PolyRegion& r,
                               const GeomTol& tol = {}, double target = 0.0,
                               double* err_out = nullptr) {
    PolyRegion out;
    ImageChain oc = image_polychain(m, r.outer, tol, target);
    out.outer = std::move(oc.chain);
    out.outer.closed = true;
    double err = oc.err_bound;
    for (const auto& h : r.holes) {
        ImageChain hc = image_polychain(m, h, tol, target);
        hc.chain.closed = true;
        out.holes.push_back(std::move(hc.chain));
        err = std::max(err, hc.err_bound);
    }
    normalize_orientation(out);
    if (err_out) *err_out = err;
    return out;
}

// ===================================================== orientation / fixed pts

// Probe triangles scattered over the box must keep their signed area sign.
inline bool check_orientation(const PlaneMapSpec& m, const BBox& window, int grid = 5,
                              const GeomTol& tol = {}) {
    const double w = window.hi.x - window.lo.x;
    const double h = window.hi.y - window.lo.y;
    const double s = 0.01 * std::min(w, h);
    for (int ix = 0; ix < grid; ++ix) {
        for (int iy = 0; iy < grid; ++iy) {
            Point2 p{window.lo.x + (ix + 0.5) * w / grid, window.lo.y + (iy + 0.5) * h / grid};
            if (m.domain == MapDomain::Disk && norm(p) + s * 2.0 >= 1.0) continue;
            Point2 a = p, b = p + Point2{s, 0}, c = p + Point2{0, s};
            Point2 fa = eval_map(m, a), fb = eval_map(m, b), fc = eval_map(m, c);
            const double before = cross(b - a, c - a);
            const double after = cross(fb - fa, fc - fa);
            if (after * before <= 0.0 && std::abs(after) > tol.eps * tol.eps) return false;
        }
    }
    return true;
}

struct FixedPointCandidate {
    Point2 location;
    double residual = 0.0;
};

// Grid scan for |f(p)-p| minima followed by damped Newton refinement with a
// finite-difference Jacobian. Results deduplicated and sorted (x, then y).
inline std::vector<FixedPointCandidate> locate_fixed_point_candidates(
    const PlaneMapSpec& m, const BBox& window, int grid = 48, const GeomTol& tol = {}) {
    std::vector<FixedPointCandidate> out;
    const double w = window.hi.x - window.lo.x;
    const double h = window.hi.y - window.lo.y;
    const double cell = std::max(w, h) / grid;
    auto displacement = [&](Point2 p) { return dist(eval_map(m, p), p); };
    auto inside = [&](Point2 p) {
        if (p.x < window.lo.x || p.x > window.hi.x || p.y < window.lo.y || p.y > window.hi.y)
            return false;
        return m.domain != MapDomain::Disk || norm(p) < 1.0 - 1e-9;
    };

    auto newton = [&](Point2 p) -> std::optional<FixedPointCandidate> {
        double res = displacement(p);
        for (int it = 0; it < 48; ++it) {
            if (res < tol.eps * 1e-4) break;
            const double fd = std::max(1e-7, res * 1e-3);
            const Point2 g = eval_map(m, p) - p;
            const Point2 gx = eval_map(m, {p.x + fd, p.y}) - Point2{p.x + fd, p.y};
            const Point2 gy = eval_map(m, {p.x, p.y + fd}) - Point2{p.x, p.y + fd};
            const double j11 = (gx.x - g.x) / fd, j21 = (gx.y - g.y) / fd;
            const double j12 = (gy.x - g.x) / fd, j22 = (gy.y - g.y) / fd;
            const double det = j11 * j22 - j12 * j21;
            if (std::abs(det) < 1e-14) return std::nullopt;
            Point2 step{(-g.x * j22 + g.y * j12) / det, (-g.x * j21 + g.y * j11) / det};
            double lambda = 1.0;
            for (int bt = 0; bt < 20; ++bt) {
                Point2 q = p + lambda * step;
                if (inside(q) && displacement(q) < res) {
                    p = q;
                    res = displacement(q);
                    break;
                }
                lambda *= 0.5;
                if (bt == 19) return std::nullopt;
            }
        }
        if (res >= tol.eps * 1e-2) return std::nullopt;
        return FixedPointCandidate{p, res};
    };

    for (int ix = 0; ix <= grid; ++ix) {
        for (int iy = 0; iy <= grid; ++iy) {
            Point2 p{window.lo.x + ix * w / grid, window.lo.y + iy * h / grid};
            if (!inside(p)) continue;
            if (displacement(p) > 2.0 * cell * std::max(1.0, m.lipschitz)) continue;
            if (auto c = newton(p)) {
                bool dup = false;
                for (const auto& e : out)
                    if (dist(e.location, c->location) < std::max(1e-5, 10.0 * tol.eps)) {
                        dup = true;
                        break;
                    }
                if (!dup) out.push_back(*c);
            }
        }
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return a.location.x != b.location.x ? a.location.x < b.location.x
                                            : a.location.y < b.location.y;
    });
    return out;
}

}  // namespace brickdyn
