#pragma once

// Order-theoretic layer over the brick digraph: deterministic linear
// extensions, prefix cuts with their repeller/attractor sides, connected-
// component classification, the scan locating where the repeller side takes
// over from the attractor side, per-orbit cut profiles, and verified
// order-respecting chains between regular bricks.

#include <algorithm>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "brickdyn/brick_dynamics.hpp"

namespace brickdyn {

// two characterizations of a component disagree; signals a resolution or
// truncation artifact, never a tolerated state
struct CharacterizationMismatch : GeometryError {
    using GeometryError::GeometryError;
};

// a cut classifies as both sides or neither; the dichotomy the scan relies
// on failed, typically because the window truncated an orbit ray
struct LemmaViolation : GeometryError {
    using GeometryError::GeometryError;
};

// the scan's single attractor-side -> repeller-side switch did not happen
struct NonMonotoneClassification : GeometryError {
    using GeometryError::GeometryError;
};

// marked orbit indices straddle a cut out of order, or their bricks scatter
// across components
struct NotACut : GeometryError {
    using GeometryError::GeometryError;
};

// a chain construction needed bricks outside the window (or outside the
// certified part of the order)
struct TruncationEscape : GeometryError {
    using GeometryError::GeometryError;
};

// ========================================================== linear extension

// Total order on bricks refining digraph reachability: b reachable from b'
// implies b' listed first.
struct LinearExtension {
    std::vector<int> sequence;  // permutation of 0..n-1
};

// Deterministic topological sort: among the available minima, the smallest
// brick id leaves first.
inline LinearExtension linear_extension(const BrickDigraph& d) {
    if (!d.acyclic) throw CyclicDigraph("linear_extension: digraph has a cycle");
    std::vector<int> indeg(static_cast<std::size_t>(d.nodes), 0);
    for (const auto& [u, v] : d.arcs) indeg[static_cast<std::size_t>(v)]++;
    std::priority_queue<int, std::vector<int>, std::greater<int>> ready;
    for (int v = 0; v < d.nodes; ++v)
        if (indeg[static_cast<std::size_t>(v)] == 0) ready.push(v);
    LinearExtension ext;
    ext.sequence.reserve(static_cast<std::size_t>(d.nodes));
    while (!ready.empty()) {
        const int u = ready.top();
        ready.pop();
        ext.sequence.push_back(u);
        for (int v : d.out[static_cast<std::size_t>(u)])
            if (--indeg[static_cast<std::size_t>(v)] == 0) ready.push(v);
    }
    if (static_cast<int>(ext.sequence.size()) != d.nodes)
        throw CyclicDigraph("linear_extension: digraph has a cycle");
    return ext;
}

namespace detail {

// position of each brick in the extension; validates the permutation
inline std::vector<int> extension_positions(const LinearExtension& ext, int nodes) {
    if (static_cast<int>(ext.sequence.size()) != nodes)
        throw GeometryError("extension does not cover the brick set");
    std::vector<int> pos(static_cast<std::size_t>(nodes), -1);
    for (int k = 0; k < nodes; ++k) {
        const int b = ext.sequence[static_cast<std::size_t>(k)];
        if (b < 0 || b >= nodes || pos[static_cast<std::size_t>(b)] >= 0)
            throw GeometryError("extension is not a permutation of the bricks");
        pos[static_cast<std::size_t>(b)] = k;
    }
    return pos;
}

inline void verify_extension(const BrickDigraph& d, const std::vector<int>& pos) {
    for (const auto& [u, v] : d.arcs)
        if (pos[static_cast<std::size_t>(u)] >= pos[static_cast<std::size_t>(v)])
            throw GeometryError("sequence is not a linear extension of the digraph");
}

}  // namespace detail

// ======================================================================= cuts

// Partition of the brick set into a repeller (down-closed) and an attractor
// (up-closed) side. Both sorted ascending.
struct Cut {
    std::vector<int> repeller;
    std::vector<int> attractor;
};

// Checks the cut conditions against certified arcs: the partition is exact
// and no arc crosses from the attractor side into the repeller side (arcs
// generate reachability, so this is down-closure of R and up-closure of A).
inline bool is_order_cut(const BrickDigraph& d, const Cut& cut) {
    std::vector<char> side(static_cast<std::size_t>(d.nodes), 0);
    for (int b : cut.repeller) {
        if (b < 0 || b >= d.nodes || side[static_cast<std::size_t>(b)]) return false;
        side[static_cast<std::size_t>(b)] = 1;
    }
    for (int b : cut.attractor) {
        if (b < 0 || b >= d.nodes || side[static_cast<std::size_t>(b)]) return false;
        side[static_cast<std::size_t>(b)] = 2;
    }
    for (char s : side)
        if (s == 0) return false;
    for (const auto& [u, v] : d.arcs)
        if (side[static_cast<std::size_t>(u)] == 2 && side[static_cast<std::size_t>(v)] == 1)
            return false;
    return true;
}

// k-th prefix cut: the first k bricks of the extension repel, the rest attract.
inline Cut prefix_cut(const LinearExtension& ext, int k) {
    const int n = static_cast<int>(ext.sequence.size());
    if (k < 0 || k > n) throw GeometryError("prefix_cut: index out of range");
    Cut cut;
    cut.repeller.assign(ext.sequence.begin(), ext.sequence.begin() + k);
    cut.attractor.assign(ext.sequence.begin() + k, ext.sequence.end());
    std::sort(cut.repeller.begin(), cut.repeller.end());
    std::sort(cut.attractor.begin(), cut.attractor.end());
    return cut;
}

// All n+1 prefix cuts in increasing order, from (empty, all) to (all, empty).
// When the digraph is supplied, every cut is verified against the certified
// order, not just against the extension.
inline std::vector<Cut> cuts_of(const LinearExtension& ext, const BrickDigraph* d = nullptr) {
    if (d != nullptr)
        detail::verify_extension(*d, detail::extension_positions(ext, d->nodes));
    const int n = static_cast<int>(ext.sequence.size());
    std::vector<Cut> cuts;
    cuts.reserve(static_cast<std::size_t>(n) + 1);
    for (int k = 0; k <= n; ++k) {
        cuts.push_back(prefix_cut(ext, k));
        if (d != nullptr && !is_order_cut(*d, cuts.back()))
            throw GeometryError("cuts_of: prefix cut violates the brick order");
    }
    return cuts;
}

// ================================================================ components

enum class ComponentKind { Regular, Singular };
enum class CutSide { Repeller, Attractor };

struct ComponentTag {
    std::vector<int> bricks;  // sorted
    ComponentKind kind = ComponentKind::Regular;
};

namespace detail {

inline std::vector<std::vector<int>> adjacency_lists(const BrickComplex& c) {
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(c.brick_count()));
    for (const auto& [a, b] : c.adjacent_pairs()) {
        adj[static_cast<std::size_t>(a)].push_back(b);
        adj[static_cast<std::size_t>(b)].push_back(a);
    }
    return adj;
}

// connected components of `members` under shared-edge adjacency, each sorted,
// ordered by smallest member
inline std::vector<std::vector<int>> spatial_components(const std::vector<std::vector<int>>& adj,
                                                        const std::vector<int>& members) {
    std::set<int> left(members.begin(), members.end());
    std::vector<std::vector<int>> comps;
    while (!left.empty()) {
        std::vector<int> comp, stack{*left.begin()};
        left.erase(left.begin());
        while (!stack.empty()) {
            const int u = stack.back();
            stack.pop_back();
            comp.push_back(u);
            for (int v : adj[static_cast<std::size_t>(u)]) {
                const auto it = left.find(v);
                if (it != left.end()) {
                    left.erase(it);
                    stack.push_back(v);
                }
            }
        }
        std::sort(comp.begin(), comp.end());
        comps.push_back(std::move(comp));
    }
    return comps;
}

inline bool any_shared_edge(const std::vector<std::vector<int>>& adj, const std::vector<int>& xs,
                            const std::vector<int>& ys) {
    std::set<int> yset(ys.begin(), ys.end());
    for (int x : xs)
        for (int v : adj[static_cast<std::size_t>(x)])
            if (yset.count(v)) return true;
    return false;
}

// Kind of one component of an attractor (resp. repeller): Regular when the
// induced map sends it into itself, Singular when the image set avoids it
// entirely (including the empty image at a window truncation). Anything in
// between straddles components, which certified arcs cannot produce unless
// the window cut the image apart. The cardinality characterization valid
// for maximal decompositions is cross-checked.
inline ComponentKind component_kind(const BrickDigraph& d, const std::vector<int>& comp,
                                    CutSide side) {
    const auto img =
        phi(d, comp, side == CutSide::Attractor ? PhiDirection::Plus : PhiDirection::Minus);
    const std::set<int> in_comp(comp.begin(), comp.end());
    std::size_t hits = 0;
    for (int b : img) hits += in_comp.count(b);
    ComponentKind by_phi;
    if (hits == img.size() && !img.empty())
        by_phi = ComponentKind::Regular;
    else if (hits == 0)
        by_phi = ComponentKind::Singular;
    else
        throw CharacterizationMismatch(
            "component at brick " + std::to_string(comp.front()) +
            ": image straddles components (window truncation suspected)");
    const ComponentKind by_size =
        comp.size() >= 2 ? ComponentKind::Regular : ComponentKind::Singular;
    if (by_phi != by_size)
        throw CharacterizationMismatch(
            "component at brick " + std::to_string(comp.front()) + " (" +
            std::to_string(comp.size()) + " bricks): stability and cardinality disagree");
    return by_phi;
}

}  // namespace detail

// Splits an attractor (resp. repeller) into its spatially connected
// components and classifies each. Regular components absorb their own image;
// singular ones are disjoint from it. Preconditions are enforced: certified
// arcs may not leave an attractor or enter a repeller from outside.
inline std::vector<ComponentTag> classify_components(const BrickComplex& c,
                                                     const BrickDigraph& d,
                                                     const std::vector<int>& members,
                                                     CutSide side) {
    std::vector<char> in_set(static_cast<std::size_t>(d.nodes), 0);
    for (int b : members) {
        if (b < 0 || b >= d.nodes || b >= c.brick_count())
            throw UnknownBrickId("classify_components: brick id out of range");
        in_set[static_cast<std::size_t>(b)] = 1;
    }
    for (const auto& [u, v] : d.arcs) {
        if (side == CutSide::Attractor && in_set[static_cast<std::size_t>(u)] &&
            !in_set[static_cast<std::size_t>(v)])
            throw GeometryError("classify_components: set is not an attractor (arc leaves it)");
        if (side == CutSide::Repeller && in_set[static_cast<std::size_t>(v)] &&
            !in_set[static_cast<std::size_t>(u)])
            throw GeometryError("classify_components: set is not a repeller (arc enters it)");
    }
    const auto adj = detail::adjacency_lists(c);
    std::vector<ComponentTag> tags;
    for (auto& comp : detail::spatial_components(adj, members)) {
        ComponentTag tag;
        tag.kind = detail::component_kind(d, comp, side);
        tag.bricks = std::move(comp);
        tags.push_back(std::move(tag));
    }
    return tags;
}

// =========================================================== marked anchors

// Marked orbit bricks: for orbit i, index m < 0 walks the brick ray toward
// the orbit's backward limit (its alpha point) and m > 0 toward the forward
// limit (its omega point). A set "holds" a limit point when it contains the
// anchor_depth outermost marked bricks of that ray.
struct AnchorMarks {
    int orbit_count = 0;
    std::map<std::pair<int, int>, int> marked;  // (orbit, m in Z minus 0) -> brick
    int anchor_depth = 3;

    // the anchor_depth most negative marked bricks of orbit i
    std::vector<int> alpha_tail(int i) const {
        std::vector<int> tail;
        for (const auto& [key, b] : marked) {
            if (key.first != i || key.second >= 0) continue;
            tail.push_back(b);  // map order: most negative m first
            if (static_cast<int>(tail.size()) == anchor_depth) break;
        }
        return tail;
    }

    // the anchor_depth most positive marked bricks of orbit i
    std::vector<int> omega_tail(int i) const {
        std::vector<int> tail;
        const auto end = marked.lower_bound({i + 1, std::numeric_limits<int>::min()});
        auto it = end;
        while (it != marked.begin()) {
            --it;
            if (it->first.first != i || it->first.second <= 0) break;
            tail.push_back(it->second);
            if (static_cast<int>(tail.size()) == anchor_depth) break;
        }
        return tail;
    }
};

namespace detail {

inline void require_marks(const AnchorMarks& marks) {
    if (marks.orbit_count < 1) throw GeometryError("anchor marks: no orbits");
    if (marks.anchor_depth < 1) throw GeometryError("anchor marks: depth must be positive");
    for (int i = 0; i < marks.orbit_count; ++i)
        if (marks.alpha_tail(i).empty() || marks.omega_tail(i).empty())
            throw GeometryError("anchor marks: orbit " + std::to_string(i) +
                                " is missing a marked ray");
}

inline bool component_holds(const std::vector<std::vector<int>>& comps,
                            const std::vector<std::vector<int>>& tails) {
    for (const auto& comp : comps) {
        bool all = true;
        for (const auto& tail : tails) {
            for (int b : tail)
                if (!std::binary_search(comp.begin(), comp.end(), b)) {
                    all = false;
                    break;
                }
            if (!all) break;
        }
        if (all) return true;
    }
    return false;
}

}  // namespace detail

// ============================================================ cut dichotomy

// Which side of a cut captures its limit points: either one repeller
// component holds every orbit's alpha tail, or one attractor component holds
// every omega tail.
enum class CutCase { AlphasInRepeller, OmegasInAttractor };

// Classifies a cut by the dichotomy above. Exactly one side must capture;
// both or neither raises LemmaViolation (a truncation or resolution
// artifact upstream).
inline CutCase classify_cut(const BrickComplex& c, const Cut& cut, const AnchorMarks& marks) {
    detail::require_marks(marks);
    for (const auto* side : {&cut.repeller, &cut.attractor})
        for (int b : *side)
            if (b < 0 || b >= c.brick_count())
                throw UnknownBrickId("classify_cut: brick id out of range");
    const auto adj = detail::adjacency_lists(c);
    std::vector<std::vector<int>> alpha_tails, omega_tails;
    for (int i = 0; i < marks.orbit_count; ++i) {
        alpha_tails.push_back(marks.alpha_tail(i));
        omega_tails.push_back(marks.omega_tail(i));
    }
    const bool alphas = detail::component_holds(
        detail::spatial_components(adj, cut.repeller), alpha_tails);
    const bool omegas = detail::component_holds(
        detail::spatial_components(adj, cut.attractor), omega_tails);
    if (alphas && omegas)
        throw LemmaViolation("cut captures alpha and omega tails simultaneously");
    if (!alphas && !omegas)
        throw LemmaViolation("cut captures neither the alpha nor the omega tails");
    return alphas ? CutCase::AlphasInRepeller : CutCase::OmegasInAttractor;
}

// Scan of all prefix cuts. The classification must be monotone: attractor-
// side cuts first, repeller-side cuts after, switching exactly once. The
// pivot is the single brick whose transfer flips the classification.
struct ExtremaScan {
    Cut omega_side_max;  // last cut whose attractor holds every omega tail
    Cut alpha_side_min;  // first cut whose repeller holds every alpha tail
    int pivot = -1;      // alpha_side_min.repeller minus omega_side_max.repeller
    std::vector<CutCase> cases;
};

inline ExtremaScan extrema_and_pivot(const BrickComplex& c, const LinearExtension& ext,
                                     const AnchorMarks& marks) {
    const int n = static_cast<int>(ext.sequence.size());
    ExtremaScan scan;
    scan.cases.reserve(static_cast<std::size_t>(n) + 1);
    for (int k = 0; k <= n; ++k) {
        try {
            scan.cases.push_back(classify_cut(c, prefix_cut(ext, k), marks));
        } catch (const LemmaViolation& e) {
            throw LemmaViolation("cut " + std::to_string(k) + ": " + e.what());
        }
    }
    int switch_at = -1;
    for (int k = 0; k <= n; ++k) {
        const bool alpha_side =
            scan.cases[static_cast<std::size_t>(k)] == CutCase::AlphasInRepeller;
        if (switch_at < 0 && alpha_side) switch_at = k;
        if (switch_at >= 0 && !alpha_side)
            throw NonMonotoneClassification("cut " + std::to_string(k) +
                                            " reverts to the attractor side after cut " +
                                            std::to_string(switch_at));
    }
    if (switch_at <= 0)
        throw NonMonotoneClassification(
            switch_at == 0 ? "already on the repeller side at the empty cut"
                           : "never switches to the repeller side");
    scan.omega_side_max = prefix_cut(ext, switch_at - 1);
    scan.alpha_side_min = prefix_cut(ext, switch_at);
    scan.pivot = ext.sequence[static_cast<std::size_t>(switch_at - 1)];
    return scan;
}

// ========================================================= orbit cut profile

// How one orbit's marked ray falls across a cut: the index sides, and the
// component of each cut side that carries them.
struct OrbitCutProfile {
    std::vector<int> z_minus;  // marked indices on the repeller side
    std::vector<int> z_plus;   // marked indices on the attractor side
    std::optional<ComponentTag> r_component;
    std::optional<ComponentTag> a_component;
};

// The marked indices must split into a down-set / up-set pair, all repeller-
// side marked bricks must share one component (likewise attractor-side), and
// the two components must be adjacent when both exist; any failure is an
// order violation reported as NotACut.
inline OrbitCutProfile orbit_cut_profile(const BrickComplex& c, const BrickDigraph& d,
                                         const Cut& cut, const AnchorMarks& marks, int i) {
    detail::require_marks(marks);
    if (i < 0 || i >= marks.orbit_count)
        throw GeometryError("orbit_cut_profile: orbit index out of range");
    if (d.nodes > c.brick_count())
        throw UnknownBrickId("orbit_cut_profile: digraph does not match the complex");
    if (!is_order_cut(d, cut))
        throw GeometryError("orbit_cut_profile: not a cut of the brick order");

    std::vector<char> in_r(static_cast<std::size_t>(d.nodes), 0);
    for (int b : cut.repeller) in_r[static_cast<std::size_t>(b)] = 1;

    OrbitCutProfile prof;
    std::vector<int> r_marked, a_marked;
    for (auto it = marks.marked.lower_bound({i, std::numeric_limits<int>::min()});
         it != marks.marked.end() && it->first.first == i; ++it) {
        const int b = it->second;
        if (b < 0 || b >= d.nodes || b >= c.brick_count())
            throw UnknownBrickId("orbit_cut_profile: marked brick out of range");
        if (in_r[static_cast<std::size_t>(b)]) {
            prof.z_minus.push_back(it->first.second);
            r_marked.push_back(b);
        } else {
            prof.z_plus.push_back(it->first.second);
            a_marked.push_back(b);
        }
    }
    if (!prof.z_minus.empty() && !prof.z_plus.empty() &&
        prof.z_minus.back() > prof.z_plus.front())
        throw NotACut("orbit " + std::to_string(i) + ": marked index " +
                      std::to_string(prof.z_plus.front()) +
                      " attracts below repelled index " + std::to_string(prof.z_minus.back()));

    const auto adj = detail::adjacency_lists(c);
    const auto locate = [&](const std::vector<int>& side, const std::vector<int>& marked_side,
                            CutSide which) -> std::optional<ComponentTag> {
        if (marked_side.empty()) return std::nullopt;
        for (auto& comp : detail::spatial_components(adj, side)) {
            if (!std::binary_search(comp.begin(), comp.end(), marked_side.front())) continue;
            for (int b : marked_side)
                if (!std::binary_search(comp.begin(), comp.end(), b))
                    throw NotACut("orbit " + std::to_string(i) +
                                  ": marked bricks scatter across components");
            ComponentTag tag;
            tag.kind = detail::component_kind(d, comp, which);
            tag.bricks = std::move(comp);
            return tag;
        }
        throw NotACut("orbit " + std::to_string(i) + ": marked brick missing from its side");
    };
    prof.r_component = locate(cut.repeller, r_marked, CutSide::Repeller);
    prof.a_component = locate(cut.attractor, a_marked, CutSide::Attractor);

    if (prof.r_component && prof.a_component &&
        !detail::any_shared_edge(adj, prof.r_component->bricks, prof.a_component->bricks))
        throw NotACut("orbit " + std::to_string(i) +
                      ": repeller and attractor components are not adjacent");
    return prof;
}

// ==================================================== components property

// For every pair of regular components (one per side) whose unions provably
// meet under some iterate f^n, n <= n_max, the components must share an
// edge. Report-based: violations and undecided geometry are recorded, not
// thrown.
struct ComponentsPropertyReport {
    int regular_repeller_components = 0;
    int regular_attractor_components = 0;
    int overlapping_pairs = 0;
    int undecided_pairs = 0;
    std::vector<std::pair<int, int>> violations;  // (min repeller id, min attractor id)
    std::vector<std::string> notes;
    bool ok = true;
};

inline ComponentsPropertyReport check_components_property(const PlaneMapSpec& m,
                                                          const BrickDigraph& d,
                                                          const BrickComplex& c, const Cut& cut,
                                                          int n_max, const GeomTol& tol = {}) {
    if (!is_order_cut(d, cut))
        throw GeometryError("check_components_property: not a cut of the brick order");
    ComponentsPropertyReport rep;
    std::vector<ComponentTag> rs, as;
    try {
        rs = classify_components(c, d, cut.repeller, CutSide::Repeller);
        as = classify_components(c, d, cut.attractor, CutSide::Attractor);
    } catch (const CharacterizationMismatch& e) {
        rep.ok = false;
        rep.notes.push_back(std::string("classification failed: ") + e.what());
        return rep;
    }
    const auto adj = detail::adjacency_lists(c);
    for (const auto& r : rs) rep.regular_repeller_components += r.kind == ComponentKind::Regular;
    for (const auto& a : as) rep.regular_attractor_components += a.kind == ComponentKind::Regular;
    for (const auto& rcomp : rs) {
        if (rcomp.kind != ComponentKind::Regular) continue;
        for (const auto& acomp : as) {
            if (acomp.kind != ComponentKind::Regular) continue;
            bool meets = false, undecided = false;
            for (int n = 1; n <= n_max && !meets; ++n)
                for (int rb : rcomp.bricks) {
                    for (int ab : acomp.bricks) {
                        const auto v = iterate_pair_meets(m, c.brick_region(rb), n,
                                                          c.brick_region(ab), tol);
                        if (v.verdict == Freeness::NotFree) {
                            meets = true;
                            break;
                        }
                        if (v.verdict == Freeness::Unknown) undecided = true;
                    }
                    if (meets) break;
                }
            if (!meets) {
                rep.undecided_pairs += undecided;
                continue;
            }
            rep.overlapping_pairs++;
            if (!detail::any_shared_edge(adj, rcomp.bricks, acomp.bricks)) {
                rep.violations.emplace_back(rcomp.bricks.front(), acomp.bricks.front());
                rep.ok = false;
            }
        }
    }
    return rep;
}

// ============================================================ regular chains

namespace detail {

// shortest path inside `allowed` under shared-edge adjacency; lowest-id
// deterministic; empty when unreachable
inline std::vector<int> bounded_path(const std::vector<std::vector<int>>& adj,
                                     const std::set<int>& allowed, int from, int to) {
    if (!allowed.count(from) || !allowed.count(to)) return {};
    std::map<int, int> parent{{from, from}};
    std::vector<int> frontier{from};
    while (!frontier.empty() && !parent.count(to)) {
        std::vector<int> next;
        for (int u : frontier) {
            auto nb = adj[static_cast<std::size_t>(u)];
            std::sort(nb.begin(), nb.end());
            for (int v : nb)
                if (allowed.count(v) && !parent.count(v)) {
                    parent[v] = u;
                    next.push_back(v);
                }
        }
        frontier = std::move(next);
    }
    if (!parent.count(to)) return {};
    std::vector<int> path{to};
    while (path.back() != from) path.push_back(parent[path.back()]);
    std::reverse(path.begin(), path.end());
    return path;
}

}  // namespace detail

// Chain of regular bricks from b up to bp: strictly increasing in the brick
// order, each link adjacent to the extension-prefix component of its
// predecessor and each predecessor adjacent to the extension-suffix
// component of its successor. Built by walking the down-set of bp, detouring
// around positively singular bricks through their boundary neighbours, then
// extracting the extension-increasing records; all three link conditions are
// re-verified before returning.
inline std::vector<int> regular_chain(const BrickDigraph& d, const BrickComplex& c,
                                      const LinearExtension& ext, int b, int bp) {
    if (b < 0 || b >= d.nodes || bp < 0 || bp >= d.nodes)
        throw UnknownBrickId("regular_chain: brick id out of range");
    if (d.nodes > c.brick_count())
        throw UnknownBrickId("regular_chain: digraph does not match the complex");
    const auto pos = detail::extension_positions(ext, d.nodes);
    detail::verify_extension(d, pos);
    const auto regular = [&](int x) {
        const RegularityVerdict v = classify_regularity(d, c, x);
        return v.positively_regular && v.negatively_regular;
    };
    if (!regular(b) || !regular(bp))
        throw GeometryError("regular_chain: endpoint brick is not regular");
    if (!brick_leq(d, b, bp)) throw GeometryError("regular_chain: bricks are not comparable");
    if (b == bp) return {b};

    // down-set of bp: reverse reachability
    std::set<int> down{bp};
    std::vector<int> stack{bp};
    while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        for (int v : d.in[static_cast<std::size_t>(u)])
            if (down.insert(v).second) stack.push_back(v);
    }

    const auto adj = detail::adjacency_lists(c);
    std::vector<int> path = detail::bounded_path(adj, down, b, bp);
    if (path.empty())
        throw TruncationEscape("regular_chain: down-set path is cut off by the window");

    const auto pos_regular = [&](int x) {
        return classify_regularity(d, c, x).positively_regular;
    };
    // detour around positively singular interior bricks through their
    // positively regular neighbours, erasing any loops the splice creates
    for (int guard = d.nodes * d.nodes; guard >= 0; --guard) {
        std::size_t bad = path.size();
        for (std::size_t k = 1; k + 1 < path.size(); ++k)
            if (!pos_regular(path[k])) {
                bad = k;
                break;
            }
        if (bad == path.size()) break;
        if (guard == 0)
            throw TruncationEscape("regular_chain: singular detours do not terminate");
        std::set<int> ring;
        for (int v : adj[static_cast<std::size_t>(path[bad])])
            if (down.count(v) && pos_regular(v)) ring.insert(v);
        const std::vector<int> detour =
            detail::bounded_path(adj, ring, path[bad - 1], path[bad + 1]);
        if (detour.empty())
            throw TruncationEscape("regular_chain: no regular detour around brick " +
                                   std::to_string(path[bad]));
        std::vector<int> spliced(path.begin(), path.begin() + static_cast<long>(bad));
        spliced.insert(spliced.end(), detour.begin() + 1, detour.end() - 1);
        spliced.insert(spliced.end(), path.begin() + static_cast<long>(bad) + 1, path.end());
        // loop-erase: a repeat cancels everything since its first visit
        std::vector<int> clean;
        for (int x : spliced) {
            auto it = std::find(clean.begin(), clean.end(), x);
            if (it != clean.end()) clean.erase(it, clean.end());
            clean.push_back(x);
        }
        path = std::move(clean);
    }

    // records of the extension order along the walk
    std::vector<int> chain{path.front()};
    for (int x : path)
        if (pos[static_cast<std::size_t>(x)] > pos[static_cast<std::size_t>(chain.back())])
            chain.push_back(x);

    // verify the three link conditions
    for (std::size_t j = 0; j + 1 < chain.size(); ++j) {
        const int u = chain[j], v = chain[j + 1];
        if (u == v || !brick_leq(d, u, v))
            throw TruncationEscape("regular_chain: link " + std::to_string(j) +
                                   " is not increasing in the brick order");
        const int cutpos = pos[static_cast<std::size_t>(u)];
        std::vector<int> prefix, suffix;
        for (int x = 0; x < d.nodes; ++x)
            (pos[static_cast<std::size_t>(x)] <= cutpos ? prefix : suffix).push_back(x);
        bool ok_prefix = false, ok_suffix = false;
        for (const auto& comp : detail::spatial_components(adj, prefix))
            if (std::binary_search(comp.begin(), comp.end(), u)) {
                ok_prefix = detail::any_shared_edge(adj, comp, {v});
                break;
            }
        for (const auto& comp : detail::spatial_components(adj, suffix))
            if (std::binary_search(comp.begin(), comp.end(), v)) {
                ok_suffix = detail::any_shared_edge(adj, comp, {u});
                break;
            }
        if (!ok_prefix)
            throw TruncationEscape("regular_chain: link " + std::to_string(j) +
                                   " not adjacent to its prefix component");
        if (!ok_suffix)
            throw TruncationEscape("regular_chain: link " + std::to_string(j) +
                                   " not adjacent to its suffix component");
    }
    for (int x : chain)
        if (!regular(x))
            throw TruncationEscape("regular_chain: chain passes through a singular brick");
    return chain;
}

}  // namespace brickdyn
