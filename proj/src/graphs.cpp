#include "nmkt/graphs.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace nmkt {

// -- Primitive ------------------------------------------------------------

Primitive Primitive::point(Rat p, Rat d) {
    Primitive x;
    x.kind = Kind::Point;
    x.p0 = std::move(p);
    x.d0 = std::move(d);
    return x;
}

Primitive Primitive::horizontal(Rat d, Iv p_rng) {
    Primitive x;
    x.kind = Kind::Horizontal;
    x.d0 = std::move(d);
    x.p_rng = std::move(p_rng);
    return x;
}

Primitive Primitive::vertical(Rat p, Iv d_rng) {
    Primitive x;
    x.kind = Kind::Vertical;
    x.p0 = std::move(p);
    x.d_rng = std::move(d_rng);
    return x;
}

Primitive Primitive::slanted(Affine p_of_d, Iv d_rng) {
    Primitive x;
    x.kind = Kind::Slanted;
    x.p_of_d = std::move(p_of_d);
    x.d_rng = std::move(d_rng);
    return x;
}

bool Primitive::contains(const Rat& p, const Rat& d) const {
    switch (kind) {
        case Kind::Point: return p == p0 && d == d0;
        case Kind::Horizontal: return d == d0 && p_rng.contains(p);
        case Kind::Vertical: return p == p0 && d_rng.contains(d);
        case Kind::Slanted: return d_rng.contains(d) && p == p_of_d(d);
    }
    return false;
}

Iv Primitive::heights() const {
    switch (kind) {
        case Kind::Point: return Iv::point(d0);
        case Kind::Horizontal: return Iv::point(d0);
        default: return d_rng;
    }
}

bool PointSet2D::contains(const Rat& p, const Rat& d) const {
    for (const auto& prim : prims)
        if (prim.contains(p, d)) return true;
    return false;
}

// -- EdgeFn ---------------------------------------------------------------

std::optional<EdgeFn::Value> EdgeFn::at(const Rat& d) const {
    for (const auto& piece : pieces)
        if (piece.d_rng.contains(d)) return Value{piece.f(d), piece.attained};
    return std::nullopt;
}

// -- envelope machinery ---------------------------------------------------

namespace {

struct Contribution {
    Affine f;
    bool attained;
};

/// Cover-mode contribution at heights in `span` (an interior point or open
/// gap, never straddling a primitive bound): the best abscissa of `prim`
/// among its points with height >= h. nullopt when the primitive has no
/// such points.
std::optional<Contribution> cover_contribution(const Primitive& prim, const Rat& lo,
                                               const Rat& hi) {
    // span is [lo,hi] (lo==hi for a point query); bounds never cross prim
    // bounds except at equality.
    const Iv h = prim.heights();
    auto top = h.hi;
    switch (prim.kind) {
        case Primitive::Kind::Point:
            if (Ext(hi) > Ext(prim.d0)) return std::nullopt;
            return Contribution{Affine{prim.p0, 0}, true};
        case Primitive::Kind::Horizontal: {
            if (Ext(hi) > Ext(prim.d0)) return std::nullopt;
            if (!prim.p_rng.hi.finite())
                throw std::logic_error("unbounded-above abscissa in a demand primitive");
            return Contribution{Affine{prim.p_rng.hi.value, 0}, prim.p_rng.hi_closed};
        }
        case Primitive::Kind::Vertical: {
            if (Ext(hi) > top) return std::nullopt;
            if (Ext(hi) == top && !prim.d_rng.hi_closed && lo == hi) return std::nullopt;
            return Contribution{Affine{prim.p0, 0}, true};
        }
        case Primitive::Kind::Slanted: {
            const Rat slope = prim.p_of_d.b;
            if (slope > 0) {
                // best at the top of the range
                if (Ext(lo) > top || (Ext(lo) == top && !prim.d_rng.hi_closed && lo == hi))
                    return std::nullopt;
                if (!top.finite()) throw std::logic_error("unbounded slanted primitive");
                return Contribution{Affine{prim.p_of_d(top.value), 0}, prim.d_rng.hi_closed};
            }
            // slope < 0: best at the lowest admissible height
            if (Ext(hi) > top) return std::nullopt;
            if (Ext(hi) == top && !prim.d_rng.hi_closed && lo == hi) return std::nullopt;
            if (Ext(lo) >= prim.d_rng.lo) {
                // tracks the query height itself
                const bool att = lo < hi || prim.d_rng.contains(lo);
                return Contribution{prim.p_of_d, att};
            }
            // whole range sits above the span
            const Rat anchor = prim.d_rng.lo.rat_or_throw();
            return Contribution{Affine{prim.p_of_d(anchor), 0}, prim.d_rng.lo_closed};
        }
    }
    return std::nullopt;
}

/// Exact-mode contribution: abscissa of `prim` at exactly height h in span.
std::optional<Contribution> exact_contribution(const Primitive& prim, const Rat& lo,
                                               const Rat& hi) {
    const bool point_query = lo == hi;
    switch (prim.kind) {
        case Primitive::Kind::Point:
            if (!point_query || prim.d0 != lo) return std::nullopt;
            return Contribution{Affine{prim.p0, 0}, true};
        case Primitive::Kind::Horizontal: {
            if (!point_query || prim.d0 != lo) return std::nullopt;
            if (!prim.p_rng.lo.finite())
                throw std::logic_error("unbounded-below abscissa in a supply primitive");
            return Contribution{Affine{prim.p_rng.lo.value, 0}, prim.p_rng.lo_closed};
        }
        case Primitive::Kind::Vertical: {
            if (point_query ? !prim.d_rng.contains(lo)
                            : !(prim.d_rng.contains((lo + hi) / 2)))
                return std::nullopt;
            return Contribution{Affine{prim.p0, 0}, true};
        }
        case Primitive::Kind::Slanted: {
            if (point_query ? !prim.d_rng.contains(lo)
                            : !(prim.d_rng.contains((lo + hi) / 2)))
                return std::nullopt;
            return Contribution{prim.p_of_d, true};
        }
    }
    return std::nullopt;
}

using ContributionFn = std::optional<Contribution> (*)(const Primitive&, const Rat&, const Rat&);

/// Builds the upper (maximize=true) or lower envelope of the contributions
/// over heights (0, top], as exact affine pieces with attainment flags.
EdgeFn build_envelope(const std::vector<Primitive>& prims, const Rat& top, bool maximize,
                      ContributionFn contribution) {
    EdgeFn out;
    if (top <= 0) return out;

    std::vector<Rat> cuts;
    cuts.push_back(top);
    for (const auto& prim : prims) {
        const Iv h = prim.heights();
        if (h.lo.finite() && h.lo.value > 0 && h.lo.value <= top) cuts.push_back(h.lo.value);
        if (h.hi.finite() && h.hi.value > 0 && h.hi.value <= top) cuts.push_back(h.hi.value);
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    auto best_at = [&](const std::vector<Contribution>& cs, const Rat& x) {
        size_t best = 0;
        for (size_t i = 1; i < cs.size(); ++i) {
            const Rat vi = cs[i].f(x), vb = cs[best].f(x);
            if (maximize ? vi > vb : vi < vb) best = i;
        }
        bool att = false;
        const Rat best_val = cs[best].f(x);
        for (const auto& c : cs)
            if (c.f(x) == best_val) att = att || c.attained;
        return std::pair<size_t, bool>{best, att};
    };

    auto pick = [&](std::vector<Contribution>& cs, const Rat& lo, const Rat& hi,
                    std::vector<EdgeFn::Piece>& sink) {
        if (cs.empty()) return;
        // subdivide at pairwise crossings inside (lo, hi); interior crossing
        // heights get their own point pieces so coverage stays exact
        std::vector<Rat> inner;
        for (size_t i = 0; i < cs.size(); ++i)
            for (size_t j = i + 1; j < cs.size(); ++j) {
                const Affine &f = cs[i].f, &g = cs[j].f;
                if (f.b == g.b) continue;
                const Rat x = (g.a - f.a) / (f.b - g.b);
                if (lo < x && x < hi) inner.push_back(x);
            }
        inner.push_back(hi);
        std::sort(inner.begin(), inner.end());
        inner.erase(std::unique(inner.begin(), inner.end()), inner.end());
        Rat a = lo;
        for (const auto& b : inner) {
            const Rat mid = (a + b) / 2;
            const auto [best, att] = best_at(cs, mid);
            sink.push_back({Iv{Ext(a), Ext(b), false, false}, cs[best].f, att});
            if (b != hi) {
                const auto [pbest, patt] = best_at(cs, b);
                sink.push_back({Iv::point(b), Affine{cs[pbest].f(b), 0}, patt});
            }
            a = b;
        }
    };

    Rat prev = 0;
    for (size_t k = 0; k < cuts.size(); ++k) {
        const Rat& c = cuts[k];
        // open gap (prev, c)
        if (prev < c) {
            std::vector<Contribution> cs;
            for (const auto& prim : prims)
                if (auto ctr = contribution(prim, prev, c)) cs.push_back(*ctr);
            pick(cs, prev, c, out.pieces);
        }
        // the point {c}
        {
            std::vector<Contribution> cs;
            for (const auto& prim : prims)
                if (auto ctr = contribution(prim, c, c)) cs.push_back(*ctr);
            if (!cs.empty()) {
                const auto [best, att] = best_at(cs, c);
                out.pieces.push_back({Iv::point(c), Affine{cs[best].f(c), 0}, att});
            }
        }
        prev = c;
    }
    return out;
}

/// Turns the attained part of an edge function into border primitives,
/// clipped to nonnegative abscissas.
std::vector<Primitive> edge_to_primitives(const EdgeFn& edge) {
    std::vector<Primitive> out;
    for (const auto& piece : edge.pieces) {
        if (!piece.attained) continue;
        Iv rng = piece.d_rng;
        // clip to f >= 0
        if (piece.f.b == 0) {
            if (piece.f.a < 0) continue;
        } else if (auto zero = piece.f.solve(Rat(0))) {
            Iv keep = piece.f.b > 0 ? Iv{Ext(*zero), Ext::pos_inf(), true, false}
                                    : Iv{Ext::neg_inf(), Ext(*zero), false, true};
            rng = rng.intersect(keep);
            if (rng.is_empty()) continue;
        }
        if (rng.is_point())
            out.push_back(Primitive::point(piece.f(rng.lo.value), rng.lo.value));
        else if (piece.f.b == 0)
            out.push_back(Primitive::vertical(piece.f.a, rng));
        else
            out.push_back(Primitive::slanted(piece.f, rng));
    }
    return out;
}

}  // namespace

// -- DiscreteMeasure ------------------------------------------------------

Rat DiscreteMeasure::total() const {
    Rat t = 0;
    for (const auto& [loc, mass] : atoms) t += mass;
    return t;
}

void DiscreteMeasure::normalize() {
    std::sort(atoms.begin(), atoms.end());
    std::vector<std::pair<Rat, Rat>> merged;
    for (auto& a : atoms) {
        if (!merged.empty() && merged.back().first == a.first)
            merged.back().second += a.second;
        else
            merged.push_back(a);
    }
    atoms.clear();
    for (auto& a : merged)
        if (a.second != 0) atoms.push_back(std::move(a));
}

// -- DemandGraph ----------------------------------------------------------

bool DemandGraph::in_augmented(const Rat& p, const Rat& d) const {
    if (p < 0 || d <= 0) return false;
    const auto edge = right_edge.at(d);
    if (!edge) return false;
    if (p < edge->value) return true;
    return p == edge->value && edge->attained;
}

Rat DemandGraph::volume_at(const Rat& r) const {
    for (const auto& piece : pieces)
        if (piece.r_dom.contains(r)) return piece.volume(r);
    return 0;
}

UnitValueCurve::Value DemandGraph::revenue_at(const Rat& r) const {
    for (const auto& piece : pieces)
        if (piece.r_dom.contains(r)) return {piece.revenue(r), false};
    return {Rat(0), true};
}

std::optional<Rat> DemandGraph::price_finder(const Rat& p, const Rat& d) const {
    for (const auto& piece : pieces) {
        if (!piece.image.contains(p, d)) continue;
        if (piece.volume.b != 0) {
            if (auto r = piece.volume.solve(d)) return r;
        }
        if (piece.revenue.b != 0) {
            if (auto r = piece.revenue.solve(p)) return r;
        }
        // constant piece: canonical representative is the attained right end
        if (piece.r_dom.hi.finite()) return piece.r_dom.hi.value;
    }
    return std::nullopt;
}

std::vector<AchievedPrice> DemandGraph::prices_at_abscissa(const Rat& p) const {
    std::vector<AchievedPrice> out;
    for (const auto& piece : pieces) {
        if (piece.revenue.b == 0) {
            if (piece.revenue.a == p && piece.r_dom.hi.finite())
                out.push_back({piece.r_dom.hi.value, piece.volume(piece.r_dom.hi.value)});
            continue;
        }
        if (auto r = piece.revenue.solve(p); r && piece.r_dom.contains(*r))
            out.push_back({*r, piece.volume(*r)});
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.r < b.r; });
    return out;
}

SupResult DemandGraph::sup_revenue_volume_geq(const Rat& s) const {
    SupResult best;
    for (const auto& prim : graph.prims)
        if (auto c = sup_contribution_geq(prim, s, s))
            best = sup_join(best, {Ext(c->value(s)), c->attained});
    return best;
}

SupResult DemandGraph::sup_revenue_volume_gt(const Rat& s) const {
    SupResult best;
    for (const auto& prim : graph.prims)
        if (auto c = sup_contribution_gt(prim, s, s))
            best = sup_join(best, {Ext(c->value(s)), c->attained});
    return best;
}

DemandGraph build_demand_graph(const DemandSide& side) {
    DemandGraph dg;
    dg.d_max = side.d_max;
    if (side.d_max <= 0) {
        dg.sup_revenue = {Ext(Rat(0)), true};
        dg.border3.prims.push_back(Primitive::point(0, 0));
        return dg;
    }

    // piece boundaries: cutoff breakpoints plus revenue knots
    std::vector<Rat> bounds;
    for (const auto& n : side.cum.nodes()) bounds.push_back(n.x);
    for (const auto& piece : side.revenue.pieces) {
        if (piece.dom.lo.finite()) bounds.push_back(piece.dom.lo.value);
        if (piece.dom.hi.finite()) bounds.push_back(piece.dom.hi.value);
    }
    std::sort(bounds.begin(), bounds.end());
    bounds.erase(std::unique(bounds.begin(), bounds.end()), bounds.end());

    const Rat total = side.cum.total();
    auto vol_weak = [&](const Rat& r) { return total - side.cum.strict_at(r); };

    Ext left = Ext::neg_inf();
    for (const auto& b : bounds) {
        const Rat vol_at_b = vol_weak(b);
        const bool top_open = vol_at_b == 0;  // volume dies exactly at b
        const Rat probe = left.finite() ? (left.value + b) / 2 : b - 1;
        if (vol_weak(probe) <= 0) break;

        DemandGraph::Piece piece;
        piece.r_dom = Iv{left, Ext(b), false, !top_open};

        // revenue affine on the open interior
        bool have_rev = false;
        for (const auto& rp : side.revenue.pieces)
            if (rp.dom.contains(probe)) {
                piece.revenue = rp.f;
                have_rev = true;
                break;
            }
        if (!have_rev) throw std::logic_error("revenue curve misses a positive-volume stretch");

        // volume affine from the cumulative node at or before the probe
        {
            const auto& nodes = side.cum.nodes();
            auto it = std::upper_bound(nodes.begin(), nodes.end(), probe,
                                       [](const Rat& v, const CumulativeMass::Node& n) {
                                           return v < n.x;
                                       });
            Rat base = total, slope = 0, anchor = 0;
            if (it != nodes.begin()) {
                const auto& n = *(it - 1);
                base = total - n.weak_val;
                slope = -n.slope_right;
                anchor = n.x;
            }
            piece.volume = Affine{base - slope * anchor, slope};
        }

        // image primitive
        if (piece.volume.b == 0) {
            const Rat d = piece.volume.a;
            if (piece.revenue.b == 0) {
                piece.image = Primitive::point(piece.revenue.a, d);
            } else {
                Ext p_left = left.finite() ? Ext(piece.revenue(left.value)) : Ext::neg_inf();
                Ext p_right = Ext(piece.revenue(b));
                if (piece.revenue.b > 0)
                    piece.image = Primitive::horizontal(d, Iv{p_left, p_right, false, !top_open});
                else
                    piece.image = Primitive::horizontal(d, Iv{p_right, p_left, !top_open, false});
            }
        } else {
            // slanted: p as affine in d via r(d)
            const Affine r_of_d{-piece.volume.a / piece.volume.b, Rat(1) / piece.volume.b};
            const Affine p_of_d{piece.revenue.a + piece.revenue.b * r_of_d.a,
                                piece.revenue.b * r_of_d.b};
            if (!left.finite())
                throw std::logic_error("segment demand cannot reach unbounded prices");
            const Rat d_top = piece.volume(left.value);
            const Rat d_bot = piece.volume(b);
            piece.image =
                Primitive::slanted(p_of_d, Iv{Ext(d_bot), Ext(d_top), !top_open && d_bot > 0, false});
        }
        dg.graph.prims.push_back(piece.image);
        dg.pieces.push_back(std::move(piece));
        left = Ext(b);
        if (top_open) break;
    }
    dg.truncated = false;

    // A_D right edge and the borders
    dg.right_edge = build_envelope(dg.graph.prims, dg.d_max, true, cover_contribution);
    dg.border0.prims = edge_to_primitives(dg.right_edge);

    // p* and the achieved max-revenue band
    SupResult p_star{Ext(Rat(0)), true};  // zero-volume convention value
    for (const auto& prim : dg.graph.prims) {
        switch (prim.kind) {
            case Primitive::Kind::Point: p_star = sup_join(p_star, {Ext(prim.p0), true}); break;
            case Primitive::Kind::Horizontal:
                p_star = sup_join(p_star, {prim.p_rng.hi, prim.p_rng.hi_closed});
                break;
            case Primitive::Kind::Vertical: p_star = sup_join(p_star, {Ext(prim.p0), true}); break;
            case Primitive::Kind::Slanted: {
                if (prim.p_of_d.b < 0)
                    p_star = sup_join(p_star, {Ext(prim.p_of_d(prim.d_rng.lo.rat_or_throw())),
                                               prim.d_rng.lo_closed});
                else
                    p_star = sup_join(p_star, {Ext(prim.p_of_d(prim.d_rng.hi.rat_or_throw())),
                                               prim.d_rng.hi_closed});
                break;
            }
        }
    }
    dg.sup_revenue = p_star;

    Rat band_top = 0;
    bool band = false;
    if (p_star.attained && p_star.value.finite()) {
        for (const auto& ap : dg.prices_at_abscissa(p_star.value.value)) {
            if (!band || ap.volume > band_top) band_top = ap.volume;
            band = true;
        }
    }
    dg.border1_top = band ? band_top : Rat(0);

    if (band) {
        const Iv band_iv{Ext(Rat(0)), Ext(band_top), false, true};
        for (const auto& prim : dg.border0.prims) {
            if (prim.kind == Primitive::Kind::Point) {
                if (band_iv.contains(prim.d0)) dg.border1.prims.push_back(prim);
            } else {
                Iv cut = prim.d_rng.intersect(band_iv);
                if (cut.is_empty()) continue;
                Primitive clipped = prim;
                clipped.d_rng = cut;
                if (cut.is_point()) {
                    const Rat d = cut.lo.value;
                    clipped = Primitive::point(
                        prim.kind == Primitive::Kind::Vertical ? prim.p0 : prim.p_of_d(d), d);
                }
                dg.border1.prims.push_back(clipped);
            }
        }
    }

    // V_D^(2): vertical columns minus per-column tops minus the band
    {
        // group constant-abscissa border pieces by abscissa
        std::map<Rat, IvSet> columns;
        for (const auto& prim : dg.border0.prims) {
            if (prim.kind == Primitive::Kind::Vertical)
                columns[prim.p0].add(prim.d_rng);
            else if (prim.kind == Primitive::Kind::Point)
                columns[prim.p0].add(Iv::point(prim.d0));
        }
        for (const auto& [p, heights] : columns) {
            IvSet rest = heights;
            if (auto top = heights.sup(); top && top->finite())
                rest = rest.minus_point(top->value);
            rest = rest.intersect(Iv{Ext(dg.border1_top), Ext::pos_inf(), false, false});
            for (const auto& iv : rest.parts()) {
                if (iv.is_point())
                    dg.border2.prims.push_back(Primitive::point(p, iv.lo.value));
                else
                    dg.border2.prims.push_back(Primitive::vertical(p, iv));
            }
        }
    }

    // V_D^(3): rays up from achieved demand points, intersected with the
    // border, plus V_D^(1) and the origin
    {
        for (const auto& prim : dg.border0.prims) {
            if (prim.kind == Primitive::Kind::Slanted) {
                dg.border3.prims.push_back(prim);  // every point is its own ray bottom
                continue;
            }
            const Rat p = prim.p0;
            const auto achieved = dg.prices_at_abscissa(p);
            if (achieved.empty()) continue;
            Rat d_min = achieved.front().volume;
            for (const auto& ap : achieved) d_min = std::min(d_min, ap.volume);
            if (prim.kind == Primitive::Kind::Point) {
                if (prim.d0 >= d_min) dg.border3.prims.push_back(prim);
            } else {
                Iv cut = prim.d_rng.intersect(Iv{Ext(d_min), Ext::pos_inf(), true, false});
                if (cut.is_empty()) continue;
                if (cut.is_point())
                    dg.border3.prims.push_back(Primitive::point(p, cut.lo.value));
                else
                    dg.border3.prims.push_back(Primitive::vertical(p, cut));
            }
        }
        for (const auto& prim : dg.border1.prims) dg.border3.prims.push_back(prim);
        dg.border3.prims.push_back(Primitive::point(0, 0));
    }
    return dg;
}

DemandGraph build_demand_graph(const PopulationSpec& spec) {
    DemandGraph dg = build_demand_graph(build_demand_side(spec));
    dg.truncated = spec.truncation.has_value();
    return dg;
}

std::optional<SupContribution> sup_contribution_geq(const Primitive& prim, const Rat& h_lo,
                                                    const Rat& h_hi) {
    if (auto c = cover_contribution(prim, h_lo, h_hi)) return SupContribution{c->f, c->attained};
    return std::nullopt;
}

std::optional<SupContribution> sup_contribution_gt(const Primitive& prim, const Rat& h_lo,
                                                   const Rat& h_hi) {
    const bool point_query = h_lo == h_hi;
    switch (prim.kind) {
        case Primitive::Kind::Point:
            if (point_query ? !(prim.d0 > h_lo) : !(prim.d0 >= h_hi)) return std::nullopt;
            return SupContribution{Affine{prim.p0, 0}, true};
        case Primitive::Kind::Horizontal: {
            if (point_query ? !(prim.d0 > h_lo) : !(prim.d0 >= h_hi)) return std::nullopt;
            if (!prim.p_rng.hi.finite())
                throw std::logic_error("unbounded-above abscissa in a demand primitive");
            return SupContribution{Affine{prim.p_rng.hi.value, 0}, prim.p_rng.hi_closed};
        }
        case Primitive::Kind::Vertical: {
            // need some contained height strictly above the query
            const Ext top = prim.d_rng.hi;
            if (point_query ? !(top > Ext(h_lo)) : !(top >= Ext(h_hi))) return std::nullopt;
            return SupContribution{Affine{prim.p0, 0}, true};
        }
        case Primitive::Kind::Slanted: {
            const Ext top = prim.d_rng.hi;
            if (point_query ? !(top > Ext(h_lo)) : !(top >= Ext(h_hi))) return std::nullopt;
            if (prim.p_of_d.b > 0) {
                if (!top.finite()) throw std::logic_error("unbounded slanted primitive");
                return SupContribution{Affine{prim.p_of_d(top.value), 0}, prim.d_rng.hi_closed};
            }
            // decreasing: sup approached just above the query height
            if (Ext(h_lo) >= prim.d_rng.lo)
                return SupContribution{prim.p_of_d, false};
            return SupContribution{Affine{prim.p_of_d(prim.d_rng.lo.rat_or_throw()), 0},
                                   prim.d_rng.lo_closed};
        }
    }
    return std::nullopt;
}

// -- SupplyGraph ----------------------------------------------------------

bool SupplyGraph::in_augmented(const Rat& p, const Rat& s) const {
    if (s <= 0) return false;
    const auto edge = left_edge.at(s);
    if (!edge) return false;
    if (p > edge->value) return true;
    return p == edge->value && edge->attained;
}

std::optional<Rat> SupplyGraph::price_finder(const Rat& p, const Rat& s) const {
    for (const auto& piece : pieces) {
        if (!piece.image.contains(p, s)) continue;
        switch (piece.gen) {
            case Gen::Jump:
            case Gen::Point: return piece.rho0;
            case Gen::Ramp:
            case Gen::Plateau: return piece.rho_of_p(p);
        }
    }
    return std::nullopt;
}

std::optional<Rat> SupplyGraph::ratio_finder(const Rat& p, const Rat& s) const {
    auto rho = price_finder(p, s);
    if (!rho) return std::nullopt;
    const Rat lo = corr.min_at(*rho), hi = corr.max_at(*rho);
    if (lo == hi) return Rat(1);  // zero residual selects ratio 1
    return (s - lo) / (hi - lo);
}

IvSet SupplyGraph::abscissas_at_height(const Rat& s) const {
    IvSet out;
    for (const auto& piece : pieces) {
        const auto& prim = piece.image;
        switch (prim.kind) {
            case Primitive::Kind::Point:
                if (prim.d0 == s) out.add(Iv::point(prim.p0));
                break;
            case Primitive::Kind::Horizontal:
                if (prim.d0 == s) out.add(prim.p_rng);
                break;
            case Primitive::Kind::Vertical:
                if (prim.d_rng.contains(s)) out.add(Iv::point(prim.p0));
                break;
            case Primitive::Kind::Slanted:
                if (prim.d_rng.contains(s)) out.add(Iv::point(prim.p_of_d(s)));
                break;
        }
    }
    return out;
}

SupplyGraph build_supply_graph(const SupplySide& side) {
    SupplyGraph sg;
    sg.s_max = side.s_max;
    sg.corr = side.corr;
    sg.unit_cost = side.unit_cost;
    if (side.s_max <= 0) return sg;
    if (side.unit_cost.b <= 0)
        throw std::invalid_argument("supply unit cost must be strictly increasing in price");

    const auto cost = side.unit_cost;
    const Affine rho_of_p{-cost.a / cost.b, Rat(1) / cost.b};
    const auto& nodes = side.cum.nodes();
    for (size_t i = 0; i < nodes.size(); ++i) {
        const auto& n = nodes[i];
        const Rat c = cost(n.x);
        if (n.jump > 0) {
            SupplyGraph::Piece piece;
            piece.gen = SupplyGraph::Gen::Jump;
            piece.rho0 = n.x;
            piece.image = Primitive::vertical(
                c, Iv{Ext(n.strict_val), Ext(n.weak_val), n.strict_val > 0, true});
            sg.pieces.push_back(std::move(piece));
        } else if (n.weak_val > 0) {
            SupplyGraph::Piece piece;
            piece.gen = SupplyGraph::Gen::Point;
            piece.rho0 = n.x;
            piece.image = Primitive::point(c, n.weak_val);
            sg.pieces.push_back(std::move(piece));
        }
        // gap to the right of node i
        const Ext next_x = (i + 1 < nodes.size()) ? Ext(nodes[i + 1].x) : Ext::pos_inf();
        if (n.slope_right > 0) {
            if (!next_x.finite()) throw std::logic_error("unterminated density ramp");
            const Rat d_lo = n.weak_val;
            const Rat d_hi = nodes[i + 1].strict_val;
            // p as affine in d: rho = n.x + (d - d_lo)/slope
            const Affine rho_of_d{n.x - d_lo / n.slope_right, Rat(1) / n.slope_right};
            const Affine p_of_d{cost.a + cost.b * rho_of_d.a, cost.b * rho_of_d.b};
            SupplyGraph::Piece piece;
            piece.gen = SupplyGraph::Gen::Ramp;
            piece.rho_of_p = rho_of_p;
            piece.image = Primitive::slanted(p_of_d, Iv{Ext(d_lo), Ext(d_hi), false, false});
            sg.pieces.push_back(std::move(piece));
        } else if (n.slope_right == 0 && n.weak_val > 0) {
            SupplyGraph::Piece piece;
            piece.gen = SupplyGraph::Gen::Plateau;
            piece.rho_of_p = rho_of_p;
            const Ext p_hi = next_x.finite() ? Ext(cost(next_x.value)) : Ext::pos_inf();
            piece.image =
                Primitive::horizontal(n.weak_val, Iv{Ext(c), p_hi, false, false});
            sg.pieces.push_back(std::move(piece));
        }
    }
    for (const auto& piece : sg.pieces) sg.graph.prims.push_back(piece.image);
    sg.left_edge = build_envelope(sg.graph.prims, sg.s_max, false, exact_contribution);
    return sg;
}

SupplyGraph build_supply_graph(const PopulationSpec& spec) {
    return build_supply_graph(build_supply_side(spec));
}

// -- measures -------------------------------------------------------------

Rat DemandMeasureFamily::ratio_sum(const DiscreteMeasure& mu) const {
    Rat sum = 0;
    for (const auto& [loc, mass] : mu.atoms) {
        bool found = false;
        for (const auto& ap : achieved)
            if (ap.r == loc) {
                sum += mass / ap.volume;
                found = true;
                break;
            }
        if (!found) throw std::domain_error("measure atom at an unachieved price");
    }
    return sum;
}

bool DemandMeasureFamily::contains(const DiscreteMeasure& mu) const {
    if (volume == 0 && abscissa == 0) return mu.atoms.empty();
    Rat mass = 0, ratios = 0;
    for (const auto& [loc, mass_i] : mu.atoms) {
        if (mass_i <= 0) return false;
        bool found = false;
        for (const auto& ap : achieved)
            if (ap.r == loc) {
                ratios += mass_i / ap.volume;
                found = true;
                break;
            }
        if (!found) return false;  // beyond truncation counts as unachieved here
        mass += mass_i;
    }
    if (mass != volume) return false;
    const Rat lo = at_max_revenue_band ? Rat(0) : Rat(1);
    return ratios >= lo && ratios <= 1;
}

bool DemandMeasureFamily::unique() const {
    if (achieved.empty()) return true;  // origin family
    const size_t n = achieved.size();
    if (n == 1) return true;
    Rat vol_max = achieved.front().volume, vol_min = achieved.front().volume;
    for (const auto& ap : achieved) {
        vol_max = std::max(vol_max, ap.volume);
        vol_min = std::min(vol_min, ap.volume);
    }
    // all mass at an extreme volume saturates the ratio window from one side
    if (volume == vol_max) return true;
    if (!at_max_revenue_band && volume == vol_min) return true;
    if (!at_max_revenue_band && n == 2) return true;  // forced two-atom mix
    return false;
}

int DemandMeasureFamily::max_support_size() const {
    if (achieved.empty()) return 0;
    Rat vol_max = achieved.front().volume;
    Rat vol_min = achieved.front().volume;
    for (const auto& ap : achieved) {
        vol_max = std::max(vol_max, ap.volume);
        vol_min = std::min(vol_min, ap.volume);
    }
    const size_t n = achieved.size();
    if (at_max_revenue_band) return volume < vol_max ? static_cast<int>(n) : (n > 1 ? 1 : 1);
    // ratio sum pinned to 1
    if (n == 1) return 1;
    if (volume / vol_max < 1 && volume / vol_min > 1) return static_cast<int>(n);
    return volume == vol_max || volume == vol_min ? 1 : 2;
}

DemandMeasureFamily demand_measures(const DemandGraph& dg, const Rat& p, const Rat& s) {
    DemandMeasureFamily fam;
    fam.abscissa = p;
    fam.volume = s;
    fam.truncated = dg.truncated;
    if (p == 0 && s == 0) {
        fam.representatives.push_back(DiscreteMeasure{});
        return fam;
    }
    if (!dg.border3.contains(p, s))
        throw std::domain_error("point outside the admissible vertical border demand graph");
    fam.achieved = dg.prices_at_abscissa(p);
    fam.at_max_revenue_band = dg.border1.contains(p, s);

    // canonical representatives per the constructive corollary
    for (const auto& ap : fam.achieved)
        if (ap.volume == s) {
            DiscreteMeasure mu;
            mu.atoms.push_back({ap.r, s});
            fam.representatives.push_back(std::move(mu));
            break;
        }
    if (fam.representatives.empty() && fam.at_max_revenue_band) {
        // single atom on the smallest achieved volume that still covers s
        const AchievedPrice* pick = nullptr;
        for (const auto& ap : fam.achieved)
            if (ap.volume >= s && (!pick || ap.volume < pick->volume)) pick = &ap;
        if (pick) {
            DiscreteMeasure mu;
            mu.atoms.push_back({pick->r, s});
            fam.representatives.push_back(std::move(mu));
        }
    }
    if (fam.representatives.empty()) {
        // strict two-sided mix
        const AchievedPrice* above = nullptr;
        const AchievedPrice* below = nullptr;
        for (const auto& ap : fam.achieved) {
            if (ap.volume > s && (!above || ap.volume < above->volume)) above = &ap;
            if (ap.volume < s && (!below || ap.volume > below->volume)) below = &ap;
        }
        if (!above || !below)
            throw std::domain_error("no admissible measure at the queried point");
        const Rat d1 = above->volume, d2 = below->volume;
        DiscreteMeasure mu;
        mu.atoms.push_back({above->r, d1 * (s - d2) / (d1 - d2)});
        mu.atoms.push_back({below->r, d2 * (d1 - s) / (d1 - d2)});
        mu.normalize();
        fam.representatives.push_back(std::move(mu));
    }
    return fam;
}

DiscreteMeasure supply_measure(const SupplyGraph& sg, const Rat& p, const Rat& s) {
    DiscreteMeasure mu;
    if (p == 0 && s == 0) return mu;
    const auto rho = sg.price_finder(p, s);
    if (!rho) throw std::domain_error("point outside the supply graph");
    mu.atoms.push_back({*rho, s});
    return mu;
}

// -- exports --------------------------------------------------------------

namespace {

void iv_json(std::ostringstream& out, const Iv& iv) {
    out << "{\"lo\":\"" << ext_str(iv.lo) << "\",\"hi\":\"" << ext_str(iv.hi)
        << "\",\"lo_closed\":" << (iv.lo_closed ? "true" : "false")
        << ",\"hi_closed\":" << (iv.hi_closed ? "true" : "false") << "}";
}

}  // namespace

std::string point_set_json(const PointSet2D& set) {
    std::ostringstream out;
    out << "[";
    bool first = true;
    for (const auto& prim : set.prims) {
        if (!first) out << ",";
        first = false;
        switch (prim.kind) {
            case Primitive::Kind::Point:
                out << "{\"type\":\"point\",\"p\":\"" << rat_str(prim.p0) << "\",\"d\":\""
                    << rat_str(prim.d0) << "\"}";
                break;
            case Primitive::Kind::Horizontal:
                out << "{\"type\":\"horizontal\",\"d\":\"" << rat_str(prim.d0) << "\",\"p\":";
                iv_json(out, prim.p_rng);
                out << "}";
                break;
            case Primitive::Kind::Vertical:
                out << "{\"type\":\"vertical\",\"p\":\"" << rat_str(prim.p0) << "\",\"d\":";
                iv_json(out, prim.d_rng);
                out << "}";
                break;
            case Primitive::Kind::Slanted:
                out << "{\"type\":\"slanted\",\"p_intercept\":\"" << rat_str(prim.p_of_d.a)
                    << "\",\"p_slope\":\"" << rat_str(prim.p_of_d.b) << "\",\"d\":";
                iv_json(out, prim.d_rng);
                out << "}";
                break;
        }
    }
    out << "]";
    return out.str();
}

std::string point_set_csv(const PointSet2D& set) {
    std::ostringstream out;
    out << "kind,p_lo,p_hi,d_lo,d_hi,lo_closed,hi_closed\n";
    for (const auto& prim : set.prims) {
        switch (prim.kind) {
            case Primitive::Kind::Point:
                out << "point," << rat_str(prim.p0) << ',' << rat_str(prim.p0) << ','
                    << rat_str(prim.d0) << ',' << rat_str(prim.d0) << ",1,1\n";
                break;
            case Primitive::Kind::Horizontal:
                out << "horizontal," << ext_str(prim.p_rng.lo) << ',' << ext_str(prim.p_rng.hi)
                    << ',' << rat_str(prim.d0) << ',' << rat_str(prim.d0) << ','
                    << prim.p_rng.lo_closed << ',' << prim.p_rng.hi_closed << '\n';
                break;
            case Primitive::Kind::Vertical:
                out << "vertical," << rat_str(prim.p0) << ',' << rat_str(prim.p0) << ','
                    << ext_str(prim.d_rng.lo) << ',' << ext_str(prim.d_rng.hi) << ','
                    << prim.d_rng.lo_closed << ',' << prim.d_rng.hi_closed << '\n';
                break;
            case Primitive::Kind::Slanted:
                out << "slanted," << rat_str(prim.p_of_d(prim.d_rng.lo.rat_or_throw())) << ','
                    << rat_str(prim.p_of_d(prim.d_rng.hi.rat_or_throw())) << ','
                    << ext_str(prim.d_rng.lo) << ',' << ext_str(prim.d_rng.hi) << ','
                    << prim.d_rng.lo_closed << ',' << prim.d_rng.hi_closed << '\n';
                break;
        }
    }
    return out.str();
}

}  // namespace nmkt
