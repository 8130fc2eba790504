#include "nmkt/solver.hpp"

#include <algorithm>
#include <sstream>

namespace nmkt {

MarketGeometry build_geometry(const PopulationSpec& spec) {
    MarketGeometry g;
    g.supply_side = build_supply_side(spec);
    g.demand_side = build_demand_side(spec);
    g.supply = build_supply_graph(g.supply_side);
    g.demand = build_demand_graph(g.demand_side);
    g.demand.truncated = spec.truncation.has_value();
    return g;
}

namespace {

Rat blended_volume(const MarketGeometry& g, const Rat& rho, const Rat& q) {
    const Rat lo = g.supply_side.cum.strict_at(rho);
    const Rat hi = g.supply_side.cum.weak_at(rho);
    return (1 - q) * lo + q * hi;
}

/// Pointwise P-tilde membership given the acquired volume and unit cost.
bool point_profitable(const DemandGraph& dg, const Rat& volume, const Rat& cost) {
    if (volume <= 0) return false;
    const Ext c(cost);
    const SupResult geq = dg.sup_revenue_volume_geq(volume);
    if (geq.value > c) return true;  // clause one
    const SupResult gt = dg.sup_revenue_volume_gt(volume);
    const bool weakly_better = gt.value > c || (gt.value == c && gt.attained);
    const bool strictly_somewhere = dg.sup_revenue.value > c;
    return weakly_better && strictly_somewhere;  // clause two
}

/// One parametrized stretch of deviation candidates: volume and unit cost
/// affine in the parameter over `dom` (finite, open or closed ends).
struct ParamSeg {
    Iv dom;
    Affine volume;
    Affine cost;
};

/// Subset of the open interval (lo, hi) where the affine `f` is positive
/// (nonnegative when weak).
Iv positive_region(const Affine& f, const Rat& lo, const Rat& hi, bool weak) {
    const Iv base{Ext(lo), Ext(hi), false, false};
    if (f.b == 0)
        return (f.a > 0 || (weak && f.a == 0)) ? base : Iv{Ext(Rat(0)), Ext(Rat(0)), false, false};
    const Rat z = *f.solve(Rat(0));
    const Iv keep = f.b > 0 ? Iv{Ext(z), Ext::pos_inf(), weak, false}
                            : Iv{Ext::neg_inf(), Ext(z), false, weak};
    return base.intersect(keep);
}

std::optional<Rat> region_probe(const Iv& region) {
    if (region.is_empty()) return std::nullopt;
    if (region.is_point()) return region.lo.value;
    return (region.lo.value + region.hi.value) / 2;
}

/// Decides whether the stretch meets P-tilde, exactly. Within a volume
/// stratum every primitive's sup-contribution is affine in the parameter, so
/// the profitable region is a finite union of solvable affine inequalities.
/// Each probe is confirmed pointwise before being reported.
bool seg_meets_profitable(const DemandGraph& dg, const ParamSeg& seg, Rat* witness) {
    if (seg.dom.is_empty()) return false;
    const Rat a = seg.dom.lo.rat_or_throw();
    const Rat b = seg.dom.hi.rat_or_throw();

    std::vector<Rat> cuts{a, b};
    if (seg.volume.b != 0) {
        for (const auto& prim : dg.graph.prims) {
            const Iv h = prim.heights();
            for (const Ext* bound : {&h.lo, &h.hi}) {
                if (!bound->finite()) continue;
                if (auto t = seg.volume.solve(bound->value))
                    if (a < *t && *t < b) cuts.push_back(*t);
            }
        }
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    auto confirm = [&](const Rat& t) {
        if (!seg.dom.contains(t)) return false;
        if (!point_profitable(dg, seg.volume(t), seg.cost(t))) return false;
        if (witness) *witness = t;
        return true;
    };

    for (size_t i = 0; i < cuts.size(); ++i) {
        if (confirm(cuts[i])) return true;
        if (i + 1 == cuts.size()) break;
        const Rat &lo = cuts[i], &hi = cuts[i + 1];
        const Rat s_lo = seg.volume(lo), s_hi = seg.volume(hi);
        const Rat stratum_lo = std::min(s_lo, s_hi), stratum_hi = std::max(s_lo, s_hi);

        for (const auto& prim : dg.graph.prims) {
            // clause one: this primitive witnesses revenue > cost at some
            // admissible volume
            if (auto c = sup_contribution_geq(prim, stratum_lo, stratum_hi)) {
                // contribution as affine in the parameter t
                const Affine in_t{c->value.a + c->value.b * seg.volume.a,
                                  c->value.b * seg.volume.b};
                const Affine diff{in_t.a - seg.cost.a, in_t.b - seg.cost.b};
                if (auto t = region_probe(positive_region(diff, lo, hi, false)))
                    if (confirm(*t)) return true;
            }
            // clause two: weak cover with strictly larger volume, plus a
            // strict improvement anywhere
            if (auto c = sup_contribution_gt(prim, stratum_lo, stratum_hi)) {
                if (!dg.sup_revenue.value.finite()) continue;
                const Affine in_t{c->value.a + c->value.b * seg.volume.a,
                                  c->value.b * seg.volume.b};
                const Affine diff{in_t.a - seg.cost.a, in_t.b - seg.cost.b};
                const Affine gap{dg.sup_revenue.value.value - seg.cost.a, -seg.cost.b};
                const Iv joint = positive_region(diff, lo, hi, c->attained)
                                     .intersect(positive_region(gap, lo, hi, false));
                if (auto t = region_probe(joint))
                    if (confirm(*t)) return true;
            }
        }
    }
    return false;
}

/// Enumerates deviation stretches lex-above (rho0, q0) and tests each.
/// rho0 == -inf scans everything (used for the no-trade check).
bool exists_profitable(const MarketGeometry& g, const Ext& rho0, const Rat& q0,
                       std::pair<Rat, Rat>* witness) {
    const auto& cum = g.supply_side.cum;
    const Affine cost = g.supply_side.unit_cost;
    const auto& nodes = cum.nodes();

    auto found = [&](const Rat& rho, const Rat& q) {
        if (witness) *witness = {rho, q};
        return true;
    };

    // the candidate's own price with a higher residual ratio
    if (rho0.finite() && q0 < 1) {
        const Rat rho = rho0.value;
        const Rat lo = cum.strict_at(rho), hi = cum.weak_at(rho);
        if (lo == hi) {
            if (point_profitable(g.demand, hi, cost(rho))) return found(rho, 1);
        } else {
            // blend stretch q in (q0, 1]
            ParamSeg seg;
            const Rat v0 = (1 - q0) * lo + q0 * hi;
            seg.dom = Iv{Ext(v0), Ext(hi), false, true};
            seg.volume = Affine{0, 1};
            seg.cost = Affine{cost(rho), 0};
            Rat w;
            if (seg_meets_profitable(g.demand, seg, &w))
                return found(rho, (w - lo) / (hi - lo));
        }
    }

    for (size_t i = 0; i < nodes.size(); ++i) {
        const auto& n = nodes[i];
        // breakpoint itself: jump blend or the attained point
        if (Ext(n.x) > rho0) {
            if (n.jump > 0) {
                ParamSeg seg;
                seg.dom = Iv{Ext(n.strict_val), Ext(n.weak_val), true, true};
                seg.volume = Affine{0, 1};
                seg.cost = Affine{cost(n.x), 0};
                Rat w;
                if (seg_meets_profitable(g.demand, seg, &w)) {
                    const Rat q = (w - n.strict_val) / (n.weak_val - n.strict_val);
                    return found(n.x, q);
                }
            } else if (n.weak_val > 0 && point_profitable(g.demand, n.weak_val, cost(n.x))) {
                return found(n.x, 1);
            }
        }
        // open gap to the right
        const bool last = i + 1 == nodes.size();
        Ext gap_hi = last ? Ext::pos_inf() : Ext(nodes[i + 1].x);
        Ext gap_lo = Ext(n.x);
        if (gap_lo < rho0) gap_lo = rho0;
        if (!(gap_lo < gap_hi)) continue;
        if (n.slope_right > 0) {
            ParamSeg seg;
            seg.dom = Iv{gap_lo, gap_hi, false, false};
            // volume = weak_val + slope * (rho - n.x)
            seg.volume = Affine{n.weak_val - n.slope_right * n.x, n.slope_right};
            seg.cost = cost;
            Rat w;
            if (seg_meets_profitable(g.demand, seg, &w)) return found(w, 1);
        } else if (n.weak_val > 0) {
            // plateau: constant volume, rising cost; clause truth is monotone
            // along falling cost, so probing just above gap_lo decides, and
            // the witness search only needs the near end
            ParamSeg seg;
            Ext hi2 = gap_hi;
            if (!hi2.finite()) {
                // beyond the top demand revenue no deviation can profit;
                // clip safely above it
                Rat clip = gap_lo.rat_or_throw() + 1;
                if (g.demand.sup_revenue.value.finite()) {
                    const Rat target = g.demand.sup_revenue.value.value;
                    // cost(rho) >= target kills both clauses
                    if (auto z = cost.solve(target))
                        clip = std::max(clip, *z + 1);
                }
                hi2 = Ext(clip);
            }
            seg.dom = Iv{gap_lo, hi2, false, false};
            seg.volume = Affine{n.weak_val, 0};
            seg.cost = cost;
            Rat w;
            if (seg_meets_profitable(g.demand, seg, &w)) return found(w, 1);
        }
    }
    return false;
}

}  // namespace

bool profitable_set_membership(const MarketGeometry& g, const Rat& rho, const Rat& q) {
    if (q < 0 || q > 1) throw std::domain_error("residual ratio must lie in [0,1]");
    const Rat volume = blended_volume(g, rho, q);
    if (volume <= 0) return false;
    const auto c = conditional_supply_cost(g.supply_side, q, rho);
    return point_profitable(g.demand, volume, c.value);
}

bool profitable_set_membership(const PopulationSpec& spec, const Rat& rho, const Rat& q) {
    return profitable_set_membership(build_geometry(spec), rho, q);
}

bool profitable_point_above(const MarketGeometry& g, const Rat& rho, const Rat& q,
                            std::pair<Rat, Rat>* witness) {
    return exists_profitable(g, Ext(rho), q, witness);
}

bool profitable_set_empty(const MarketGeometry& g) {
    return !exists_profitable(g, Ext::neg_inf(), Rat(1), nullptr);
}

// -- Algorithm 1 ----------------------------------------------------------

namespace {

/// Heights at which the slice of B = (A_D cap A_S) has positive length, as a
/// supremum (the set itself is a finite interval union).
Rat positive_slice_height_sup(const MarketGeometry& g) {
    Rat best = 0;
    const auto& rd = g.demand.right_edge.pieces;
    const auto& ls = g.supply.left_edge.pieces;
    for (const auto& rp : rd) {
        for (const auto& lp : ls) {
            Iv common = rp.d_rng.intersect(lp.d_rng);
            if (common.is_empty()) continue;
            // positive length iff R(d) - L(d) > 0 somewhere in common
            const Affine diff{rp.f.a - lp.f.a, rp.f.b - lp.f.b};
            Iv where = common;
            if (diff.b == 0) {
                if (diff.a <= 0) continue;
            } else if (auto z = diff.solve(Rat(0))) {
                Iv keep = diff.b > 0 ? Iv{Ext(*z), Ext::pos_inf(), false, false}
                                     : Iv{Ext::neg_inf(), Ext(*z), false, false};
                where = common.intersect(keep);
                if (where.is_empty()) continue;
            }
            best = std::max(best, where.hi.rat_or_throw());
        }
    }
    return best;
}

std::vector<Primitive> intersect_primitives(const Primitive& a, const Primitive& b) {
    std::vector<Primitive> out;
    auto add_point = [&](const Rat& p, const Rat& d) {
        if (a.contains(p, d) && b.contains(p, d)) out.push_back(Primitive::point(p, d));
    };
    using K = Primitive::Kind;
    if (a.kind == K::Point) {
        add_point(a.p0, a.d0);
        return out;
    }
    if (b.kind == K::Point) {
        add_point(b.p0, b.d0);
        return out;
    }
    if (a.kind == K::Horizontal && b.kind == K::Horizontal) {
        if (a.d0 != b.d0) return out;
        Iv cut = a.p_rng.intersect(b.p_rng);
        if (cut.is_empty()) return out;
        if (cut.is_point())
            out.push_back(Primitive::point(cut.lo.value, a.d0));
        else
            out.push_back(Primitive::horizontal(a.d0, cut));
        return out;
    }
    if (a.kind == K::Vertical && b.kind == K::Vertical) {
        if (a.p0 != b.p0) return out;
        Iv cut = a.d_rng.intersect(b.d_rng);
        if (cut.is_empty()) return out;
        if (cut.is_point())
            out.push_back(Primitive::point(a.p0, cut.lo.value));
        else
            out.push_back(Primitive::vertical(a.p0, cut));
        return out;
    }
    if (a.kind == K::Slanted && b.kind == K::Slanted) {
        if (a.p_of_d == b.p_of_d) {
            Iv cut = a.d_rng.intersect(b.d_rng);
            if (cut.is_empty()) return out;
            if (cut.is_point())
                out.push_back(Primitive::point(a.p_of_d(cut.lo.value), cut.lo.value));
            else
                out.push_back(Primitive::slanted(a.p_of_d, cut));
            return out;
        }
        const Affine diff{a.p_of_d.a - b.p_of_d.a, a.p_of_d.b - b.p_of_d.b};
        if (auto d = diff.solve(Rat(0))) add_point(a.p_of_d(*d), *d);
        return out;
    }
    // mixed kinds: reduce to point candidates
    const Primitive& h = a.kind == K::Horizontal ? a : b;
    const Primitive& o = a.kind == K::Horizontal ? b : a;
    if (h.kind == K::Horizontal) {
        if (o.kind == K::Vertical) {
            add_point(o.p0, h.d0);
        } else if (o.kind == K::Slanted) {
            add_point(o.p_of_d(h.d0), h.d0);
        }
        return out;
    }
    const Primitive& v = a.kind == K::Vertical ? a : b;
    const Primitive& s = a.kind == K::Vertical ? b : a;
    if (v.kind == K::Vertical && s.kind == K::Slanted) {
        if (auto d = s.p_of_d.solve(v.p0)) add_point(v.p0, *d);
    }
    return out;
}

EquilibriumCandidate make_candidate(const MarketGeometry& g, const Rat& p, const Rat& s,
                                    const DiscreteMeasure& demand,
                                    const DemandMeasureFamily& fam) {
    EquilibriumCandidate cand;
    cand.supply = supply_measure(g.supply, p, s);
    if (auto q = g.supply.ratio_finder(p, s)) cand.q = *q;
    cand.demand = demand;
    cand.rationing = !demand.atoms.empty() && fam.ratio_sum(demand) < 1;
    cand.multiple_prices = demand.atoms.size() > 1;
    return cand;
}

}  // namespace

EquilibriumSet find_equilibria(const MarketGeometry& g) {
    EquilibriumSet out;
    out.null_trade_equilibrium = profitable_set_empty(g);

    // lower bound on equilibrium volume
    Rat q_bar = positive_slice_height_sup(g);
    for (const auto& bp : g.demand.border2.prims)
        for (const auto& sp : g.supply.graph.prims)
            for (const auto& hit : intersect_primitives(bp, sp)) {
                const Iv h = hit.heights();
                if (h.hi.finite()) q_bar = std::max(q_bar, h.hi.value);
            }

    // v-bar: rightmost admissible-border point of B at height q_bar
    auto border3_abscissas_at = [&](const Rat& height) {
        std::vector<Rat> ps;
        for (const auto& prim : g.demand.border3.prims) {
            switch (prim.kind) {
                case Primitive::Kind::Point:
                    if (prim.d0 == height) ps.push_back(prim.p0);
                    break;
                case Primitive::Kind::Vertical:
                    if (prim.d_rng.contains(height)) ps.push_back(prim.p0);
                    break;
                case Primitive::Kind::Slanted:
                    if (prim.d_rng.contains(height)) ps.push_back(prim.p_of_d(height));
                    break;
                case Primitive::Kind::Horizontal:
                    if (prim.d0 == height) {
                        if (prim.p_rng.hi_closed && prim.p_rng.hi.finite())
                            ps.push_back(prim.p_rng.hi.value);
                        if (prim.p_rng.lo_closed && prim.p_rng.lo.finite())
                            ps.push_back(prim.p_rng.lo.value);
                    }
                    break;
            }
        }
        return ps;
    };

    Rat v_bar = 0;
    for (const auto& p : border3_abscissas_at(q_bar)) {
        const bool in_b = (p == 0 && q_bar == 0) ||
                          (g.demand.in_augmented(p, q_bar) && g.supply.in_augmented(p, q_bar));
        if (in_b && p > v_bar) v_bar = p;
    }

    // S-underbar and v-underbar
    IvSet s0 = g.supply.abscissas_at_height(q_bar);
    if (q_bar == 0) s0.add(Iv::point(Rat(0)));
    s0 = s0.intersect(Iv{Ext(Rat(0)), Ext(v_bar), true, true});

    Ext v_under = Ext::pos_inf();
    {
        IvSet without = s0.minus_point(v_bar);
        Rat u = 0;
        if (auto s = without.sup(); s && s->finite() && s->value > 0) u = s->value;
        std::vector<Rat> cands;
        if (s0.contains(u)) cands.push_back(u);
        if (s0.contains(v_bar)) cands.push_back(v_bar);
        for (const auto& c : cands)
            if (Ext(c) < v_under) v_under = Ext(c);
    }

    if (v_under < Ext(v_bar)) {
        // unique positive-profit equilibrium
        const Rat p_supply = v_under.rat_or_throw();
        auto fam = demand_measures(g.demand, v_bar, q_bar);
        out.kind = EquilibriumSet::Kind::UniquePositiveProfit;
        for (const auto& mu : fam.representatives) {
            auto cand = make_candidate(g, p_supply, q_bar, mu, fam);
            out.representatives.push_back(std::move(cand));
        }
        out.point_infos.push_back(
            {v_bar, q_bar, fam.unique(), fam.max_support_size(),
             !fam.representatives.empty() && fam.ratio_sum(fam.representatives.front()) < 1});
        return out;
    }

    // zero-profit family E = V_D^(3) cap S cap (R+ x [q_bar, inf))
    const Iv window{Ext(q_bar), Ext::pos_inf(), true, false};
    for (const auto& bp : g.demand.border3.prims)
        for (const auto& sp : g.supply.graph.prims)
            for (auto& hit : intersect_primitives(bp, sp)) {
                // clip to heights >= q_bar and abscissas > 0
                if (hit.kind == Primitive::Kind::Point) {
                    if (hit.p0 > 0 && window.contains(hit.d0)) out.family.prims.push_back(hit);
                } else {
                    Iv cut = hit.d_rng.intersect(window);
                    if (cut.is_empty()) continue;
                    Primitive clipped = hit;
                    clipped.d_rng = cut;
                    if (cut.is_point()) {
                        const Rat d = cut.lo.value;
                        const Rat p =
                            hit.kind == Primitive::Kind::Vertical ? hit.p0 : hit.p_of_d(d);
                        if (p > 0) out.family.prims.push_back(Primitive::point(p, d));
                    } else {
                        out.family.prims.push_back(clipped);
                    }
                }
            }

    if (out.family.prims.empty()) {
        out.kind = EquilibriumSet::Kind::Empty;
        return out;
    }
    out.kind = EquilibriumSet::Kind::ZeroProfitFamily;

    auto emit_point = [&](const Rat& p, const Rat& s) {
        for (const auto& info : out.point_infos)
            if (info.cost == p && info.volume == s) return;  // dedupe
        auto fam = demand_measures(g.demand, p, s);
        for (const auto& mu : fam.representatives)
            out.representatives.push_back(make_candidate(g, p, s, mu, fam));
        out.point_infos.push_back(
            {p, s, fam.unique(), fam.max_support_size(),
             !fam.representatives.empty() && fam.ratio_sum(fam.representatives.front()) < 1});
    };

    for (const auto& prim : out.family.prims) {
        switch (prim.kind) {
            case Primitive::Kind::Point: emit_point(prim.p0, prim.d0); break;
            case Primitive::Kind::Vertical: {
                const Iv& r = prim.d_rng;
                if (r.lo_closed) emit_point(prim.p0, r.lo.value);
                if (r.hi_closed) emit_point(prim.p0, r.hi.value);
                emit_point(prim.p0, (r.lo.value + r.hi.value) / 2);
                break;
            }
            case Primitive::Kind::Slanted: {
                const Iv& r = prim.d_rng;
                if (r.lo_closed) emit_point(prim.p_of_d(r.lo.value), r.lo.value);
                if (r.hi_closed) emit_point(prim.p_of_d(r.hi.value), r.hi.value);
                const Rat mid = (r.lo.value + r.hi.value) / 2;
                emit_point(prim.p_of_d(mid), mid);
                break;
            }
            case Primitive::Kind::Horizontal: {
                const Iv& r = prim.p_rng;
                if (r.lo_closed && r.lo.finite()) emit_point(r.lo.value, prim.d0);
                if (r.hi_closed && r.hi.finite()) emit_point(r.hi.value, prim.d0);
                if (r.lo.finite() && r.hi.finite())
                    emit_point((r.lo.value + r.hi.value) / 2, prim.d0);
                break;
            }
        }
    }
    return out;
}

EquilibriumSet find_equilibria(const PopulationSpec& spec) {
    return find_equilibria(build_geometry(spec));
}

// -- verifier -------------------------------------------------------------

VerifyResult verify_equilibrium(const MarketGeometry& g, const EquilibriumCandidate& cand) {
    VerifyResult res;
    auto fail = [&](const std::string& clause) {
        res.pass = false;
        if (res.violated_clause.empty()) res.violated_clause = clause;
        return res;
    };
    res.notes.push_back("clause 4 (zero-profit fallback) vacuous: empty continuation sets");

    if (cand.supply.atoms.size() > 1) return fail("Equal Supply Bid");
    if (cand.q < 0 || cand.q > 1) return fail("Equal Supply Bid");

    if (cand.supply.atoms.empty() || cand.supply.atoms.front().second == 0) {
        // the no-trade candidate
        if (!cand.demand.atoms.empty()) return fail("No Unmatched Supply");
        if (!profitable_set_empty(g)) return fail("No Profitable Deviation Above");
        return res;
    }

    const Rat rho = cand.supply.atoms.front().first;
    const Rat mass = cand.supply.atoms.front().second;
    const Rat volume = blended_volume(g, rho, cand.q);
    if (mass != volume) return fail("Equal Supply Bid");

    const auto cost = conditional_supply_cost(g.supply_side, cand.q, rho);

    // clause: all acquired scarcity placed and absorbed at achieved prices
    if (cand.demand.total() != volume) return fail("No Unmatched Supply");
    Rat ratio_sum = 0;
    Rat common_revenue;
    bool have_revenue = false;
    for (const auto& [r, m] : cand.demand.atoms) {
        const Rat vol_r = g.demand.volume_at(r);
        if (vol_r <= 0) return fail("No Unmatched Supply");
        const auto rev = g.demand.revenue_at(r);
        if (rev.vacuous) return fail("No Unmatched Supply");
        if (have_revenue && rev.value != common_revenue)
            return fail("Demand Prices as Conditional Maximizers");
        common_revenue = rev.value;
        have_revenue = true;
        ratio_sum += m / vol_r;
    }
    if (ratio_sum > 1) return fail("No Unmatched Supply");

    // clause: the common revenue is the conditional maximizer and covers cost
    const SupResult best = g.demand.sup_revenue_volume_geq(volume);
    if (!best.attained || Ext(common_revenue) != best.value)
        return fail("Demand Prices as Conditional Maximizers");
    if (common_revenue < cost.value) return fail("Demand Prices as Conditional Maximizers");

    // clause: full absorption or global-maximum revenue (rationing allowed
    // only at the top)
    if (ratio_sum < 1) {
        const bool at_top =
            g.demand.sup_revenue.attained && Ext(common_revenue) == g.demand.sup_revenue.value;
        if (!at_top) return fail("Sandwiched Demand Prices");
    }

    // clause: no profitable deviation lexicographically above
    std::pair<Rat, Rat> wit;
    if (profitable_point_above(g, rho, cand.q, &wit)) {
        res.notes.push_back("deviation witness at rho=" + rat_str(wit.first) +
                            ", q=" + rat_str(wit.second));
        return fail("No Profitable Deviation Above");
    }
    return res;
}

VerifyResult verify_equilibrium(const PopulationSpec& spec, const EquilibriumCandidate& cand) {
    return verify_equilibrium(build_geometry(spec), cand);
}

// -- monopoly resale ------------------------------------------------------

ResaleValue monopoly_optimistic_resale_value(const MarketGeometry& g, const Rat& rho, const Rat& q,
                                             const Rat& r) {
    ResaleValue out;
    const Rat volume = blended_volume(g, rho, q);
    const Rat c = conditional_supply_cost(g.supply_side, q, rho).value;

    // e2(z) = p-hat(z) below the quote, 0 from it on (p-hat carries the
    // zero-volume convention)
    auto e2 = [&](const Rat& z) -> Rat {
        if (z >= r) return 0;
        return g.demand.revenue_at(z).value;
    };
    auto e2_right_limit = [&](const Rat& z) -> Rat {
        if (z >= r) return 0;
        // pieces are left-open, so the piece strictly containing z or
        // starting at z carries the right limit
        for (const auto& piece : g.demand.pieces) {
            if (piece.r_dom.lo == Ext(z)) return piece.revenue(z);
            if (piece.r_dom.contains(z) && piece.r_dom.hi != Ext(z)) return piece.revenue(z);
        }
        return 0;
    };

    // sup of e2 over (-inf, z] (include_z) or (-inf, z): every value must
    // stay <= c for z to be a crossing point
    auto prefix_within = [&](const Rat& z, bool include_z) {
        const Iv before{Ext::neg_inf(), Ext(z), false, include_z};
        for (const auto& piece : g.demand.pieces) {
            Iv clip = piece.r_dom.intersect(before).intersect(
                Iv{Ext::neg_inf(), Ext(r), false, false});
            if (clip.is_empty()) continue;
            const Affine& f = piece.revenue;
            if (f.b < 0 && !clip.lo.finite()) return false;  // revenue unbounded above
            Rat sup;
            if (f.b == 0)
                sup = f.a;
            else if (f.b > 0)
                sup = f(clip.hi.rat_or_throw());
            else
                sup = f(clip.lo.rat_or_throw());
            // an open endpoint still forces sup <= c: values approach it
            if (sup > c) return false;
        }
        if (c >= 0) return true;
        // with a negative cost the zero stretch of e2 itself violates
        Ext zero_from = Ext(r);
        if (!g.demand.pieces.empty() && g.demand.pieces.back().r_dom.hi < zero_from)
            zero_from = g.demand.pieces.back().r_dom.hi;
        return Ext(z) < zero_from || (Ext(z) == zero_from && !include_z);
    };

    // candidate first-crossing points: piece bounds, in-piece solutions of
    // revenue == c, and the quote itself
    std::vector<Rat> zs;
    for (const auto& piece : g.demand.pieces) {
        if (piece.r_dom.lo.finite()) zs.push_back(piece.r_dom.lo.value);
        if (piece.r_dom.hi.finite()) zs.push_back(piece.r_dom.hi.value);
        if (auto z = piece.revenue.solve(c); z && piece.r_dom.contains(*z)) zs.push_back(*z);
    }
    zs.push_back(r);
    std::sort(zs.begin(), zs.end());
    zs.erase(std::unique(zs.begin(), zs.end()), zs.end());

    const Rat total = g.demand_side.cum.total();
    std::vector<Rat> ds;
    for (const Rat& z : zs) {
        if (e2(z) >= c && prefix_within(z, false)) ds.push_back(g.demand.volume_at(z));
        if (e2_right_limit(z) >= c && prefix_within(z, true))
            ds.push_back(total - g.demand_side.cum.weak_at(z));  // right limit of max demand
    }
    std::sort(ds.begin(), ds.end());
    ds.erase(std::unique(ds.begin(), ds.end()), ds.end());

    if (ds.empty()) {
        out.empty_set = true;
        return out;
    }
    bool first = true;
    for (const Rat& d : ds) {
        Rat u;
        if (d <= volume) {
            u = -(volume - d) * c;
        } else {
            const Rat vol_quote = g.demand.volume_at(r);
            const auto rev_quote = g.demand.revenue_at(r);
            if (d == vol_quote) {
                out.unbounded = true;
                continue;
            }
            u = vol_quote * (d - volume) / (d - vol_quote) * (rev_quote.value - c);
        }
        if (first || u > out.value) out.value = u;
        first = false;
    }
    return out;
}

// -- classification -------------------------------------------------------

Classification classify(const EquilibriumSet& eqset) {
    Classification c;
    c.exists = eqset.kind != EquilibriumSet::Kind::Empty;
    if (!c.exists) return c;
    bool single_point = eqset.point_infos.size() == 1;
    if (eqset.kind == EquilibriumSet::Kind::ZeroProfitFamily) {
        // a family with any non-degenerate primitive is a continuum
        for (const auto& prim : eqset.family.prims)
            if (prim.kind != Primitive::Kind::Point) single_point = false;
    }
    c.unique = single_point && eqset.point_infos.front().measure_unique;
    for (const auto& info : eqset.point_infos) {
        c.rationing_anywhere = c.rationing_anywhere || info.rationing_possible;
        c.max_demand_support = std::max(c.max_demand_support, info.max_support);
    }
    return c;
}

// -- JSON -----------------------------------------------------------------

namespace {

void measure_json(std::ostringstream& out, const DiscreteMeasure& mu) {
    out << "{\"atoms\":[";
    bool first = true;
    for (const auto& [loc, mass] : mu.atoms) {
        if (!first) out << ",";
        first = false;
        out << "[\"" << rat_str(loc) << "\",\"" << rat_str(mass) << "\"]";
    }
    out << "]";
    if (mu.tail) out << ",\"tail\":\"" << *mu.tail << "\"";
    out << "}";
}

}  // namespace

std::string equilibria_json(const EquilibriumSet& eqset) {
    std::ostringstream out;
    out << "{\"kind\":\"";
    switch (eqset.kind) {
        case EquilibriumSet::Kind::Empty: out << "empty"; break;
        case EquilibriumSet::Kind::UniquePositiveProfit: out << "unique_positive_profit"; break;
        case EquilibriumSet::Kind::ZeroProfitFamily: out << "zero_profit_family"; break;
    }
    out << "\",\"null_trade_equilibrium\":"
        << (eqset.null_trade_equilibrium ? "true" : "false") << ",\"candidates\":[";
    bool first = true;
    for (const auto& cand : eqset.representatives) {
        if (!first) out << ",";
        first = false;
        out << "{\"supply\":";
        if (cand.supply.atoms.empty())
            out << "{\"price\":null,\"mass\":\"0\"}";
        else
            out << "{\"price\":\"" << rat_str(cand.supply.atoms.front().first) << "\",\"mass\":\""
                << rat_str(cand.supply.atoms.front().second) << "\"}";
        out << ",\"q\":\"" << rat_str(cand.q) << "\",\"demand\":";
        measure_json(out, cand.demand);
        out << ",\"rationing\":" << (cand.rationing ? "true" : "false")
            << ",\"multiple_prices\":" << (cand.multiple_prices ? "true" : "false") << "}";
    }
    out << "],\"family\":" << point_set_json(eqset.family) << "}";
    return out.str();
}

}  // namespace nmkt
