#include "nmkt/curves.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace nmkt {

// -- CumulativeMass -------------------------------------------------------

void CumulativeMass::add_atom(Rat x, Rat mass) {
    if (mass == 0) return;
    raw_.push_back({std::move(x), std::move(mass), Rat(0)});
    finalized_ = false;
}

void CumulativeMass::add_ramp(Rat lo, Rat hi, Rat density) {
    if (density == 0) return;
    raw_.push_back({lo, Rat(0), density});
    raw_.push_back({hi, Rat(0), -density});
    finalized_ = false;
}

void CumulativeMass::finalize() {
    std::map<Rat, std::pair<Rat, Rat>> merged;  // x -> (jump, dslope)
    for (const auto& e : raw_) {
        auto& slot = merged[e.x];
        slot.first += e.jump;
        slot.second += e.dslope;
    }
    nodes_.clear();
    Rat value = 0, slope = 0;
    const Rat* prev_x = nullptr;
    for (const auto& [x, js] : merged) {
        if (prev_x) value += slope * (x - *prev_x);
        Node n;
        n.x = x;
        n.strict_val = value;
        n.jump = js.first;
        n.weak_val = value + js.first;
        slope += js.second;
        n.slope_right = slope;
        value = n.weak_val;
        nodes_.push_back(std::move(n));
        prev_x = &nodes_.back().x;
    }
    total_ = value;
    finalized_ = true;
}

Rat CumulativeMass::strict_at(const Rat& x) const {
    if (nodes_.empty()) return 0;
    // last node with node.x <= x
    auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x,
                               [](const Rat& v, const Node& n) { return v < n.x; });
    if (it == nodes_.begin()) return 0;
    const Node& n = *(it - 1);
    if (n.x == x) return n.strict_val;
    return n.weak_val + n.slope_right * (x - n.x);
}

Rat CumulativeMass::weak_at(const Rat& x) const {
    if (nodes_.empty()) return 0;
    auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x,
                               [](const Rat& v, const Node& n) { return v < n.x; });
    if (it == nodes_.begin()) return 0;
    const Node& n = *(it - 1);
    if (n.x == x) return n.weak_val;
    return n.weak_val + n.slope_right * (x - n.x);
}

// -- MonotoneStepCorrespondence -------------------------------------------

namespace {

// index of the gap containing `price` strictly, or the breakpoint index
struct Location {
    bool at_breakpoint;
    size_t index;  // breakpoint index, or gap index
};

Location locate(const std::vector<MonotoneStepCorrespondence::Breakpoint>& bps,
                const Rat& price) {
    size_t lo = 0, hi = bps.size();
    while (lo < hi) {
        size_t mid = (lo + hi) / 2;
        if (bps[mid].price < price)
            lo = mid + 1;
        else
            hi = mid;
    }
    if (lo < bps.size() && bps[lo].price == price) return {true, lo};
    return {false, lo};  // gap index lo means between bps[lo-1] and bps[lo]
}

}  // namespace

Rat MonotoneStepCorrespondence::min_at(const Rat& price) const {
    if (breakpoints.empty()) return gaps.at(0)(price);
    const auto loc = locate(breakpoints, price);
    if (loc.at_breakpoint) return breakpoints[loc.index].lo;
    return gaps.at(loc.index)(price);
}

Rat MonotoneStepCorrespondence::max_at(const Rat& price) const {
    if (breakpoints.empty()) return gaps.at(0)(price);
    const auto loc = locate(breakpoints, price);
    if (loc.at_breakpoint) return breakpoints[loc.index].hi;
    return gaps.at(loc.index)(price);
}

Rat MonotoneStepCorrespondence::bound() const {
    return orientation == Orientation::NonDecreasing ? limit_high : limit_low;
}

MonotoneVerdict check_maximal_monotone(const MonotoneStepCorrespondence& corr) {
    MonotoneVerdict v;
    auto fail = [&](const std::string& msg) {
        v.pass = false;
        v.issues.push_back(msg);
    };
    const bool inc = corr.orientation == MonotoneStepCorrespondence::Orientation::NonDecreasing;

    if (corr.gaps.size() != corr.breakpoints.size() + 1) {
        fail("gap evaluator count must be breakpoints+1");
        return v;
    }
    for (size_t i = 0; i + 1 < corr.breakpoints.size(); ++i)
        if (!(corr.breakpoints[i].price < corr.breakpoints[i + 1].price))
            fail("breakpoints must be strictly ascending");

    if (corr.gaps.front().b != 0 || corr.gaps.back().b != 0)
        fail("extreme gaps must be constant for finite limits");
    else {
        const Rat low = corr.gaps.front().a;
        const Rat high = corr.gaps.back().a;
        if (low != corr.limit_low) fail("limit at -inf disagrees with the leftmost value");
        if (high != corr.limit_high) fail("limit at +inf disagrees with the rightmost value");
    }

    for (size_t i = 0; i < corr.breakpoints.size(); ++i) {
        const auto& bp = corr.breakpoints[i];
        if (bp.lo > bp.hi) fail("value set at " + rat_str(bp.price) + " is not an interval");
        const Rat left = corr.gaps[i](bp.price);
        const Rat right = corr.gaps[i + 1](bp.price);
        // maximal monotonicity: the interval at a breakpoint spans exactly the
        // one-sided limits
        const Rat want_lo = inc ? left : right;
        const Rat want_hi = inc ? right : left;
        if (bp.lo != want_lo)
            fail("lower value at " + rat_str(bp.price) + " misses its one-sided limit");
        if (bp.hi != want_hi)
            fail("upper value at " + rat_str(bp.price) + " misses its one-sided limit");
    }
    for (size_t g = 0; g < corr.gaps.size(); ++g) {
        const Rat slope = corr.gaps[g].b;
        if (inc ? slope < 0 : slope > 0) fail("gap evaluator violates monotone orientation");
    }
    return v;
}

// -- aggregation ----------------------------------------------------------

namespace {

struct SupplyAggregation {
    CumulativeMass cum;
    Affine unit_payoff;  // shared across classes
};

SupplyAggregation aggregate_supply(const PopulationSpec& spec) {
    SupplyAggregation agg;
    bool first = true;
    for (const auto& cls : spec.suppliers) {
        const Affine payoff = spec.kind.supplier_unit_payoff(cls);
        if (first) {
            agg.unit_payoff = payoff;
            first = false;
        } else if (!(payoff == agg.unit_payoff)) {
            throw std::invalid_argument(
                "supported kinds share one affine unit payoff across supplier classes");
        }
        if (cls.weight.type == WeightSpec::Type::Atom) {
            const auto strat = spec.kind.supplier_strategy(cls, cls.h0);
            if (strat.volume != cls.h1)
                throw std::invalid_argument("supplier optimal volume must equal h1");
            agg.cum.add_atom(strat.cutoff, cls.weight.mass * strat.volume);
        } else {
            // the cutoff must track the segment coordinate for the closed
            // forms below to hold
            for (const Rat& probe : {cls.weight.lo, (cls.weight.lo + cls.weight.hi) / 2}) {
                const auto strat = spec.kind.supplier_strategy(cls, probe);
                if (strat.cutoff != probe || strat.volume != cls.h1)
                    throw std::invalid_argument(
                        "segment supplier classes need cutoff == coordinate and constant volume");
            }
            agg.cum.add_ramp(cls.weight.lo, cls.weight.hi, cls.weight.density * cls.h1);
        }
    }
    agg.cum.finalize();
    return agg;
}

MonotoneStepCorrespondence correspondence_from_cum(const CumulativeMass& cum, bool supply_side) {
    MonotoneStepCorrespondence corr;
    corr.orientation = supply_side ? MonotoneStepCorrespondence::Orientation::NonDecreasing
                                   : MonotoneStepCorrespondence::Orientation::NonIncreasing;
    const Rat total = cum.total();
    // supply: value = cumulative mass; demand: value = total - cumulative
    auto lift = [&](const Rat& m) { return supply_side ? m : total - m; };

    corr.limit_low = lift(Rat(0));
    corr.limit_high = lift(total);
    const auto& nodes = cum.nodes();
    if (nodes.empty()) {
        corr.gaps.push_back(Affine{corr.limit_low, 0});
        return corr;
    }
    corr.gaps.push_back(Affine{corr.limit_low, 0});
    for (size_t i = 0; i < nodes.size(); ++i) {
        const auto& n = nodes[i];
        Rat a = lift(n.strict_val), b = lift(n.weak_val);
        if (!supply_side) std::swap(a, b);
        corr.breakpoints.push_back({n.x, a, b});
        // affine on (x_i, x_{i+1}): cumulative = weak_val + slope*(x - x_i)
        const Rat slope = supply_side ? n.slope_right : -n.slope_right;
        const Rat base = lift(n.weak_val);
        corr.gaps.push_back(Affine{base - slope * n.x, slope});
    }
    return corr;
}

}  // namespace

SupplySide build_supply_side(const PopulationSpec& spec) {
    spec.validate_structure();
    SupplySide side;
    auto agg = aggregate_supply(spec);
    side.cum = std::move(agg.cum);
    side.corr = correspondence_from_cum(side.cum, true);
    side.s_max = side.cum.total();
    side.unit_cost = Affine{-agg.unit_payoff.a, -agg.unit_payoff.b};

    const auto& nodes = side.cum.nodes();
    if (!nodes.empty() && side.s_max > 0) {
        const Rat first_bp = nodes.front().x;
        const bool jump_at_first = nodes.front().jump > 0;
        side.cost_upper.pieces.push_back(
            {Iv{Ext(first_bp), Ext::pos_inf(), jump_at_first, false}, side.unit_cost});
        // strict volume turns positive only above the first breakpoint
        side.cost_lower.pieces.push_back(
            {Iv{Ext(first_bp), Ext::pos_inf(), false, false}, side.unit_cost});
    }
    return side;
}

DemandSide build_demand_side(const PopulationSpec& spec) {
    spec.validate_structure();
    DemandSide side;

    struct ClassInfo {
        Rat cutoff;
        Rat volume_mass;    // v-underbar * class mass
        Rat revenue_scale;  // eta1 * class mass
        PwAffine revenue;
    };
    std::vector<ClassInfo> infos;
    bool all_identity_revenue = true;

    for (const auto& cls : spec.demanders) {
        if (cls.weight.type == WeightSpec::Type::Atom) {
            const auto strat = derive_demander_strategy(spec, cls, spec.kind);
            ClassInfo info;
            info.cutoff = strat.cutoff;
            info.volume_mass = cls.weight.mass * strat.volume;
            info.revenue_scale = cls.weight.mass * cls.eta1;
            info.revenue = spec.kind.demander_unit_revenue(spec, cls);
            for (const auto& piece : info.revenue.pieces)
                if (!(piece.f == Affine{0, 1})) all_identity_revenue = false;
            side.cum.add_atom(strat.cutoff, info.volume_mass);
            infos.push_back(std::move(info));
        } else {
            // uniform cutoff segment (trading); revenue is the identity there
            for (const Rat& probe : {cls.weight.lo, (cls.weight.lo + cls.weight.hi) / 2}) {
                const auto strat = spec.kind.demander_strategy(spec, cls, probe);
                if (strat.cutoff != probe || strat.volume != cls.eta1)
                    throw std::invalid_argument(
                        "segment demander classes need cutoff == coordinate and constant volume");
            }
            side.cum.add_ramp(cls.weight.lo, cls.weight.hi, cls.weight.density * cls.eta1);
        }
    }
    side.cum.finalize();
    side.corr = correspondence_from_cum(side.cum, false);
    side.d_max = side.cum.total();

    if (side.d_max == 0) return side;
    const Rat top_cutoff = side.cum.nodes().back().x;

    if (all_identity_revenue) {
        // both unit revenue and volume weights cancel: revenue == price
        side.revenue.pieces.push_back(
            {Iv{Ext::neg_inf(), Ext(top_cutoff), false, true}, Affine{0, 1}});
        side.sup_revenue = top_cutoff;
        return side;
    }

    // atom-only path: piece boundaries are the distinct cutoffs plus every
    // revenue knot of a surviving class
    std::vector<Rat> bounds;
    for (const auto& info : infos) {
        bounds.push_back(info.cutoff);
        for (const auto& piece : info.revenue.pieces) {
            if (piece.dom.lo.finite()) bounds.push_back(piece.dom.lo.value);
            if (piece.dom.hi.finite()) bounds.push_back(piece.dom.hi.value);
        }
    }
    std::sort(bounds.begin(), bounds.end());
    bounds.erase(std::unique(bounds.begin(), bounds.end()), bounds.end());

    Ext left = Ext::neg_inf();
    side.sup_revenue = Rat(0);
    bool sup_set = false;
    for (const auto& b : bounds) {
        if (b > top_cutoff) break;
        // surviving classes on (left, b]: cutoff >= b
        Rat denom = 0;
        Affine num{0, 0};
        for (const auto& info : infos) {
            if (info.cutoff < b) continue;
            denom += info.volume_mass;
            const Rat probe = left.finite() ? (left.value + b) / 2 : b - 1;
            // locate the revenue piece covering the open interval
            bool found = false;
            for (const auto& piece : info.revenue.pieces) {
                if (piece.dom.contains(probe)) {
                    num.a += info.revenue_scale * piece.f.a;
                    num.b += info.revenue_scale * piece.f.b;
                    found = true;
                    break;
                }
            }
            if (!found)
                throw std::logic_error("revenue curve does not cover a surviving class interval");
        }
        if (denom > 0) {
            UnitValueCurve::Piece piece;
            piece.dom = Iv{left, Ext(b), false, true};
            piece.f = Affine{num.a / denom, num.b / denom};
            // revenue at the piece's closed right end
            const Rat end_val = piece.f(b);
            if (!sup_set || end_val > side.sup_revenue) {
                side.sup_revenue = end_val;
                sup_set = true;
            }
            side.revenue.pieces.push_back(std::move(piece));
        }
        left = Ext(b);
    }
    return side;
}

MonotoneStepCorrespondence real_supply(const PopulationSpec& spec) {
    auto side = build_supply_side(spec);
    if (spec.suppliers.empty()) return side.corr;
    if (side.s_max <= 0) throw ConditionViolation(3, "expected supply volume must be positive");
    return side.corr;
}

MonotoneStepCorrespondence real_demand(const PopulationSpec& spec) {
    auto side = build_demand_side(spec);
    if (spec.demanders.empty()) return side.corr;
    if (side.d_max <= 0) throw ConditionViolation(6, "expected demand volume must be positive");
    return side.corr;
}

std::pair<UnitValueCurve, UnitValueCurve> supply_cost_curves(const PopulationSpec& spec) {
    auto side = build_supply_side(spec);
    return {side.cost_upper, side.cost_lower};
}

UnitValueCurve demand_revenue_curve(const PopulationSpec& spec) {
    return build_demand_side(spec).revenue;
}

// -- UnitValueCurve -------------------------------------------------------

UnitValueCurve::Value UnitValueCurve::at(const Rat& x) const {
    for (const auto& piece : pieces)
        if (piece.dom.contains(x)) return {piece.f(x), false};
    return {Rat(0), true};
}

UnitValueCurve::Value UnitValueCurve::left_limit(const Rat& x) const {
    for (const auto& piece : pieces) {
        if (piece.dom.contains(x) && piece.dom.lo != Ext(x)) return {piece.f(x), false};
        if (piece.dom.hi == Ext(x)) return {piece.f(x), false};  // open top, limit from inside
    }
    return {Rat(0), true};
}

// -- conditional supply cost ----------------------------------------------

UnitValueCurve::Value conditional_supply_cost(const SupplySide& supply, const Rat& q,
                                              const Rat& rho) {
    if (q < 0 || q > 1) throw std::domain_error("residual ratio must lie in [0,1]");
    const Rat lo = supply.cum.strict_at(rho);
    const Rat hi = supply.cum.weak_at(rho);
    const Rat blend = (1 - q) * lo + q * hi;
    if (blend == 0) return {Rat(0), true};
    Rat acc = 0;
    if (lo > 0) acc += (1 - q) * lo * supply.cost_lower.at(rho).value;
    if (hi > 0) acc += q * hi * supply.cost_upper.at(rho).value;
    return {acc / blend, false};
}

UnitValueCurve::Value conditional_supply_cost(const PopulationSpec& spec, const Rat& q,
                                              const Rat& rho) {
    return conditional_supply_cost(build_supply_side(spec), q, rho);
}

// -- exports --------------------------------------------------------------

std::string correspondence_csv(const MonotoneStepCorrespondence& corr) {
    std::ostringstream out;
    out << "price,lower,upper,closed_lower,closed_upper\n";
    auto row = [&](const Rat& p, const Rat& lo, const Rat& hi, bool cl, bool cu) {
        out << rat_str(p) << ',' << rat_str(lo) << ',' << rat_str(hi) << ',' << (cl ? 1 : 0)
            << ',' << (cu ? 1 : 0) << '\n';
    };
    for (size_t i = 0; i < corr.breakpoints.size(); ++i) {
        const auto& bp = corr.breakpoints[i];
        row(bp.price, bp.lo, bp.hi, true, true);
        if (i + 1 < corr.breakpoints.size()) {
            const Rat mid = (bp.price + corr.breakpoints[i + 1].price) / 2;
            const Rat v = corr.gaps[i + 1](mid);
            row(mid, v, v, false, false);
        }
    }
    return out.str();
}

std::string unit_curve_csv(const UnitValueCurve& curve) {
    std::ostringstream out;
    out << "price,value,tag\n";
    for (const auto& piece : curve.pieces) {
        if (piece.dom.lo.finite())
            out << rat_str(piece.dom.lo.value) << ',' << rat_str(piece.f(piece.dom.lo.value))
                << ',' << (piece.dom.lo_closed ? "at" : "right_limit") << '\n';
        if (piece.dom.hi.finite())
            out << rat_str(piece.dom.hi.value) << ',' << rat_str(piece.f(piece.dom.hi.value))
                << ',' << (piece.dom.hi_closed ? "at" : "left_limit") << '\n';
    }
    return out.str();
}

}  // namespace nmkt
