#include "nmkt/curves.hpp"

namespace nmkt {

namespace {

ConditionVerdict pass(int id, const std::string& name, std::string detail = "") {
    return {id, name, true, std::move(detail)};
}

ConditionVerdict fail(int id, const std::string& name, std::string detail) {
    return {id, name, false, std::move(detail)};
}

}  // namespace

ConditionReport validate_well_behaved(const PopulationSpec& spec) {
    ConditionReport report;
    spec.validate_structure();

    // conditions 1/2: unique supplier cutoff and stationary volume per class
    {
        bool ok = true;
        std::string detail;
        for (size_t i = 0; i < spec.suppliers.size() && ok; ++i) {
            const auto& cls = spec.suppliers[i];
            try {
                if (cls.weight.type == WeightSpec::Type::Atom) {
                    const auto s = derive_supplier_strategy(cls, spec.kind);
                    if (s.volume <= 0) throw ConditionViolation(2, "nonpositive optimal volume");
                } else {
                    for (const Rat& probe :
                         {cls.weight.lo, (cls.weight.lo + cls.weight.hi) / 2, cls.weight.hi}) {
                        const auto s = spec.kind.supplier_strategy(cls, probe);
                        if (s.cutoff != probe)
                            throw ConditionViolation(1, "segment cutoff must track the coordinate");
                        if (s.volume <= 0)
                            throw ConditionViolation(2, "nonpositive optimal volume");
                    }
                }
            } catch (const std::exception& e) {
                ok = false;
                detail = "supplier class " + std::to_string(i) + ": " + e.what();
            }
        }
        report.verdicts.push_back(ok ? pass(1, "Supplier Individual Cutoff")
                                     : fail(1, "Supplier Individual Cutoff", detail));
        report.verdicts.push_back(ok ? pass(2, "Supplier Stationary Optimal Volume")
                                     : fail(2, "Supplier Stationary Optimal Volume", detail));
    }

    // condition 3: finite positive expected supply
    std::optional<SupplySide> supply;
    try {
        supply = build_supply_side(spec);
    } catch (const std::exception&) {
    }
    if (supply && supply->s_max > 0)
        report.verdicts.push_back(pass(3, "Finite Supply", "S_max = " + rat_str(supply->s_max)));
    else
        report.verdicts.push_back(fail(3, "Finite Supply", "expected supply volume is zero"));

    // conditions 4/5: demander cutoff and volume
    {
        bool ok = true;
        std::string detail;
        for (size_t i = 0; i < spec.demanders.size() && ok; ++i) {
            const auto& cls = spec.demanders[i];
            try {
                if (cls.weight.type == WeightSpec::Type::Atom) {
                    const auto s = derive_demander_strategy(spec, cls, spec.kind);
                    if (s.volume <= 0) throw ConditionViolation(5, "nonpositive optimal volume");
                } else {
                    for (const Rat& probe :
                         {cls.weight.lo, (cls.weight.lo + cls.weight.hi) / 2, cls.weight.hi}) {
                        const auto s = spec.kind.demander_strategy(spec, cls, probe);
                        if (s.cutoff != probe)
                            throw ConditionViolation(4, "segment cutoff must track the coordinate");
                        if (s.volume <= 0)
                            throw ConditionViolation(5, "nonpositive optimal volume");
                    }
                }
            } catch (const std::exception& e) {
                ok = false;
                detail = "demander class " + std::to_string(i) + ": " + e.what();
            }
        }
        report.verdicts.push_back(ok ? pass(4, "Demander Individual Cutoff")
                                     : fail(4, "Demander Individual Cutoff", detail));
        report.verdicts.push_back(ok ? pass(5, "Demander Stationary Optimal Volume")
                                     : fail(5, "Demander Stationary Optimal Volume", detail));
    }

    // condition 6: finite positive expected demand
    std::optional<DemandSide> demand;
    try {
        demand = build_demand_side(spec);
    } catch (const std::exception&) {
    }
    if (demand && demand->d_max > 0)
        report.verdicts.push_back(pass(6, "Finite Demand", "D_max = " + rat_str(demand->d_max)));
    else
        report.verdicts.push_back(fail(6, "Finite Demand", "expected demand volume is zero"));

    // condition 7/8: mediator-side unit values total on their domains
    report.verdicts.push_back(
        spec.kind.supplier_unit_payoff
            ? pass(7, "Supplier Off-Market Irrelevance")
            : fail(7, "Supplier Off-Market Irrelevance", "kind lacks a unit payoff"));
    {
        bool ok = static_cast<bool>(spec.kind.demander_unit_revenue);
        std::string detail = ok ? "" : "kind lacks a unit revenue";
        if (ok && demand) {
            for (size_t i = 0; i < spec.demanders.size() && ok; ++i) {
                const auto& cls = spec.demanders[i];
                if (cls.weight.type != WeightSpec::Type::Atom) continue;
                try {
                    const auto strat = derive_demander_strategy(spec, cls, spec.kind);
                    const auto rev = spec.kind.demander_unit_revenue(spec, cls);
                    rev(strat.cutoff);
                    rev(strat.cutoff - 1);
                } catch (const std::exception& e) {
                    ok = false;
                    detail = "demander class " + std::to_string(i) + ": " + e.what();
                }
            }
        }
        report.verdicts.push_back(ok ? pass(8, "Demander Off-Market Irrelevance")
                                     : fail(8, "Demander Off-Market Irrelevance", detail));
    }

    // condition 9: cost limits finite (affine costs: structural)
    report.verdicts.push_back(supply ? pass(9, "Finite Supply Cost")
                                     : fail(9, "Finite Supply Cost", "supply side unbuildable"));

    // condition 10: no free supply
    {
        bool ok = true;
        std::string detail;
        if (supply && !supply->cum.nodes().empty() && supply->s_max > 0) {
            const auto& first = supply->cum.nodes().front();
            const Rat cost_at = supply->unit_cost(first.x);
            if (first.jump > 0 && cost_at <= 0) {
                ok = false;
                detail = "positive volume at nonpositive unit cost " + rat_str(cost_at);
            } else if (cost_at < 0) {
                ok = false;
                detail = "unit cost negative just above the lowest cutoff";
            }
        }
        report.verdicts.push_back(ok ? pass(10, "No Free Supply") : fail(10, "No Free Supply", detail));
    }

    // condition 11: supply cost strictly increasing on constant-volume stretches
    {
        bool ok = !supply || supply->unit_cost.b > 0;
        report.verdicts.push_back(ok ? pass(11, "Supply Monotone Trend")
                                     : fail(11, "Supply Monotone Trend",
                                            "unit cost is not strictly increasing"));
    }

    // condition 13: finite demand revenue
    report.verdicts.push_back(demand ? pass(13, "Finite Demand Revenue")
                                     : fail(13, "Finite Demand Revenue", "demand side unbuildable"));

    // condition 14: revenue strictly increasing on constant-volume stretches
    {
        bool ok = true;
        std::string detail;
        if (demand) {
            const auto& nodes = demand->cum.nodes();
            for (const auto& piece : demand->revenue.pieces) {
                // constant-volume iff no density inside the piece
                bool constant_volume = true;
                for (const auto& n : nodes) {
                    if (piece.dom.contains(n.x) && piece.dom.lo != Ext(n.x) && n.jump > 0)
                        constant_volume = false;
                    const Rat probe = piece.dom.hi.finite() ? piece.dom.hi.value : n.x + 1;
                    if (n.slope_right != 0 && piece.dom.contains(probe) && n.x < probe)
                        constant_volume = false;
                }
                if (constant_volume && piece.f.b <= 0) {
                    ok = false;
                    detail = "revenue not strictly increasing near " +
                             (piece.dom.hi.finite() ? rat_str(piece.dom.hi.value)
                                                    : std::string("the tail"));
                    break;
                }
            }
            // continuity across internal knots within a constant-volume stretch
            for (size_t i = 0; ok && i + 1 < demand->revenue.pieces.size(); ++i) {
                const auto& cur = demand->revenue.pieces[i];
                const auto& next = demand->revenue.pieces[i + 1];
                if (!cur.dom.hi.finite() || next.dom.lo != cur.dom.hi) continue;
                const Rat knot = cur.dom.hi.value;
                bool is_cutoff = false;
                for (const auto& n : nodes) is_cutoff = is_cutoff || n.x == knot;
                if (is_cutoff) continue;  // survivor set changes: jump allowed downward
                if (next.f(knot) < cur.f(knot)) {
                    ok = false;
                    detail = "revenue drops inside a constant-volume stretch at " + rat_str(knot);
                }
            }
        }
        report.verdicts.push_back(ok ? pass(14, "Demand Monotone Trend")
                                     : fail(14, "Demand Monotone Trend", detail));
    }

    // condition 15: left-continuity of the revenue at breakpoints
    {
        bool ok = true;
        std::string detail;
        if (demand) {
            for (const auto& piece : demand->revenue.pieces) {
                if (!piece.dom.hi.finite()) continue;
                const Rat b = piece.dom.hi.value;
                const auto val = demand->revenue.at(b);
                const auto lim = demand->revenue.left_limit(b);
                if (!val.vacuous && (lim.vacuous || lim.value != val.value)) {
                    ok = false;
                    detail = "revenue not left-continuous at " + rat_str(b);
                    break;
                }
            }
        }
        report.verdicts.push_back(ok ? pass(15, "Demand Left-Continuity")
                                     : fail(15, "Demand Left-Continuity", detail));
    }
    return report;
}

}  // namespace nmkt
