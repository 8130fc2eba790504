#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "nmkt/markets.hpp"
#include "nmkt/solver.hpp"
#include "oracles.hpp"

using namespace nmkt;

namespace {

bool closure_contains(const PointSet2D& family, const Rat& p, const Rat& s) {
    for (auto prim : family.prims) {
        switch (prim.kind) {
            case Primitive::Kind::Point: break;
            case Primitive::Kind::Horizontal:
                prim.p_rng.lo_closed = prim.p_rng.hi_closed = true;
                break;
            default:
                prim.d_rng.lo_closed = prim.d_rng.hi_closed = true;
                break;
        }
        if (prim.contains(p, s)) return true;
    }
    return false;
}

/// Enumerates a breakpoint-complete (rho, q) lattice with canonical demand
/// measures, and returns every candidate that passes the verifier.
std::vector<EquilibriumCandidate> lattice_equilibria(const MarketGeometry& g) {
    std::set<Rat> rhos;
    for (const auto& n : g.supply_side.cum.nodes()) {
        rhos.insert(n.x);
        rhos.insert(n.x + Rat(1, 3));
    }
    const Affine cost = g.supply_side.unit_cost;
    for (const auto& piece : g.demand.pieces) {
        if (piece.r_dom.hi.finite()) {
            const Rat r = piece.r_dom.hi.value;
            // supply price matching the revenue, and price acquiring the
            // demand volume
            if (auto z = cost.solve(piece.revenue(r))) rhos.insert(*z);
            const Rat vol = piece.volume(r);
            const auto& nodes = g.supply_side.cum.nodes();
            for (size_t i = 0; i < nodes.size(); ++i) {
                if (nodes[i].slope_right == 0) continue;
                const Rat at = nodes[i].x + (vol - nodes[i].weak_val) / nodes[i].slope_right;
                if (at > nodes[i].x) rhos.insert(at);
            }
        }
    }
    std::vector<EquilibriumCandidate> passing;
    for (const Rat& rho : rhos) {
        if (rho < 0) continue;
        for (const Rat& q : {Rat(0), Rat(1, 2), Rat(1)}) {
            const Rat lo = g.supply_side.cum.strict_at(rho);
            const Rat hi = g.supply_side.cum.weak_at(rho);
            const Rat volume = (1 - q) * lo + q * hi;
            if (volume <= 0) continue;
            const auto best = g.demand.sup_revenue_volume_geq(volume);
            if (!best.attained || !best.value.finite()) continue;
            std::vector<DiscreteMeasure> measures;
            for (const auto& ap : g.demand.prices_at_abscissa(best.value.value)) {
                if (ap.volume < volume) continue;
                DiscreteMeasure mu;
                mu.atoms.push_back({ap.r, volume});
                measures.push_back(std::move(mu));
            }
            try {
                const auto fam = demand_measures(g.demand, best.value.value, volume);
                for (const auto& mu : fam.representatives) measures.push_back(mu);
            } catch (const std::domain_error&) {
            }
            for (const auto& mu : measures) {
                EquilibriumCandidate cand;
                cand.supply.atoms.push_back({rho, volume});
                cand.q = q;
                cand.demand = mu;
                if (verify_equilibrium(g, cand).pass) passing.push_back(cand);
            }
        }
    }
    return passing;
}

}  // namespace

TEST_CASE("profitable deviations for the worked capacity 43/100") {
    const auto g = build_geometry(trading_example_spec(Rat(43, 100)));
    // undercutting the equilibrium price leaves a profitable deviation
    CHECK(profitable_set_membership(g, Rat(1), Rat(1)));
    // zero acquired volume is never profitable
    CHECK(!profitable_set_membership(g, Rat(-1), Rat(1)));
    // the equilibrium point itself admits none
    CHECK(!profitable_set_membership(g, Rat(50, 43), Rat(1)));
    CHECK(!profitable_point_above(g, Rat(50, 43), Rat(1)));
    std::pair<Rat, Rat> wit;
    CHECK(profitable_point_above(g, Rat(1), Rat(1), &wit));
    CHECK(profitable_set_membership(g, wit.first, wit.second));
}

TEST_CASE("worked trading family: no equilibrium at capacity 4/5") {
    const auto eq = find_equilibria(trading_example_spec(Rat(4, 5)));
    CHECK(eq.kind == EquilibriumSet::Kind::Empty);
    CHECK(eq.representatives.empty());
    CHECK(!eq.null_trade_equilibrium);  // deviations exist, no-trade fails too
    const auto cls = classify(eq);
    CHECK(!cls.exists);
}

TEST_CASE("worked trading family: unique equilibrium without rationing at 43/100") {
    const auto eq = find_equilibria(trading_example_spec(Rat(43, 100)));
    REQUIRE(eq.kind == EquilibriumSet::Kind::UniquePositiveProfit);
    REQUIRE(eq.representatives.size() == 1);
    const auto& cand = eq.representatives.front();
    CHECK(cand.supply.atoms.front().first == Rat(50, 43));
    CHECK(cand.supply.atoms.front().second == Rat(2, 5));
    CHECK(cand.q == Rat(1));
    REQUIRE(cand.demand.atoms.size() == 1);
    CHECK(cand.demand.atoms.front().first == Rat(2));
    CHECK(cand.demand.atoms.front().second == Rat(2, 5));
    CHECK(!cand.rationing);
    CHECK(!cand.multiple_prices);
    const auto cls = classify(eq);
    CHECK(cls.exists);
    CHECK(cls.unique);
    CHECK(!cls.rationing_anywhere);
}

TEST_CASE("worked trading family: rationed equilibrium at 6/25") {
    // faithful execution of the graphical algorithm: competition bids the
    // supply price up to the demand value, leaving a zero-margin rationed
    // equilibrium (the worked prose confirms uniqueness and rationing)
    const auto g = build_geometry(trading_example_spec(Rat(6, 25)));
    const auto eq = find_equilibria(g);
    REQUIRE(eq.kind == EquilibriumSet::Kind::ZeroProfitFamily);
    REQUIRE(eq.representatives.size() == 1);
    const auto& cand = eq.representatives.front();
    CHECK(cand.supply.atoms.front().first == Rat(2));
    CHECK(cand.supply.atoms.front().second == Rat(6, 25));
    REQUIRE(cand.demand.atoms.size() == 1);
    CHECK(cand.demand.atoms.front().first == Rat(2));
    CHECK(cand.demand.atoms.front().second == Rat(6, 25));
    CHECK(cand.rationing);
    const auto cls = classify(eq);
    CHECK(cls.exists);
    CHECK(cls.unique);
    CHECK(cls.rationing_anywhere);

    // the lower positive-margin supply price that leaves mediators a margin
    // is NOT an equilibrium: a deviator bids the price up
    EquilibriumCandidate low;
    low.supply.atoms.push_back({Rat(5, 4), Rat(6, 25)});
    low.q = Rat(1);
    low.demand.atoms.push_back({Rat(2), Rat(6, 25)});
    const auto verdict = verify_equilibrium(g, low);
    CHECK(!verdict.pass);
    CHECK(verdict.violated_clause == "No Profitable Deviation Above");
}

TEST_CASE("verifier accepts the solved candidate and names broken clauses") {
    const auto g = build_geometry(trading_example_spec(Rat(43, 100)));
    const auto eq = find_equilibria(g);
    const auto& good = eq.representatives.front();
    CHECK(verify_equilibrium(g, good).pass);

    // demand atom moved to a dominated price
    EquilibriumCandidate moved = good;
    moved.demand.atoms.front().first = Rat(1);
    moved.demand.atoms.front().second = Rat(2, 5);
    const auto v1 = verify_equilibrium(g, moved);
    CHECK(!v1.pass);
    CHECK(v1.violated_clause == "Demand Prices as Conditional Maximizers");

    // supply price lowered: profitable deviation above
    EquilibriumCandidate lowered = good;
    lowered.supply.atoms.front().first = Rat(1);
    lowered.supply.atoms.front().second = Rat(43, 125);
    lowered.demand.atoms.front().second = Rat(43, 125);
    const auto v2 = verify_equilibrium(g, lowered);
    CHECK(!v2.pass);
    CHECK(v2.violated_clause == "No Profitable Deviation Above");

    // inconsistent supply mass
    EquilibriumCandidate wrong_mass = good;
    wrong_mass.supply.atoms.front().second = Rat(1, 7);
    CHECK(verify_equilibrium(g, wrong_mass).violated_clause == "Equal Supply Bid");

    // unsold scarcity
    EquilibriumCandidate unsold = good;
    unsold.demand.atoms.front().second = Rat(1, 5);
    CHECK(verify_equilibrium(g, unsold).violated_clause == "No Unmatched Supply");

    // rationing away from the top revenue: sandwiched clause
    const auto g8 = build_geometry(trading_example_spec(Rat(4, 5)));
    EquilibriumCandidate mid;
    mid.supply.atoms.push_back({Rat(1), Rat(16, 25)});
    mid.q = Rat(1);
    mid.demand.atoms.push_back({Rat(1), Rat(16, 25)});
    const auto v3 = verify_equilibrium(g8, mid);
    CHECK(!v3.pass);
    CHECK(v3.violated_clause == "Sandwiched Demand Prices");
}

TEST_CASE("credit family always has an equilibrium across supply scales") {
    for (int k = 1; k <= 20; ++k) {
        const Rat v = Rat(k * k, 200);  // 1/200 up to 2
        const auto g = build_geometry(credit_basic_spec(v));
        const auto eq = find_equilibria(g);
        CHECK(classify(eq).exists);
        for (const auto& cand : eq.representatives) CHECK(verify_equilibrium(g, cand).pass);
    }
}

TEST_CASE("credit two-price equilibrium at mid supply scale") {
    const auto eq = find_equilibria(credit_basic_spec(Rat(1, 2)));
    REQUIRE(eq.kind == EquilibriumSet::Kind::ZeroProfitFamily);
    bool has_two_prices = false;
    for (const auto& cand : eq.representatives)
        has_two_prices = has_two_prices || cand.multiple_prices;
    CHECK(has_two_prices);
}

TEST_CASE("truncated countable family: single demand atom at and above unit scale") {
    for (const Rat v : {Rat(1), Rat(3, 2)}) {
        const auto eq = find_equilibria(credit_infinite_spec(v, 10));
        REQUIRE(!eq.representatives.empty());
        const auto& cand = eq.representatives.front();
        REQUIRE(cand.demand.atoms.size() == 1);
        CHECK(cand.demand.atoms.front().first == Rat(9));
        CHECK(cand.demand.atoms.front().second == 1 - Rat(1, 1024));
        CHECK(classify(eq).unique);
    }
    // below unit scale: a continuum of zero-profit equilibria with wide
    // admissible supports
    const auto low = find_equilibria(credit_infinite_spec(Rat(3, 5), 10));
    CHECK(low.kind == EquilibriumSet::Kind::ZeroProfitFamily);
    const auto cls = classify(low);
    CHECK(cls.exists);
    CHECK(!cls.unique);
    CHECK(cls.max_demand_support == 10);
}

TEST_CASE("solver soundness on random populations") {
    Rng rng(9001);
    for (int i = 0; i < 30; ++i) {
        const auto spec = oracle::random_spec(rng);
        const auto g = build_geometry(spec);
        const auto eq = find_equilibria(g);
        for (const auto& cand : eq.representatives) {
            const auto verdict = verify_equilibrium(g, cand);
            if (!verdict.pass) {
                CAPTURE(i);
                CAPTURE(verdict.violated_clause);
                CHECK(verdict.pass);
            }
        }
    }
}

TEST_CASE("lattice oracle finds nothing outside the returned family") {
    Rng rng(1312);
    for (int i = 0; i < 20; ++i) {
        const auto spec = oracle::random_spec(rng);
        const auto g = build_geometry(spec);
        const auto eq = find_equilibria(g);
        const auto found = lattice_equilibria(g);
        for (const auto& cand : found) {
            const Rat rho = cand.supply.atoms.front().first;
            const Rat volume = cand.supply.atoms.front().second;
            const Rat cost = conditional_supply_cost(g.supply_side, cand.q, rho).value;
            bool inside = false;
            switch (eq.kind) {
                case EquilibriumSet::Kind::Empty: break;
                case EquilibriumSet::Kind::UniquePositiveProfit:
                    inside = eq.point_infos.front().volume == volume &&
                             cost == g.supply_side.unit_cost(
                                         eq.representatives.front().supply.atoms.front().first);
                    break;
                case EquilibriumSet::Kind::ZeroProfitFamily:
                    inside = closure_contains(eq.family, cost, volume);
                    break;
            }
            if (!inside) {
                CAPTURE(i);
                CAPTURE(rat_str(rho));
                CAPTURE(rat_str(volume));
                CHECK(inside);
            }
        }
        // and the solver's own answer shows up in the lattice scan
        if (eq.kind == EquilibriumSet::Kind::UniquePositiveProfit) CHECK(!found.empty());
    }
}

TEST_CASE("positive-profit equilibria are unique whenever returned") {
    Rng rng(777);
    for (int i = 0; i < 30; ++i) {
        const auto eq = find_equilibria(oracle::random_spec(rng));
        if (eq.kind != EquilibriumSet::Kind::UniquePositiveProfit) continue;
        std::set<Rat> supply_prices;
        for (const auto& cand : eq.representatives)
            supply_prices.insert(cand.supply.atoms.front().first);
        CHECK(supply_prices.size() == 1);
        CHECK(eq.point_infos.size() == 1);
    }
}

TEST_CASE("shrinking capacity never raises the traded volume") {
    Rat last_volume(-1);
    bool have_last = false;
    for (int k = 8; k >= 1; --k) {
        const Rat t = Rat(k, 8);
        const auto eq = find_equilibria(trading_example_spec(Rat(43, 100) * t));
        if (eq.representatives.empty()) continue;
        const Rat vol = eq.representatives.front().supply.atoms.front().second;
        if (have_last) CHECK(vol <= last_volume);
        last_volume = vol;
        have_last = true;
    }
    CHECK(have_last);
}

TEST_CASE("monopoly optimistic resale values") {
    // corner the market cheaply at overcapacity: the resale continuation is
    // profitable, which is exactly why no equilibrium survives there
    const auto g8 = build_geometry(trading_example_spec(Rat(4, 5)));
    const auto dev = monopoly_optimistic_resale_value(g8, Rat(1), Rat(1), Rat(2));
    CHECK(!dev.empty_set);
    CHECK(dev.value > Rat(0));

    // cost above every achievable revenue: empty crossing set, non-improving
    const auto flagged = monopoly_optimistic_resale_value(g8, Rat(3), Rat(1), Rat(2));
    CHECK(flagged.empty_set);
    CHECK(flagged.value == Rat(0));

    // a quote below every profitable resale price keeps the value weakly
    // negative at the worked equilibrium
    const auto g43 = build_geometry(trading_example_spec(Rat(43, 100)));
    const auto quiet = monopoly_optimistic_resale_value(g43, Rat(50, 43), Rat(1), Rat(1, 2));
    CHECK(quiet.value <= Rat(0));
}

TEST_CASE("equilibria json carries the wire format") {
    const auto eq = find_equilibria(trading_example_spec(Rat(43, 100)));
    const auto json = equilibria_json(eq);
    CHECK(json.find("\"kind\":\"unique_positive_profit\"") != std::string::npos);
    CHECK(json.find("\"price\":\"50/43\"") != std::string::npos);
    CHECK(json.find("\"atoms\":[[\"2\",\"2/5\"]]") != std::string::npos);
    CHECK(json.find("\"rationing\":false") != std::string::npos);
    CHECK(json.find("\"family\":[]") != std::string::npos);
}

TEST_CASE("no-trade populations report the null equilibrium") {
    // supply costs sit above every demander value: nothing trades, and the
    // all-out profile is the only equilibrium
    PopulationSpec spec;
    spec.kind = trading_kind();
    spec.suppliers.push_back({WeightSpec::atom(Rat(1)), Rat(3), Rat(1), Rat(1)});
    spec.demanders.push_back({WeightSpec::atom(Rat(1)), Eta0(Rat(1)), Rat(1)});
    const auto g = build_geometry(spec);
    const auto eq = find_equilibria(g);
    CHECK(eq.kind == EquilibriumSet::Kind::Empty);
    CHECK(eq.null_trade_equilibrium);

    EquilibriumCandidate null_cand;
    CHECK(verify_equilibrium(g, null_cand).pass);
}
