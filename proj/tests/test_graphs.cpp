#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nmkt/graphs.hpp"
#include "nmkt/markets.hpp"
#include "oracles.hpp"

using namespace nmkt;

namespace {

const Rat kCap(43, 100);

DemandGraph worked_demand() { return build_demand_graph(trading_example_spec(kCap)); }
SupplyGraph worked_supply(const Rat& cap) {
    return build_supply_graph(trading_example_spec(cap));
}

}  // namespace

TEST_CASE("worked demand graph: two horizontal stretches") {
    const auto dg = worked_demand();
    // heights 1 (prices up to 1) and 2/5 (prices in (1,2])
    CHECK(dg.graph.contains(Rat(1, 2), Rat(1)));
    CHECK(dg.graph.contains(Rat(1), Rat(1)));
    CHECK(dg.graph.contains(Rat(2), Rat(2, 5)));
    CHECK(dg.graph.contains(Rat(3, 2), Rat(2, 5)));
    CHECK(!dg.graph.contains(Rat(1), Rat(2, 5)));   // left-open at 1
    CHECK(!dg.graph.contains(Rat(3), Rat(1)));      // beyond any revenue
    CHECK(!dg.graph.contains(Rat(2), Rat(1, 2)));   // off-graph height
    CHECK(dg.d_max == Rat(1));
    CHECK(dg.sup_revenue.value == Ext(Rat(2)));
    CHECK(dg.sup_revenue.attained);
}

TEST_CASE("worked augmented demand graph") {
    const auto dg = worked_demand();
    // A_D = [0,1] x (0,1]  union  [0,2] x (0, 2/5]
    CHECK(dg.in_augmented(Rat(1), Rat(1)));
    CHECK(dg.in_augmented(Rat(0), Rat(1)));
    CHECK(dg.in_augmented(Rat(2), Rat(2, 5)));
    CHECK(dg.in_augmented(Rat(3, 2), Rat(1, 5)));
    CHECK(!dg.in_augmented(Rat(11, 10), Rat(1)));
    CHECK(!dg.in_augmented(Rat(2), Rat(1, 2)));
    CHECK(!dg.in_augmented(Rat(1), Rat(0)));
    CHECK(!dg.in_augmented(Rat(-1, 10), Rat(1, 2)));
    CHECK(!dg.in_augmented(Rat(1), Rat(11, 10)));
}

TEST_CASE("worked vertical borders") {
    const auto dg = worked_demand();
    // V0 = {1} x (2/5, 1]  union  {2} x (0, 2/5]
    CHECK(dg.border0.contains(Rat(1), Rat(1)));
    CHECK(dg.border0.contains(Rat(1), Rat(1, 2)));
    CHECK(!dg.border0.contains(Rat(1), Rat(2, 5)));
    CHECK(dg.border0.contains(Rat(2), Rat(2, 5)));
    CHECK(dg.border0.contains(Rat(2), Rat(1, 5)));
    CHECK(!dg.border0.contains(Rat(3, 2), Rat(2, 5)));

    // V1 = {2} x (0, 2/5]
    CHECK(dg.border1.contains(Rat(2), Rat(2, 5)));
    CHECK(dg.border1.contains(Rat(2), Rat(1, 5)));
    CHECK(!dg.border1.contains(Rat(1), Rat(1)));
    CHECK(dg.border1_top == Rat(2, 5));

    // V2 = {1} x (2/5, 1)
    CHECK(dg.border2.contains(Rat(1), Rat(1, 2)));
    CHECK(!dg.border2.contains(Rat(1), Rat(1)));      // column top removed
    CHECK(!dg.border2.contains(Rat(1), Rat(2, 5)));   // open bottom
    CHECK(!dg.border2.contains(Rat(2), Rat(1, 5)));   // max-revenue band excluded

    // V3 = {(1,1)} union {2} x (0, 2/5] union {(0,0)}
    CHECK(dg.border3.contains(Rat(1), Rat(1)));
    CHECK(dg.border3.contains(Rat(2), Rat(2, 5)));
    CHECK(dg.border3.contains(Rat(2), Rat(1, 10)));
    CHECK(dg.border3.contains(Rat(0), Rat(0)));
    CHECK(!dg.border3.contains(Rat(1), Rat(1, 2)));
}

TEST_CASE("border containments hold by construction") {
    Rng rng(99);
    for (int i = 0; i < 20; ++i) {
        const auto spec = oracle::random_spec(rng);
        const auto dg = build_demand_graph(spec);
        CHECK(dg.border3.contains(Rat(0), Rat(0)));
        for (const auto& prim : dg.border1.prims) {
            // probe one point of each V1 primitive inside V0
            Rat p, d;
            switch (prim.kind) {
                case Primitive::Kind::Point: p = prim.p0; d = prim.d0; break;
                case Primitive::Kind::Vertical:
                    p = prim.p0;
                    d = prim.d_rng.hi.rat_or_throw();
                    if (!prim.d_rng.hi_closed) continue;
                    break;
                default: continue;
            }
            CHECK(dg.border0.contains(p, d));
            CHECK(!dg.border2.contains(p, d));
        }
    }
}

TEST_CASE("demand price finder inverts the plot") {
    const auto dg = worked_demand();
    CHECK(*dg.price_finder(Rat(2), Rat(2, 5)) == Rat(2));
    CHECK(*dg.price_finder(Rat(1, 2), Rat(1)) == Rat(1, 2));
    CHECK(!dg.price_finder(Rat(3), Rat(1)).has_value());
    // lexicographic monotonicity across stored points
    const Rat r_low = *dg.price_finder(Rat(1), Rat(1));
    const Rat r_high = *dg.price_finder(Rat(3, 2), Rat(2, 5));
    CHECK(r_high > r_low);
}

TEST_CASE("worked supply graph, price and ratio finders") {
    const auto sg = worked_supply(kCap);
    // ramp: (rho, 43/125 rho) for rho in (0, 5/4], then a plateau at 43/100
    CHECK(sg.graph.contains(Rat(1), Rat(43, 125)));
    CHECK(sg.graph.contains(Rat(50, 43), Rat(2, 5)));
    CHECK(sg.graph.contains(Rat(5, 4), Rat(43, 100)));
    CHECK(sg.graph.contains(Rat(2), Rat(43, 100)));  // plateau beyond the ramp
    CHECK(!sg.graph.contains(Rat(2), Rat(2, 5)));
    CHECK(sg.s_max == kCap);

    CHECK(*sg.price_finder(Rat(50, 43), Rat(2, 5)) == Rat(50, 43));
    CHECK(*sg.ratio_finder(Rat(50, 43), Rat(2, 5)) == Rat(1));
    CHECK(*sg.price_finder(Rat(2), Rat(43, 100)) == Rat(2));
    CHECK(!sg.price_finder(Rat(1), Rat(1)).has_value());
}

TEST_CASE("degenerate supplier atom produces a blended jump segment") {
    PopulationSpec spec;
    spec.kind = trading_kind();
    spec.suppliers.push_back({WeightSpec::atom(Rat(1)), Rat(1), Rat(2), Rat(2)});
    spec.demanders.push_back({WeightSpec::atom(Rat(1)), Eta0(Rat(3)), Rat(1)});
    const auto sg = build_supply_graph(spec);
    CHECK(sg.graph.contains(Rat(1), Rat(1)));
    CHECK(sg.graph.contains(Rat(1), Rat(2)));
    CHECK(sg.graph.contains(Rat(1), Rat(1, 10)));
    CHECK(!sg.graph.contains(Rat(1), Rat(0)));
    CHECK(*sg.ratio_finder(Rat(1), Rat(1)) == Rat(1, 2));
    CHECK(*sg.ratio_finder(Rat(1), Rat(2)) == Rat(1));
    CHECK(*sg.price_finder(Rat(1), Rat(1)) == Rat(1));
}

TEST_CASE("supply round trips on random populations") {
    Rng rng(314);
    for (int i = 0; i < 10; ++i) {
        const auto spec = oracle::random_spec(rng);
        const auto side = build_supply_side(spec);
        const auto sg = build_supply_graph(side);
        Rng pr = rng.child(i);
        int checked = 0;
        for (int k = 0; k < 200 && checked < 100; ++k) {
            // sample a point on the graph via a random price and ratio
            const Rat rho = pr.uniform_rat(Rat(0), Rat(12));
            const Rat q = pr.uniform_rat(Rat(0), Rat(1));
            const Rat lo = side.cum.strict_at(rho), hi = side.cum.weak_at(rho);
            const Rat s = (1 - q) * lo + q * hi;
            if (s <= 0) continue;
            const auto cost = conditional_supply_cost(side, q, rho);
            REQUIRE(!cost.vacuous);
            const auto rho_back = sg.price_finder(cost.value, s);
            REQUIRE(rho_back.has_value());
            const auto q_back = sg.ratio_finder(cost.value, s);
            REQUIRE(q_back.has_value());
            // the finder reproduces the generating pair canonically: prices
            // agree whenever the volume pins them, and re-plotting the found
            // pair lands on the same point
            const Rat lo2 = side.cum.strict_at(*rho_back), hi2 = side.cum.weak_at(*rho_back);
            const Rat s2 = (1 - *q_back) * lo2 + *q_back * hi2;
            CHECK(s2 == s);
            CHECK(conditional_supply_cost(side, *q_back, *rho_back).value == cost.value);
            ++checked;
        }
    }
}

TEST_CASE("demand measures at the worked points") {
    const auto dg = worked_demand();

    const auto origin = demand_measures(dg, Rat(0), Rat(0));
    REQUIRE(origin.representatives.size() == 1);
    CHECK(origin.representatives.front().atoms.empty());

    const auto full = demand_measures(dg, Rat(2), Rat(2, 5));
    REQUIRE(full.representatives.size() == 1);
    const auto& mu = full.representatives.front();
    REQUIRE(mu.atoms.size() == 1);
    CHECK(mu.atoms.front().first == Rat(2));
    CHECK(mu.atoms.front().second == Rat(2, 5));
    CHECK(full.ratio_sum(mu) == Rat(1));
    CHECK(full.contains(mu));
    CHECK(full.unique());

    // rationed point inside the max-revenue band (the v = 6/25 story)
    const auto rationed = demand_measures(dg, Rat(2), Rat(6, 25));
    REQUIRE(rationed.representatives.size() == 1);
    const auto& nu = rationed.representatives.front();
    CHECK(nu.atoms.front().first == Rat(2));
    CHECK(nu.atoms.front().second == Rat(6, 25));
    CHECK(rationed.ratio_sum(nu) == Rat(3, 5));
    CHECK(rationed.at_max_revenue_band);
    CHECK(rationed.contains(nu));

    CHECK_THROWS_AS(demand_measures(dg, Rat(1), Rat(1, 2)), std::domain_error);

    // tampering with the measure breaks membership
    DiscreteMeasure off = mu;
    off.atoms.front().second = Rat(1, 2);
    CHECK(!full.contains(off));
    DiscreteMeasure wrong_price = mu;
    wrong_price.atoms.front().first = Rat(1);
    CHECK(!full.contains(wrong_price));
}

TEST_CASE("two-price measures arise in the credit example") {
    const auto dg = build_demand_graph(credit_basic_spec(Rat(1, 2)));
    // the cliff at revenue 273/40 spans volumes (1/20, 1]; querying inside
    // forces the two-atom mix
    const Rat cliff = Rat(273, 40);
    const auto fam = demand_measures(dg, cliff, Rat(1, 2));
    REQUIRE(fam.representatives.size() == 1);
    const auto& mu = fam.representatives.front();
    REQUIRE(mu.atoms.size() == 2);
    CHECK(fam.ratio_sum(mu) == Rat(1));
    CHECK(mu.total() == Rat(1, 2));
    // masses follow the constructive mix of the adjacent volumes 1 and 1/20
    CHECK(mu.atoms.front().first == Rat(33, 2));
    CHECK(mu.atoms.front().second == Rat(1) * (Rat(1, 2) - Rat(1, 20)) / (1 - Rat(1, 20)));
    // the ratio pin makes the two-atom mix the only member
    CHECK(fam.unique());
    CHECK(fam.max_support_size() == 2);
}

TEST_CASE("supply measure is a point mass at the found price") {
    const auto sg = worked_supply(kCap);
    const auto mu = supply_measure(sg, Rat(50, 43), Rat(2, 5));
    REQUIRE(mu.atoms.size() == 1);
    CHECK(mu.atoms.front().first == Rat(50, 43));
    CHECK(mu.atoms.front().second == Rat(2, 5));

    CHECK(supply_measure(sg, Rat(0), Rat(0)).atoms.empty());
    CHECK_THROWS_AS(supply_measure(sg, Rat(1), Rat(1)), std::domain_error);

    const auto rationed = supply_measure(worked_supply(Rat(6, 25)), Rat(5, 4), Rat(6, 25));
    CHECK(rationed.atoms.front().first == Rat(5, 4));
    CHECK(rationed.atoms.front().second == Rat(6, 25));
}

TEST_CASE("truncated countable family: borders and the documented edge") {
    const int K = 8;
    const auto spec = credit_infinite_spec(Rat(1), K);
    const auto dg = build_demand_graph(spec);
    CHECK(dg.truncated);
    // cutoffs are 5 * 2^i - 1
    const Rat rev9 = dg.revenue_at(Rat(9)).value;
    CHECK(rev9 == Rat(1285, 384));
    CHECK(*dg.price_finder(rev9, dg.volume_at(Rat(9))) == Rat(9));
    // under the displayed formulas the highest revenue sits at the last
    // truncated type; truncation also leaves a staircase of sharp borders
    // that the untruncated family would not have (documented alongside the
    // other discrepancies with the prose claims)
    CHECK(dg.sup_revenue.value == Ext(Rat(5)));
    CHECK(!dg.border2.empty());
    // the first-type band point carries a unique single-atom measure
    const Rat v1 = dg.volume_at(Rat(9));
    const Rat p1 = dg.revenue_at(Rat(9)).value;
    const auto fam = demand_measures(dg, p1, v1);
    REQUIRE(fam.representatives.size() == 1);
    CHECK(fam.representatives.front().atoms.size() == 1);
    CHECK(fam.representatives.front().atoms.front().first == Rat(9));
    CHECK(fam.unique());
}

TEST_CASE("symbolic membership agrees with the dense-grid oracle") {
    Rng rng(404);
    std::vector<PopulationSpec> specs;
    specs.push_back(trading_example_spec(kCap));
    specs.push_back(credit_basic_spec(Rat(1)));
    for (int i = 0; i < 4; ++i) specs.push_back(oracle::random_spec(rng));

    for (const auto& spec : specs) {
        const auto g = oracle::make_graph_oracle(spec, 25);
        const auto dg = build_demand_graph(spec);
        const auto sg = build_supply_graph(spec);
        const Rat d_max = dg.d_max;
        REQUIRE(d_max > 0);
        const Rat p_hi = g.sup_revenue() + 1;
        int samples = 0;
        Rng pr = rng.child(1000 + samples);
        for (int k = 0; k < 150; ++k) {
            // half the probes on a lattice, half snapped to interesting rows
            Rat p = pr.uniform_rat(Rat(0), p_hi);
            Rat d = pr.uniform_rat(Rat(0), d_max + Rat(1, 10));
            if (k % 2 == 0) {
                p = Rat(pr.below(40), 20) * p_hi / 2;
                d = Rat(pr.below(40), 40) * d_max + d_max / 40;
            }
            CHECK(dg.in_augmented(p, d) == g.in_augmented_demand(p, d));
            CHECK(dg.graph.contains(p, d) == g.in_demand_graph(p, d));
            CHECK(dg.border0.contains(p, d) == g.in_border0(p, d));
            CHECK(dg.border1.contains(p, d) == g.in_border1(p, d));
            CHECK(dg.border2.contains(p, d) == g.in_border2(p, d));
            CHECK(dg.border3.contains(p, d) == g.in_border3(p, d));
            CHECK(sg.graph.contains(p, d) == g.in_supply_graph(p, d));
            CHECK(sg.in_augmented(p, d) == g.in_augmented_supply(p, d));
            ++samples;
        }
    }
}

TEST_CASE("point set exports") {
    const auto dg = worked_demand();
    const auto json = point_set_json(dg.border3);
    CHECK(json.find("\"type\":\"vertical\"") != std::string::npos);
    CHECK(json.find("\"type\":\"point\"") != std::string::npos);
    const auto csv = point_set_csv(dg.graph);
    CHECK(csv.find("kind,p_lo,p_hi,d_lo,d_hi") == 0);
    CHECK(csv.find("horizontal") != std::string::npos);
}
