#include "nmkt/games.hpp"

#include <algorithm>

namespace nmkt {

namespace {

/// Sequential clearing of price groups (ascending): each group sells into
/// the remaining demand at its price, rationed uniformly, which scales every
/// higher-value stratum by the same surviving fraction.
struct PriceGroup {
    Rat price;
    Rat mass;     // retail mass quoting this price
    Rat sold = 0; // total volume the group sells
};

void clear_groups(std::vector<PriceGroup>& groups, const MonotoneStepCorrespondence& demand,
                  const Rat& endowment) {
    std::sort(groups.begin(), groups.end(),
              [](const PriceGroup& a, const PriceGroup& b) { return a.price < b.price; });
    // merge equal prices, remembering the split for proportional shares
    Rat fraction = 1;  // surviving fraction of every demand stratum
    size_t i = 0;
    while (i < groups.size()) {
        size_t j = i;
        Rat mass = 0;
        while (j < groups.size() && groups[j].price == groups[i].price) mass += groups[j++].mass;
        const Rat d = demand.max_at(groups[i].price);
        const Rat avail = d * fraction;
        const Rat offered = mass * endowment;
        const Rat sold = std::min(offered, avail);
        for (size_t k = i; k < j; ++k)
            groups[k].sold = mass == 0 ? Rat(0) : sold * groups[k].mass / mass;
        if (d > 0) fraction -= sold / d;
        i = j;
    }
}

/// Per-member utility of a group that quotes `price` against the profile.
Rat group_utility(std::vector<PriceGroup> groups, const MonotoneStepCorrespondence& demand,
                  const Rat& endowment, const Rat& price) {
    clear_groups(groups, demand, endowment);
    for (const auto& g : groups)
        if (g.price == price && g.mass > 0) return g.price * g.sold / g.mass;
    return 0;
}

/// Utility of a measure-zero entrant quoting `price` when the whole
/// population quotes sym_price: it sells its differential endowment fully
/// whenever residual demand mass at its price is positive.
Rat entrant_utility(const MonotoneStepCorrespondence& demand, const Rat& endowment,
                    const Rat& sym_price, const Rat& price) {
    const Rat d_sym = demand.max_at(sym_price);
    const Rat d_here = demand.max_at(price);
    if (price <= sym_price) return d_here > 0 ? price * endowment : Rat(0);
    if (d_sym == 0) return d_here > 0 ? price * endowment : Rat(0);
    const Rat sold_fraction = std::min(endowment, d_sym) / d_sym;
    const Rat residual = d_here * (1 - sold_fraction);
    return residual > 0 ? price * endowment : Rat(0);
}

const std::vector<Rat>& mass_fractions() {
    static const std::vector<Rat> fr = [] {
        std::vector<Rat> out;
        for (int k = 1; k <= 16; ++k) out.push_back(Rat(k, 16));
        return out;
    }();
    return fr;
}

}  // namespace

Rat monopoly_price(const SymmetricPricingGame& game) {
    const Rat* best = nullptr;
    Rat best_profit = 0;
    for (const auto& p : game.price_grid) {
        const Rat profit = p * std::min(game.endowment, game.demand.max_at(p));
        if (!best || profit > best_profit) {
            best = &p;
            best_profit = profit;
        }
    }
    if (!best) throw std::invalid_argument("empty price grid");
    return *best;
}

ProfileSets classify_symmetric_profiles(const SymmetricPricingGame& game) {
    if (game.price_grid.empty() || game.endowment <= 0)
        throw std::invalid_argument("pricing game needs a grid and positive endowment");
    // the grid must offer the profit-maximizing deviation
    const Rat p_mono = monopoly_price(game);
    {
        // sanity: the monopoly price must weakly dominate demand breakpoints
        bool found = false;
        for (const auto& p : game.price_grid) found = found || p == p_mono;
        if (!found) throw std::invalid_argument("grid misses the monopoly price");
    }

    ProfileSets sets;
    const auto& D = game.demand;
    const Rat Q = game.endowment;

    for (const auto& p : game.price_grid) {
        const Rat u0 = p * std::min(Q, D.max_at(p));

        // Nash: no measure-zero entrant deviation profits
        bool nash = true;
        for (const auto& p2 : game.price_grid) {
            if (p2 == p) continue;
            if (entrant_utility(D, Q, p, p2) > u0) {
                nash = false;
                break;
            }
        }
        if (nash) sets.nash.push_back(p);

        // profitable symmetric collusions: block of mass g quoting p2
        struct Collusion {
            Rat g, p2, utility;
        };
        std::vector<Collusion> profitable;
        for (const auto& g : mass_fractions()) {
            for (const auto& p2 : game.price_grid) {
                if (p2 == p) continue;
                std::vector<PriceGroup> groups{{p, 1 - g, 0}, {p2, g, 0}};
                const Rat u = group_utility(groups, D, Q, p2);
                if (u > u0) profitable.push_back({g, p2, u});
            }
        }
        // single-agent deviations are collusions by singleton blocks
        bool singleton_beats = !nash;

        if (profitable.empty() && !singleton_beats) sets.collusion_free.push_back(p);

        // betrayal-free-collusion-free: every profitable collusion must be
        // undermined by a sub-block betrayal that the rest would regret
        bool bfcf = !singleton_beats;
        for (const auto& col : profitable) {
            if (!bfcf) break;
            bool betrayed = false;
            for (const auto& fr : mass_fractions()) {
                if (fr == 1) continue;  // the complement must stay nonempty
                const Rat g_b = col.g * fr;
                for (const auto& p3 : game.price_grid) {
                    if (p3 == col.p2) continue;
                    std::vector<PriceGroup> groups{
                        {p, 1 - col.g, 0}, {col.p2, col.g - g_b, 0}, {p3, g_b, 0}};
                    const Rat u_betrayer = group_utility(groups, D, Q, p3);
                    const Rat u_rest = group_utility(groups, D, Q, col.p2);
                    if (u_betrayer > col.utility && u0 >= u_rest) {
                        betrayed = true;
                        break;
                    }
                }
                if (betrayed) break;
            }
            if (!betrayed) bfcf = false;
        }
        if (bfcf) sets.bfcf.push_back(p);
    }
    return sets;
}

// -- common value auction ---------------------------------------------------

Rat ValueFunction::at(const Rat& x) const {
    for (const auto& piece : pieces)
        if (piece.dom.contains(x)) return piece.f(x);
    throw std::domain_error("value function undefined at " + rat_str(x));
}

PseudoEquilibrium common_value_pseudo_equilibrium(const ValueFunction& v) {
    if (v.pieces.empty()) throw std::domain_error("empty value function");
    // premise: strictly negative tail toward -inf
    {
        const auto& first = v.pieces.front();
        if (first.dom.lo.finite())
            throw std::domain_error("value function must cover the whole line");
        const bool negative_tail = first.f.b > 0 || (first.f.b == 0 && first.f.a < 0);
        if (!negative_tail)
            throw std::domain_error("no threshold below which the value stays negative");
    }

    // scan for the first point where positivity begins
    bool positive_exists = false;
    std::optional<Rat> first_violation;
    for (const auto& piece : v.pieces) {
        // earliest x in this piece with f(x) > 0
        std::optional<Rat> begin;
        if (piece.f.b == 0) {
            if (piece.f.a > 0 && !piece.dom.is_empty())
                begin = piece.dom.lo.finite() ? piece.dom.lo.value : throw std::domain_error(
                            "value positive on an unbounded negative tail");
        } else {
            const Rat z = *piece.f.solve(Rat(0));
            if (piece.f.b > 0) {
                // positive after z
                Iv pos{Ext(z), Ext::pos_inf(), false, false};
                Iv cut = piece.dom.intersect(pos);
                if (!cut.is_empty()) begin = cut.lo.rat_or_throw();
            } else {
                Iv pos{Ext::neg_inf(), Ext(z), false, false};
                Iv cut = piece.dom.intersect(pos);
                if (!cut.is_empty())
                    begin = cut.lo.finite() ? cut.lo.value : throw std::domain_error(
                                "value positive on an unbounded negative tail");
            }
        }
        if (begin) {
            positive_exists = true;
            if (!first_violation || *begin < *first_violation) first_violation = *begin;
        }
    }
    if (!positive_exists) throw std::domain_error("value function is never positive");

    const Rat y = *first_violation;
    return {y, v.at(y) >= 0};
}

// -- fixtures ---------------------------------------------------------------

namespace {

MonotoneStepCorrespondence box_demand(const Rat& volume, const Rat& top_price) {
    // every consumer shares the reservation price
    MonotoneStepCorrespondence d;
    d.orientation = MonotoneStepCorrespondence::Orientation::NonIncreasing;
    d.breakpoints.push_back({top_price, Rat(0), volume});
    d.gaps.push_back(Affine{volume, 0});
    d.gaps.push_back(Affine{0, 0});
    d.limit_low = volume;
    d.limit_high = 0;
    return d;
}

UnitValueCurve identity_revenue(const Rat& top_price) {
    UnitValueCurve c;
    c.pieces.push_back({Iv{Ext::neg_inf(), Ext(top_price), false, true}, Affine{0, 1}});
    return c;
}

std::vector<Rat> tenth_grid(int from, int to) {
    std::vector<Rat> grid;
    for (int k = from; k <= to; ++k) grid.push_back(Rat(k, 10));
    return grid;
}

}  // namespace

SymmetricPricingGame oligopoly_example_a() {
    SymmetricPricingGame game;
    game.endowment = Rat(3, 2);
    game.demand = box_demand(Rat(3, 2), Rat(2));
    game.revenue = identity_revenue(Rat(2));
    game.price_grid = tenth_grid(1, 22);
    return game;
}

SymmetricPricingGame oligopoly_example_b() {
    // linear demand hitting price 2 at zero volume below the clearing price,
    // stepping to a scarce stratum above it; keeps every caption claim
    // decidable on a coarse grid
    SymmetricPricingGame game;
    game.endowment = Rat(3, 2);
    MonotoneStepCorrespondence d;
    d.orientation = MonotoneStepCorrespondence::Orientation::NonIncreasing;
    d.breakpoints.push_back({Rat(1, 2), Rat(1), Rat(3, 2)});
    d.breakpoints.push_back({Rat(1), Rat(0), Rat(1)});
    d.gaps.push_back(Affine{2, -1});  // 2 - p up to the clearing price
    d.gaps.push_back(Affine{1, 0});
    d.gaps.push_back(Affine{0, 0});
    d.limit_low = 2;  // clipped by the grid anyway
    d.limit_high = 0;
    game.demand = d;
    game.revenue = identity_revenue(Rat(1));
    game.price_grid = tenth_grid(1, 20);
    return game;
}

}  // namespace nmkt
