#pragma once

// Test-side oracles: independent brute-force routes for the values the
// library computes symbolically. These stay deliberately naive -- direct
// enumeration over classes, exact integrals over uniform stretches, dense
// probe grids over prices -- and never call into the curve/graph machinery
// they check.

#include <functional>
#include <vector>

#include "nmkt/markets.hpp"
#include "nmkt/population.hpp"
#include "nmkt/rng.hpp"

namespace nmkt::oracle {

// E[volume * 1{cutoff <= rho}] (weak) or 1{cutoff < rho} (strict) by direct
// class enumeration; uniform stretches integrate in closed form.
Rat supply_volume(const PopulationSpec& spec, const Rat& rho, bool weak);
Rat demand_volume(const PopulationSpec& spec, const Rat& r, bool weak);

// Per-unit supply cost / demand revenue at a price, via the expectation
// ratio with unit values taken from the application formulas (kind name
// dispatch, not the library's affine bundles). vacuous -> nullopt.
std::optional<Rat> supply_cost(const PopulationSpec& spec, const Rat& rho, bool weak);
std::optional<Rat> demand_revenue(const PopulationSpec& spec, const Rat& r);

// Pointwise set membership from the definitions over a probe price set.
// Queries extend the probes with the exact demand prices that invert the
// revenue or the volume at the queried point, reconstructed locally from the
// class data (the piecewise pieces are affine between probes).
struct GraphOracle {
    struct Entry {
        Rat r, vol;
        std::optional<Rat> rev;
    };

    const PopulationSpec* spec;
    std::vector<Rat> probes;      // demand prices, breakpoint-complete
    std::vector<Entry> entries;   // precomputed pointwise values at probes

    Rat max_demand(const Rat& r) const;
    std::optional<Rat> revenue(const Rat& r) const;  // nullopt when volume is 0

    // probe entries plus exact inverse solutions for the queried point
    std::vector<Entry> candidates(const Rat& p, const Rat& d) const;

    bool in_demand_graph(const Rat& p, const Rat& d) const;
    bool in_augmented_demand(const Rat& p, const Rat& d) const;
    bool in_border0(const Rat& p, const Rat& d) const;
    bool in_border1(const Rat& p, const Rat& d) const;
    bool in_border2(const Rat& p, const Rat& d) const;
    bool in_border3(const Rat& p, const Rat& d) const;

    bool in_supply_graph(const Rat& p, const Rat& s) const;
    bool in_augmented_supply(const Rat& p, const Rat& s) const;

    Rat sup_revenue() const;  // p* over probes (plus the zero convention)
};

GraphOracle make_graph_oracle(const PopulationSpec& spec, int grid_points = 200);

// Random well-behaved populations for the property suites.
PopulationSpec random_trading_spec(Rng& rng);
PopulationSpec random_credit_spec(Rng& rng);
PopulationSpec random_spec(Rng& rng);

}  // namespace nmkt::oracle
