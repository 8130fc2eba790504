#pragma once

#include "nmkt/graphs.hpp"

namespace nmkt {

/// Supply price measure (single atom or zero), residual ratio, and demand
/// price measure of one competitive equilibrium.
struct EquilibriumCandidate {
    DiscreteMeasure supply;
    Rat q = 1;  // residual ratio in [0,1]
    DiscreteMeasure demand;
    bool rationing = false;        // demand ratio sum < 1
    bool multiple_prices = false;  // demand support size > 1
};

/// Everything the solver and verifier need, built once per population.
struct MarketGeometry {
    SupplySide supply_side;
    DemandSide demand_side;
    SupplyGraph supply;
    DemandGraph demand;
};

MarketGeometry build_geometry(const PopulationSpec& spec);

struct EquilibriumSet {
    enum class Kind { Empty, UniquePositiveProfit, ZeroProfitFamily };

    struct PointInfo {
        Rat cost, volume;  // the (p, s) point in the plane
        bool measure_unique;
        int max_support;
        bool rationing_possible;
    };

    Kind kind = Kind::Empty;
    std::vector<EquilibriumCandidate> representatives;
    PointSet2D family;  // E subset of V_D^(3) cap S (zero-profit case)
    std::vector<PointInfo> point_infos;
    /// Whether the all-out (no trade) strategy profile is itself an
    /// equilibrium: true exactly when the profitable-deviation set is empty.
    bool null_trade_equilibrium = false;
};

/// Membership in the profitable-deviation set P-tilde at (rho, q).
bool profitable_set_membership(const MarketGeometry& g, const Rat& rho, const Rat& q);
bool profitable_set_membership(const PopulationSpec& spec, const Rat& rho, const Rat& q);

/// True when some (rho', q') lexicographically above (rho, q) lies in
/// P-tilde; the search runs symbolically over the supply primitives. The
/// witness (when requested) is a point of the deviation region.
bool profitable_point_above(const MarketGeometry& g, const Rat& rho, const Rat& q,
                            std::pair<Rat, Rat>* witness = nullptr);

/// True when P-tilde is empty altogether (the no-trade profile survives).
bool profitable_set_empty(const MarketGeometry& g);

/// The graphical equilibria-finding algorithm, executed on the symbolic
/// primitive sets. An empty result is a valid outcome.
EquilibriumSet find_equilibria(const MarketGeometry& g);
EquilibriumSet find_equilibria(const PopulationSpec& spec);

struct VerifyResult {
    bool pass = true;
    std::string violated_clause;     // first failed clause, empty on pass
    std::vector<std::string> notes;  // vacuous-clause flags etc.
};

/// Checks a candidate against the necessary-and-sufficient clauses: equal
/// supply bid, admissible demand measure, no profitable deviation above, and
/// the zero-profit fallback (vacuous for the supported kinds, flagged).
VerifyResult verify_equilibrium(const MarketGeometry& g, const EquilibriumCandidate& cand);
VerifyResult verify_equilibrium(const PopulationSpec& spec, const EquilibriumCandidate& cand);

struct ResaleValue {
    Rat value = 0;
    bool empty_set = false;    // no demand-at-resale crossing: non-improving
    bool unbounded = false;    // degenerate denominator in the utility formula
};

/// Supremum utility of a single deviating mediator that corners the supply
/// at (rho, q) and quotes r, optimistically assuming pseudo-equilibrium
/// resale continuation.
ResaleValue monopoly_optimistic_resale_value(const MarketGeometry& g, const Rat& rho, const Rat& q,
                                             const Rat& r);

struct Classification {
    bool exists = false;
    bool unique = false;
    bool rationing_anywhere = false;
    int max_demand_support = 0;
};

Classification classify(const EquilibriumSet& eqset);

/// Equilibria JSON per the external interface contract.
std::string equilibria_json(const EquilibriumSet& eqset);

}  // namespace nmkt
