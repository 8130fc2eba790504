#pragma once

#include <string>
#include <vector>

#include "nmkt/population.hpp"

namespace nmkt {

/// Cumulative cutoff-indexed mass: atoms (point jumps) plus uniform ramps.
/// strict_at(x) is the mass strictly below x, weak_at(x) includes x. Both
/// real supply and real demand reduce to this one structure.
class CumulativeMass {
  public:
    struct Node {
        Rat x;
        Rat strict_val;   // value of strict_at at x
        Rat jump;         // atom mass at x
        Rat slope_right;  // density on the gap to the next node
        Rat weak_val;     // strict_val + jump
    };

    void add_atom(Rat x, Rat mass);
    void add_ramp(Rat lo, Rat hi, Rat density);
    void finalize();

    Rat strict_at(const Rat& x) const;
    Rat weak_at(const Rat& x) const;
    const Rat& total() const { return total_; }
    const std::vector<Node>& nodes() const { return nodes_; }
    bool empty() const { return nodes_.empty(); }

  private:
    struct RawEvent {
        Rat x;
        Rat jump;
        Rat dslope;  // density change at x
    };
    std::vector<RawEvent> raw_;
    std::vector<Node> nodes_;
    Rat total_ = 0;
    bool finalized_ = false;
};

/// Interval-valued monotone map price -> volume in explicit table form:
/// breakpoints carry the value interval, gaps carry affine evaluators. Kept
/// in raw form so invalid instances can be constructed and rejected by
/// check_maximal_monotone.
struct MonotoneStepCorrespondence {
    enum class Orientation { NonDecreasing, NonIncreasing };

    struct Breakpoint {
        Rat price;
        Rat lo, hi;  // value interval at the price
    };

    Orientation orientation = Orientation::NonDecreasing;
    std::vector<Breakpoint> breakpoints;  // ascending prices
    std::vector<Affine> gaps;             // breakpoints.size()+1 entries
    Rat limit_low;                        // value limit as price -> -inf
    Rat limit_high;                       // value limit as price -> +inf

    Rat min_at(const Rat& price) const;
    Rat max_at(const Rat& price) const;
    /// Supremum volume (S_max / D_max).
    Rat bound() const;
    bool degenerate_at(const Rat& price) const { return min_at(price) == max_at(price); }
};

struct MonotoneVerdict {
    bool pass = true;
    std::vector<std::string> issues;
};

/// Verifies interval-valuedness, the two one-sided limit identities of
/// maximal monotonicity, and finite limits.
MonotoneVerdict check_maximal_monotone(const MonotoneStepCorrespondence& corr);

/// Piecewise-affine per-unit money value of contracting at a price. Prices
/// outside every piece carry the zero-volume convention: value 0, vacuous.
struct UnitValueCurve {
    struct Piece {
        Iv dom;
        Affine f;
    };
    struct Value {
        Rat value;
        bool vacuous = false;
    };

    std::vector<Piece> pieces;  // ascending, pairwise disjoint

    Value at(const Rat& x) const;
    /// Left limit lim_{x'->x^-}; vacuous when approaching from outside.
    Value left_limit(const Rat& x) const;
};

/// Aggregated supply side of a population: volumes plus both cost curves.
struct SupplySide {
    CumulativeMass cum;
    MonotoneStepCorrespondence corr;
    UnitValueCurve cost_upper;  // per-unit cost over the weak (<=) volume
    UnitValueCurve cost_lower;  // per-unit cost over the strict (<) volume
    Affine unit_cost;           // shared affine cost of the built-in kinds
    Rat s_max;
};

struct DemandSide {
    CumulativeMass cum;  // cutoff-indexed volume mass (1{cutoff < r} oriented)
    MonotoneStepCorrespondence corr;
    UnitValueCurve revenue;  // demand revenue per unit
    Rat d_max;
    /// highest achieved revenue and where; set when d_max > 0
    Rat sup_revenue;
};

SupplySide build_supply_side(const PopulationSpec& spec);
DemandSide build_demand_side(const PopulationSpec& spec);

// Spec-facing operation wrappers.
MonotoneStepCorrespondence real_supply(const PopulationSpec& spec);
MonotoneStepCorrespondence real_demand(const PopulationSpec& spec);
std::pair<UnitValueCurve, UnitValueCurve> supply_cost_curves(const PopulationSpec& spec);
UnitValueCurve demand_revenue_curve(const PopulationSpec& spec);

/// Blended per-unit cost of acquiring the q-mixed volume at supply price rho;
/// zero-volume limit pinned to 0 (vacuous flag).
UnitValueCurve::Value conditional_supply_cost(const SupplySide& supply, const Rat& q,
                                              const Rat& rho);
UnitValueCurve::Value conditional_supply_cost(const PopulationSpec& spec, const Rat& q,
                                              const Rat& rho);

/// CSV export: "price,lower,upper,closed_lower,closed_upper" rows at
/// breakpoints plus gap samples.
std::string correspondence_csv(const MonotoneStepCorrespondence& corr);
/// CSV export: "price,value,tag" rows at piece boundaries.
std::string unit_curve_csv(const UnitValueCurve& curve);

}  // namespace nmkt
