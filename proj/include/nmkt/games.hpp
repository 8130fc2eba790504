#pragma once

#include "nmkt/curves.hpp"

namespace nmkt {

/// Continuum oligopoly pricing proxy: every retail holds the same
/// differential endowment and quotes one price; demanders follow the demand
/// correspondence with uniform rationing. Deviation classes: measure-zero
/// entrants, symmetric positive-measure collusion blocks on a mass-fraction
/// grid, and single-price sub-block betrayals.
struct SymmetricPricingGame {
    Rat endowment;                     // per unit measure of retails
    MonotoneStepCorrespondence demand; // volume willing to buy at each price
    UnitValueCurve revenue;            // per-unit revenue (identity here)
    std::vector<Rat> price_grid;       // sorted, includes the monopoly price
};

struct ProfileSets {
    std::vector<Rat> nash;
    std::vector<Rat> collusion_free;
    std::vector<Rat> bfcf;
};

/// Classifies every symmetric grid profile. Throws std::invalid_argument
/// when the grid misses the monopoly price.
ProfileSets classify_symmetric_profiles(const SymmetricPricingGame& game);

/// Monopoly price of the game on its grid (argmax of p * min(endowment,
/// demand)).
Rat monopoly_price(const SymmetricPricingGame& game);

/// Piecewise-affine common value function with one-sided continuity chosen
/// by which piece owns each breakpoint.
struct ValueFunction {
    struct Piece {
        Iv dom;
        Affine f;
    };
    std::vector<Piece> pieces;  // ascending, partitioning the line

    Rat at(const Rat& x) const;
};

struct PseudoEquilibrium {
    Rat limit_price;
    bool attained_as_nash;  // true when the crossing point itself has v >= 0
};

/// The limit bid of better-response sequences in the known common value
/// auction. Throws std::domain_error when the premises fail (no negative
/// tail or no positive value anywhere).
PseudoEquilibrium common_value_pseudo_equilibrium(const ValueFunction& v);

/// Fixture games for the worked oligopoly examples.
SymmetricPricingGame oligopoly_example_a();
SymmetricPricingGame oligopoly_example_b();

}  // namespace nmkt
