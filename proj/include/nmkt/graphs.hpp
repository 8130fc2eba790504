#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nmkt/curves.hpp"

namespace nmkt {

/// One primitive of a planar point set in the (per-unit money, volume) plane.
/// Every set the graphical algorithm manipulates decomposes into finitely
/// many of these, with exact endpoint flags.
struct Primitive {
    enum class Kind { Point, Horizontal, Vertical, Slanted };
    Kind kind = Kind::Point;

    Rat p0, d0;    // Point; Horizontal height d0; Vertical abscissa p0
    Iv p_rng;      // Horizontal abscissa range (lo may be -inf)
    Iv d_rng;      // Vertical / Slanted height range (always finite)
    Affine p_of_d; // Slanted: abscissa as affine function of height

    bool contains(const Rat& p, const Rat& d) const;
    /// height span of the primitive, as an interval with flags
    Iv heights() const;

    static Primitive point(Rat p, Rat d);
    static Primitive horizontal(Rat d, Iv p_rng);
    static Primitive vertical(Rat p, Iv d_rng);
    static Primitive slanted(Affine p_of_d, Iv d_rng);
};

struct PointSet2D {
    std::vector<Primitive> prims;
    bool contains(const Rat& p, const Rat& d) const;
    bool empty() const { return prims.empty(); }
};

/// Piecewise-affine boundary of a region, indexed by height. Pieces partition
/// the covered height range; `attained` records whether the edge value is a
/// member of the underlying set at those heights.
struct EdgeFn {
    struct Piece {
        Iv d_rng;
        Affine f;
        bool attained;
    };
    std::vector<Piece> pieces;  // ascending heights

    struct Value {
        Rat value;
        bool attained;
    };
    std::optional<Value> at(const Rat& d) const;
};

struct DiscreteMeasure {
    std::vector<std::pair<Rat, Rat>> atoms;  // (location, mass > 0), ascending
    std::optional<std::string> tail;         // closed-form countable tail, if truncated

    Rat total() const;
    void normalize();
};

/// A demand price achieving a given revenue, with the demand volume there.
struct AchievedPrice {
    Rat r;
    Rat volume;  // max real demand at r
};

class DemandGraph {
  public:
    struct Piece {
        Iv r_dom;        // maximal price interval, open-left / flagged-right
        Affine revenue;  // p-hat on the piece
        Affine volume;   // max real demand on the piece (non-increasing)
        Primitive image;
    };

    std::vector<Piece> pieces;  // ascending r
    PointSet2D graph;           // D
    PointSet2D border0, border1, border2, border3;  // V_D^(0..3)
    EdgeFn right_edge;          // right boundary of A_D by height
    Rat d_max;
    SupResult sup_revenue;      // p*_demand
    Rat border1_top = 0;        // top height of the achieved max-revenue band
    bool truncated = false;     // built from a truncated countable family

    bool in_augmented(const Rat& p, const Rat& d) const;  // A_D membership

    /// r-hat: the unique price generating a stored D point; nullopt off-graph.
    std::optional<Rat> price_finder(const Rat& p, const Rat& d) const;

    /// All demand prices whose revenue equals `p` (ascending r).
    std::vector<AchievedPrice> prices_at_abscissa(const Rat& p) const;

    /// sup of revenue over prices with volume >= s (resp. > s).
    SupResult sup_revenue_volume_geq(const Rat& s) const;
    SupResult sup_revenue_volume_gt(const Rat& s) const;

    Rat volume_at(const Rat& r) const;   // max real demand
    UnitValueCurve::Value revenue_at(const Rat& r) const;
};

DemandGraph build_demand_graph(const DemandSide& side);
DemandGraph build_demand_graph(const PopulationSpec& spec);

/// One primitive's contribution to sup{revenue : volume >= h} (resp. > h),
/// as an affine function of the height h over a stratum [h_lo, h_hi] that
/// does not straddle the primitive's height bounds (h_lo == h_hi queries a
/// single height). nullopt when the primitive has no qualifying points.
struct SupContribution {
    Affine value;  // affine in the height
    bool attained;
};
std::optional<SupContribution> sup_contribution_geq(const Primitive& prim, const Rat& h_lo,
                                                    const Rat& h_hi);
std::optional<SupContribution> sup_contribution_gt(const Primitive& prim, const Rat& h_lo,
                                                   const Rat& h_hi);

class SupplyGraph {
  public:
    enum class Gen { Ramp, Plateau, Jump, Point };
    struct Piece {
        Primitive image;
        Gen gen = Gen::Point;
        Rat rho0;         // Jump / Point: generating supply price
        Affine rho_of_p;  // Ramp / Plateau: supply price from the unit cost
    };

    std::vector<Piece> pieces;
    PointSet2D graph;  // S
    EdgeFn left_edge;  // left boundary of A_S by height
    Rat s_max;
    MonotoneStepCorrespondence corr;  // real supply, for residual ratios
    Affine unit_cost;

    bool in_augmented(const Rat& p, const Rat& s) const;  // A_S membership

    /// rho-hat: unique generating supply price; nullopt off-graph.
    std::optional<Rat> price_finder(const Rat& p, const Rat& s) const;
    /// q-hat: canonical residual ratio (1 whenever the residual is zero).
    std::optional<Rat> ratio_finder(const Rat& p, const Rat& s) const;

    /// {p : (p, s) in S}, as an exact interval union.
    IvSet abscissas_at_height(const Rat& s) const;
};

SupplyGraph build_supply_graph(const SupplySide& side);
SupplyGraph build_supply_graph(const PopulationSpec& spec);

/// Demand price measures admissible at a V_D^(3) point: canonical
/// representatives plus the membership predicate.
class DemandMeasureFamily {
  public:
    Rat abscissa, volume;                 // the queried point
    bool at_max_revenue_band = false;     // point lies in V_D^(1)
    std::vector<AchievedPrice> achieved;  // prices whose revenue equals abscissa
    std::vector<DiscreteMeasure> representatives;
    bool truncated = false;

    /// ratio sum over the achieved volumes; < 1 means rationing.
    Rat ratio_sum(const DiscreteMeasure& mu) const;
    bool contains(const DiscreteMeasure& mu) const;
    /// True when the admissible measure is unique.
    bool unique() const;
    /// Largest support size a member can have.
    int max_support_size() const;
};

/// Throws std::domain_error when the point is outside V_D^(3).
DemandMeasureFamily demand_measures(const DemandGraph& dg, const Rat& p, const Rat& s);

/// Point mass of size s at rho-hat(p, s); zero measure at the origin.
/// Throws std::domain_error off-graph.
DiscreteMeasure supply_measure(const SupplyGraph& sg, const Rat& p, const Rat& s);

/// JSON export of primitive lists (typed primitives with endpoint flags).
std::string point_set_json(const PointSet2D& set);
/// CSV flattening for plotting: "kind,p_lo,p_hi,d_lo,d_hi,flags".
std::string point_set_csv(const PointSet2D& set);

}  // namespace nmkt
