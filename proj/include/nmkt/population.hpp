#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "nmkt/geometry.hpp"
#include "nmkt/rational.hpp"
#include "nmkt/rng.hpp"

namespace nmkt {

/// Raised when a population fails one of the numbered market regularity
/// conditions in a context that cannot return a report.
struct ConditionViolation : std::runtime_error {
    int condition;
    ConditionViolation(int cond, const std::string& what)
        : std::runtime_error("condition " + std::to_string(cond) + ": " + what), condition(cond) {}
};

/// Population weight of one class: a point mass, or a uniform stretch over the
/// class's cutoff coordinate (the cost parameter on the supply side).
struct WeightSpec {
    enum class Type { Atom, Segment };
    Type type = Type::Atom;
    Rat mass;                          // Atom
    Rat lo, hi, density;               // Segment
    bool lo_closed = false, hi_closed = true;

    static WeightSpec atom(Rat m) {
        WeightSpec w;
        w.type = Type::Atom;
        w.mass = std::move(m);
        return w;
    }
    static WeightSpec segment(Rat lo, Rat hi, Rat density, bool lo_closed = false,
                              bool hi_closed = true) {
        WeightSpec w;
        w.type = Type::Segment;
        w.lo = std::move(lo);
        w.hi = std::move(hi);
        w.density = std::move(density);
        w.lo_closed = lo_closed;
        w.hi_closed = hi_closed;
        return w;
    }
    Rat total_mass() const { return type == Type::Atom ? mass : density * (hi - lo); }
    void validate() const;
};

/// Discrete project payoff distribution for the credit kind. Payoffs are per
/// unit of budget; a viable project has mean above one.
struct ProjectDistribution {
    std::vector<std::pair<Rat, Rat>> atoms;  // (payoff, probability)

    Rat mean() const;
    Rat prob_total() const;
    void validate_structure() const;  // probabilities sum to one, payoffs >= 0
};

struct CreditDemander {
    Rat wealth_fraction;  // eta_{0,1} in (0,1)
    int project = 0;      // index into PopulationSpec::projects
    friend bool operator==(const CreditDemander&, const CreditDemander&) = default;
};

using Eta0 = std::variant<Rat, CreditDemander>;

struct SupplierClass {
    WeightSpec weight;
    Rat h0;  // intensive (cost) parameter; segment classes vary this coordinate
    Rat h1;  // extensive scale, > 0
    Rat v;   // capacity, >= 0
};

struct DemanderClass {
    WeightSpec weight;
    Eta0 eta0;
    Rat eta1;  // extensive scale, > 0
};

struct SupplierStrategy {
    Rat cutoff;  // lowest supply price willing to take
    Rat volume;  // price-independent optimal bid volume
    bool approx = false;
};

struct DemanderStrategy {
    Rat cutoff;  // highest demand price willing to take
    Rat volume;
    bool approx = false;
};

/// Per-class unit revenue as a piecewise-affine function of the demand price.
struct PwAffine {
    struct Piece {
        Iv dom;
        Affine f;
    };
    std::vector<Piece> pieces;  // ascending, covering the class's price domain

    Rat operator()(const Rat& x) const;
};

class PopulationSpec;

/// Behavior bundle of one market application: per-class dominant strategies
/// and the mediator-facing unit values, plus the off-market action labels.
/// Supplier unit payoff is affine in the supply price for the supported
/// kinds, which keeps every aggregate curve piecewise affine.
struct MarketKind {
    std::string name;
    std::array<std::string, 2> supplier_actions;
    std::array<std::string, 2> demander_actions;

    // `coord` is the varying cutoff coordinate for segment classes; equal to
    // cls.h0 (resp. the trading eta0) for atoms.
    std::function<SupplierStrategy(const SupplierClass& cls, const Rat& coord)> supplier_strategy;
    std::function<Affine(const SupplierClass& cls)> supplier_unit_payoff;  // w-bar in rho
    std::function<DemanderStrategy(const PopulationSpec& spec, const DemanderClass& cls,
                                   const Rat& coord)>
        demander_strategy;
    std::function<PwAffine(const PopulationSpec& spec, const DemanderClass& cls)>
        demander_unit_revenue;  // omega-bar in r on (-inf, cutoff]
    std::function<void(const PopulationSpec& spec, const SupplierClass& cls)> check_supplier;
    std::function<void(const PopulationSpec& spec, const DemanderClass& cls)> check_demander;
    bool demander_segments_allowed = true;
};

/// Note attached to fixtures that truncate a countably infinite population.
struct TruncationNote {
    int truncated_at = 0;
    std::string tail;  // closed-form description of the dropped tail
};

class PopulationSpec {
  public:
    MarketKind kind;
    std::vector<SupplierClass> suppliers;
    std::vector<DemanderClass> demanders;
    std::vector<ProjectDistribution> projects;
    std::optional<TruncationNote> truncation;

    /// Structural invariants only (masses sum to one, positive extensive
    /// scales, kind-specific class checks). The numbered conditions live in
    /// validate_well_behaved.
    void validate_structure() const;

    const ProjectDistribution& project(int index) const;
};

// -- operations ---------------------------------------------------------

SupplierStrategy derive_supplier_strategy(const SupplierClass& cls, const MarketKind& kind);
DemanderStrategy derive_demander_strategy(const PopulationSpec& spec, const DemanderClass& cls,
                                          const MarketKind& kind);

/// Mediator-side value per unit of h1 of contracting this class at supply
/// price rho. Throws std::domain_error below the class cutoff.
Rat supplier_unit_payoff(const SupplierClass& cls, const MarketKind& kind, const Rat& rho);

/// Mediator-side revenue per unit of eta1 at demand price r. Throws
/// std::domain_error above the class cutoff.
Rat demander_unit_revenue(const PopulationSpec& spec, const DemanderClass& cls,
                          const MarketKind& kind, const Rat& r);

struct ConditionVerdict {
    int id;
    std::string name;
    bool pass;
    std::string detail;
};

struct ConditionReport {
    std::vector<ConditionVerdict> verdicts;
    bool all_pass() const;
    const ConditionVerdict& find(int id) const;
};

/// Per-condition verdicts for conditions 1-11 and 13-15 over the supported
/// finite-mixture encoding. Never throws; failures are carried in the report.
ConditionReport validate_well_behaved(const PopulationSpec& spec);

// -- finite market sampling ---------------------------------------------

struct SampledSupplier {
    Rat h0, h1, capacity;
    Rat bid_volume, bid_price;  // dominant-strategy bid
};

struct SampledDemander {
    Eta0 eta0;
    Rat eta1;
    Rat bid_volume, bid_price;
};

struct FiniteMarketInstance {
    uint64_t seed = 0;
    std::vector<SampledSupplier> suppliers;
    std::vector<SampledDemander> demanders;
    int n_mediators = 0;
    // scales chosen as the side populations, per the generator contract
    Rat lambda_supply, lambda_demand;
};

/// iid draws from the population, deterministic given the seed.
FiniteMarketInstance sample_finite_market(const PopulationSpec& spec, int n_suppliers,
                                          int n_mediators, int n_demanders, uint64_t seed);

}  // namespace nmkt
