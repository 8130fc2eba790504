#include "nmkt/population.hpp"

#include <algorithm>

namespace nmkt {

void WeightSpec::validate() const {
    if (type == Type::Atom) {
        if (mass < 0) throw std::invalid_argument("atom mass must be >= 0");
    } else {
        if (!(lo < hi)) throw std::invalid_argument("segment needs lo < hi");
        if (density < 0) throw std::invalid_argument("segment density must be >= 0");
    }
}

Rat ProjectDistribution::mean() const {
    Rat m = 0;
    for (const auto& [x, p] : atoms) m += x * p;
    return m;
}

Rat ProjectDistribution::prob_total() const {
    Rat t = 0;
    for (const auto& [x, p] : atoms) t += p;
    return t;
}

void ProjectDistribution::validate_structure() const {
    if (atoms.empty()) throw std::invalid_argument("project needs at least one payoff atom");
    for (const auto& [x, p] : atoms) {
        if (x < 0) throw std::invalid_argument("project payoffs must be >= 0");
        if (p <= 0) throw std::invalid_argument("project probabilities must be > 0");
    }
    if (prob_total() != 1) throw std::invalid_argument("project probabilities must sum to 1");
}

Rat PwAffine::operator()(const Rat& x) const {
    for (const auto& piece : pieces)
        if (piece.dom.contains(x)) return piece.f(x);
    throw std::domain_error("price outside the curve domain");
}

void PopulationSpec::validate_structure() const {
    Rat supply_mass = 0, demand_mass = 0;
    for (const auto& s : suppliers) {
        s.weight.validate();
        if (s.h1 <= 0) throw std::invalid_argument("supplier h1 must be > 0");
        if (s.v < 0) throw std::invalid_argument("supplier capacity must be >= 0");
        if (kind.check_supplier) kind.check_supplier(*this, s);
        supply_mass += s.weight.total_mass();
    }
    for (const auto& d : demanders) {
        d.weight.validate();
        if (d.eta1 <= 0) throw std::invalid_argument("demander eta1 must be > 0");
        if (d.weight.type == WeightSpec::Type::Segment && !kind.demander_segments_allowed)
            throw std::invalid_argument(kind.name + " kind supports demander atoms only");
        if (kind.check_demander) kind.check_demander(*this, d);
        demand_mass += d.weight.total_mass();
    }
    for (const auto& p : projects) p.validate_structure();
    if (!suppliers.empty() && supply_mass != 1)
        throw std::invalid_argument("supplier weights must total mass 1, got " +
                                    rat_str(supply_mass));
    // a truncated countable family carries the dropped tail mass in its note
    const bool truncated = truncation.has_value();
    if (!demanders.empty() && demand_mass != 1 && !(truncated && demand_mass < 1))
        throw std::invalid_argument("demander weights must total mass 1, got " +
                                    rat_str(demand_mass));
}

const ProjectDistribution& PopulationSpec::project(int index) const {
    if (index < 0 || index >= static_cast<int>(projects.size()))
        throw std::out_of_range("project index " + std::to_string(index));
    return projects[index];
}

SupplierStrategy derive_supplier_strategy(const SupplierClass& cls, const MarketKind& kind) {
    if (cls.weight.type != WeightSpec::Type::Atom)
        throw std::invalid_argument("derive_supplier_strategy expects an atom class");
    return kind.supplier_strategy(cls, cls.h0);
}

DemanderStrategy derive_demander_strategy(const PopulationSpec& spec, const DemanderClass& cls,
                                          const MarketKind& kind) {
    if (cls.weight.type != WeightSpec::Type::Atom)
        throw std::invalid_argument("derive_demander_strategy expects an atom class");
    const Rat coord = std::holds_alternative<Rat>(cls.eta0) ? std::get<Rat>(cls.eta0) : Rat(0);
    return kind.demander_strategy(spec, cls, coord);
}

Rat supplier_unit_payoff(const SupplierClass& cls, const MarketKind& kind, const Rat& rho) {
    const auto strat = derive_supplier_strategy(cls, kind);
    if (rho < strat.cutoff)
        throw std::domain_error("supply price " + rat_str(rho) + " below class cutoff " +
                                rat_str(strat.cutoff));
    return kind.supplier_unit_payoff(cls)(rho);
}

Rat demander_unit_revenue(const PopulationSpec& spec, const DemanderClass& cls,
                          const MarketKind& kind, const Rat& r) {
    const auto strat = derive_demander_strategy(spec, cls, kind);
    if (r > strat.cutoff)
        throw std::domain_error("demand price " + rat_str(r) + " above class cutoff " +
                                rat_str(strat.cutoff));
    return kind.demander_unit_revenue(spec, cls)(r);
}

bool ConditionReport::all_pass() const {
    return std::all_of(verdicts.begin(), verdicts.end(),
                       [](const ConditionVerdict& v) { return v.pass; });
}

const ConditionVerdict& ConditionReport::find(int id) const {
    for (const auto& v : verdicts)
        if (v.id == id) return v;
    throw std::out_of_range("no verdict for condition " + std::to_string(id));
}

FiniteMarketInstance sample_finite_market(const PopulationSpec& spec, int n_suppliers,
                                          int n_mediators, int n_demanders, uint64_t seed) {
    if (n_suppliers < 1 || n_mediators < 1 || n_demanders < 1)
        throw std::invalid_argument("sample_finite_market: all counts must be >= 1");
    spec.validate_structure();

    FiniteMarketInstance inst;
    inst.seed = seed;
    inst.n_mediators = n_mediators;
    inst.lambda_supply = Rat(n_suppliers);
    inst.lambda_demand = Rat(n_demanders);

    Rng rng(seed);

    // cumulative masses for class selection
    auto pick_class = [](Rng& r, const std::vector<Rat>& cum) {
        const Rat u = r.uniform_rat(0, 1);
        for (size_t i = 0; i < cum.size(); ++i)
            if (u < cum[i]) return i;
        return cum.size() - 1;
    };

    std::vector<Rat> scum;
    Rat acc = 0;
    for (const auto& s : spec.suppliers) scum.push_back(acc += s.weight.total_mass());
    std::vector<Rat> dcum;
    acc = 0;
    for (const auto& d : spec.demanders) dcum.push_back(acc += d.weight.total_mass());

    Rng srng = rng.child(1);
    inst.suppliers.reserve(n_suppliers);
    for (int i = 0; i < n_suppliers; ++i) {
        const auto& cls = spec.suppliers[pick_class(srng, scum)];
        Rat coord = cls.h0;
        if (cls.weight.type == WeightSpec::Type::Segment)
            coord = srng.uniform_rat(cls.weight.lo, cls.weight.hi);
        const auto strat = spec.kind.supplier_strategy(cls, coord);
        inst.suppliers.push_back({coord, cls.h1, cls.v, strat.volume, strat.cutoff});
    }

    Rng drng = rng.child(2);
    inst.demanders.reserve(n_demanders);
    for (int i = 0; i < n_demanders; ++i) {
        const auto& cls = spec.demanders[pick_class(drng, dcum)];
        Rat coord = std::holds_alternative<Rat>(cls.eta0) ? std::get<Rat>(cls.eta0) : Rat(0);
        Eta0 eta0 = cls.eta0;
        if (cls.weight.type == WeightSpec::Type::Segment) {
            coord = drng.uniform_rat(cls.weight.lo, cls.weight.hi);
            eta0 = coord;
        }
        const auto strat = spec.kind.demander_strategy(spec, cls, coord);
        inst.demanders.push_back({eta0, cls.eta1, strat.volume, strat.cutoff});
    }
    return inst;
}

}  // namespace nmkt
