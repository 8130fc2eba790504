#include "oracles.hpp"

#include <algorithm>
#include <set>

namespace nmkt::oracle {

namespace {

// unit cost/revenue straight from the two market applications
Rat unit_cost_formula(const std::string& kind, const Rat& rho) {
    if (kind == "trading") return rho;
    if (kind == "credit") return 1 + rho;
    throw std::logic_error("oracle knows trading and credit only");
}

Rat unit_revenue_formula(const PopulationSpec& spec, const DemanderClass& cls, const Rat& r) {
    if (spec.kind.name == "trading") return r;
    const auto& e = std::get<CreditDemander>(cls.eta0);
    const auto& proj = spec.project(e.project);
    const Rat owed = (1 + r) * (1 - e.wealth_fraction);
    Rat acc = 0;
    for (const auto& [x, p] : proj.atoms) acc += p * std::min(x, owed);
    return acc;
}

Rat class_cutoff(const PopulationSpec& spec, const DemanderClass& cls) {
    return derive_demander_strategy(spec, cls, spec.kind).cutoff;
}

}  // namespace

Rat supply_volume(const PopulationSpec& spec, const Rat& rho, bool weak) {
    Rat acc = 0;
    for (const auto& cls : spec.suppliers) {
        if (cls.weight.type == WeightSpec::Type::Atom) {
            const auto s = derive_supplier_strategy(cls, spec.kind);
            const bool in = weak ? s.cutoff <= rho : s.cutoff < rho;
            if (in) acc += cls.weight.mass * s.volume;
        } else {
            // cutoff == coordinate: integrate the density over the admitted span
            const Rat lo = cls.weight.lo;
            const Rat hi = std::min(cls.weight.hi, rho);
            if (hi > lo) acc += cls.weight.density * (hi - lo) * cls.h1;
        }
    }
    return acc;
}

Rat demand_volume(const PopulationSpec& spec, const Rat& r, bool weak) {
    Rat acc = 0;
    for (const auto& cls : spec.demanders) {
        if (cls.weight.type == WeightSpec::Type::Atom) {
            const auto s = derive_demander_strategy(spec, cls, spec.kind);
            const bool in = weak ? s.cutoff >= r : s.cutoff > r;
            if (in) acc += cls.weight.mass * s.volume;
        } else {
            const Rat lo = std::max(cls.weight.lo, r);
            const Rat hi = cls.weight.hi;
            if (hi > lo) acc += cls.weight.density * (hi - lo) * cls.eta1;
        }
    }
    return acc;
}

std::optional<Rat> supply_cost(const PopulationSpec& spec, const Rat& rho, bool weak) {
    const Rat vol = supply_volume(spec, rho, weak);
    if (vol == 0) return std::nullopt;
    // every winning supplier is paid the market price, so the numerator is
    // the unit formula times the admitted volume
    return unit_cost_formula(spec.kind.name, rho);
}

std::optional<Rat> demand_revenue(const PopulationSpec& spec, const Rat& r) {
    Rat num = 0, den = 0;
    for (const auto& cls : spec.demanders) {
        if (cls.weight.type == WeightSpec::Type::Atom) {
            const auto s = derive_demander_strategy(spec, cls, spec.kind);
            if (s.cutoff < r) continue;
            num += cls.weight.mass * cls.eta1 * unit_revenue_formula(spec, cls, r);
            den += cls.weight.mass * s.volume;
        } else {
            const Rat lo = std::max(cls.weight.lo, r);
            const Rat hi = cls.weight.hi;
            if (hi <= lo) continue;
            // trading stretch: unit revenue r, volume eta1 per unit mass
            num += cls.weight.density * (hi - lo) * cls.eta1 * r;
            den += cls.weight.density * (hi - lo) * cls.eta1;
        }
    }
    if (den == 0) return std::nullopt;
    return num / den;
}

Rat GraphOracle::max_demand(const Rat& r) const { return demand_volume(*spec, r, true); }

std::optional<Rat> GraphOracle::revenue(const Rat& r) const { return demand_revenue(*spec, r); }

std::vector<GraphOracle::Entry> GraphOracle::candidates(const Rat& p, const Rat& d) const {
    std::vector<Entry> out = entries;
    // consecutive entries bracket a single affine stretch of both functions
    // (probe gaps carry two interior evaluations); invert within each
    for (size_t i = 0; i + 1 < entries.size(); ++i) {
        const Entry &a = entries[i], &b = entries[i + 1];
        auto push_if_inside = [&](const Rat& r) {
            if (a.r < r && r < b.r) out.push_back({r, max_demand(r), revenue(r)});
        };
        if (a.vol != b.vol) {
            const Rat slope = (b.vol - a.vol) / (b.r - a.r);
            push_if_inside(a.r + (d - a.vol) / slope);
        }
        if (a.rev && b.rev && *a.rev != *b.rev) {
            const Rat slope = (*b.rev - *a.rev) / (b.r - a.r);
            push_if_inside(a.r + (p - *a.rev) / slope);
        }
    }
    return out;
}

bool GraphOracle::in_demand_graph(const Rat& p, const Rat& d) const {
    if (d <= 0) return false;
    for (const auto& e : candidates(p, d))
        if (e.vol == d && e.rev && *e.rev == p) return true;
    return false;
}

bool GraphOracle::in_augmented_demand(const Rat& p, const Rat& d) const {
    if (p < 0 || d <= 0) return false;
    for (const auto& e : candidates(p, d))
        if (e.vol >= d && e.rev && *e.rev >= p) return true;
    return false;
}

bool GraphOracle::in_border0(const Rat& p, const Rat& d) const {
    if (!in_augmented_demand(p, d)) return false;
    // p must be the rightmost augmented abscissa at height d
    for (const auto& e : candidates(p, d))
        if (e.vol >= d && e.rev && *e.rev > p) return false;
    return true;
}

Rat GraphOracle::sup_revenue() const {
    Rat best = 0;  // zero-volume convention keeps p* at least 0
    for (const auto& e : entries)
        if (e.rev && *e.rev > best) best = *e.rev;
    return best;
}

bool GraphOracle::in_border1(const Rat& p, const Rat& d) const {
    if (!in_border0(p, d)) return false;
    const Rat p_star = sup_revenue();
    Rat band_top = 0;
    bool band = false;
    for (const auto& e : entries)
        if (e.rev && *e.rev == p_star) {
            band = true;
            band_top = std::max(band_top, e.vol);
        }
    return band && d <= band_top;
}

bool GraphOracle::in_border2(const Rat& p, const Rat& d) const {
    if (!in_border0(p, d) || in_border1(p, d)) return false;
    // removed when it tops its own column: the column top is the largest
    // achieved volume at this abscissa that still lies on the border
    Rat top = d;
    for (const auto& e : candidates(p, d)) {
        if (!(e.rev && *e.rev == p)) continue;
        if (e.vol > top && in_border0(p, e.vol)) top = e.vol;
    }
    return d < top;
}

bool GraphOracle::in_border3(const Rat& p, const Rat& d) const {
    if (p == 0 && d == 0) return true;
    if (in_border1(p, d)) return true;
    if (!in_border0(p, d)) return false;
    // some achieved demand point at this abscissa sits weakly below
    for (const auto& e : candidates(p, d))
        if (e.rev && *e.rev == p && e.vol <= d) return true;
    return false;
}

bool GraphOracle::in_supply_graph(const Rat& p, const Rat& s) const {
    if (s <= 0) return false;
    // invert the unit cost formula
    const Rat rho = spec->kind.name == "trading" ? p : p - 1;
    return supply_volume(*spec, rho, false) <= s && s <= supply_volume(*spec, rho, true);
}

bool GraphOracle::in_augmented_supply(const Rat& p, const Rat& s) const {
    if (s <= 0) return false;
    const Rat rho = spec->kind.name == "trading" ? p : p - 1;
    return s <= supply_volume(*spec, rho, true);
}

GraphOracle make_graph_oracle(const PopulationSpec& spec, int grid_points) {
    GraphOracle g;
    g.spec = &spec;
    std::set<Rat> probes;
    Rat top = 0;
    bool have_top = false;
    for (const auto& cls : spec.demanders) {
        if (cls.weight.type == WeightSpec::Type::Atom) {
            const Rat cut = class_cutoff(spec, cls);
            probes.insert(cut);
            if (!have_top || cut > top) top = cut, have_top = true;
        } else {
            probes.insert(cls.weight.lo);
            probes.insert(cls.weight.hi);
            if (!have_top || cls.weight.hi > top) top = cls.weight.hi, have_top = true;
        }
        if (spec.kind.name == "credit") {
            // repayment kinks of each project
            const auto& e = std::get<CreditDemander>(cls.eta0);
            for (const auto& [x, prob] : spec.project(e.project).atoms) {
                (void)prob;
                probes.insert(x / (1 - e.wealth_fraction) - 1);
            }
        }
    }
    if (!have_top) top = 1;
    const Rat lo = std::min(Rat(0), top - 2);
    for (int k = 0; k <= grid_points; ++k)
        probes.insert(lo + (top - lo) * Rat(k, grid_points));
    g.probes.assign(probes.begin(), probes.end());
    // evaluate at every probe plus two interior points per gap, so that each
    // consecutive entry pair spans one affine stretch
    std::vector<Rat> rs;
    for (size_t i = 0; i < g.probes.size(); ++i) {
        rs.push_back(g.probes[i]);
        if (i + 1 < g.probes.size()) {
            const Rat &a = g.probes[i], &b = g.probes[i + 1];
            rs.push_back(a + (b - a) / 3);
            rs.push_back(a + (b - a) * 2 / 3);
        }
    }
    for (const auto& r : rs) g.entries.push_back({r, g.max_demand(r), g.revenue(r)});
    return g;
}

PopulationSpec random_trading_spec(Rng& rng) {
    PopulationSpec spec;
    spec.kind = trading_kind();
    auto small_rat = [&](long lo, long hi, long den) {
        return Rat(static_cast<long>(lo + rng.below(hi - lo + 1)), den);
    };
    // suppliers: one or two classes, atoms and/or one uniform stretch
    const int n_sup = 1 + static_cast<int>(rng.below(2));
    std::vector<Rat> masses;
    {
        Rat left = 1;
        for (int i = 0; i < n_sup; ++i) {
            Rat m = i + 1 == n_sup ? left : left * small_rat(1, 3, 4);
            masses.push_back(m);
            left -= m;
        }
    }
    for (int i = 0; i < n_sup; ++i) {
        const Rat h1 = small_rat(1, 8, 4);
        if (rng.below(2) == 0) {
            spec.suppliers.push_back(
                {WeightSpec::atom(masses[i]), small_rat(1, 12, 4), h1, h1});
        } else {
            const Rat lo = small_rat(0, 4, 4);
            const Rat width = small_rat(1, 8, 4);
            spec.suppliers.push_back(
                {WeightSpec::segment(lo, lo + width, masses[i] / width), Rat(0), h1, h1});
        }
    }
    const int n_dem = 1 + static_cast<int>(rng.below(3));
    std::vector<Rat> dmasses;
    {
        Rat left = 1;
        for (int i = 0; i < n_dem; ++i) {
            Rat m = i + 1 == n_dem ? left : left * small_rat(1, 3, 4);
            dmasses.push_back(m);
            left -= m;
        }
    }
    for (int i = 0; i < n_dem; ++i)
        spec.demanders.push_back(
            {WeightSpec::atom(dmasses[i]), Eta0(small_rat(1, 16, 4)), small_rat(1, 6, 3)});
    spec.validate_structure();
    return spec;
}

PopulationSpec random_credit_spec(Rng& rng) {
    PopulationSpec spec;
    spec.kind = credit_kind();
    auto small_rat = [&](long lo, long hi, long den) {
        return Rat(static_cast<long>(lo + rng.below(hi - lo + 1)), den);
    };
    const int n_proj = 1 + static_cast<int>(rng.below(3));
    for (int i = 0; i < n_proj; ++i) {
        const Rat p_hi = small_rat(1, 4, 8);  // success probability
        const Rat payoff = small_rat(3, 30, 1) / p_hi / 2;  // keeps the mean above one
        spec.projects.push_back({{{Rat(0), 1 - p_hi}, {payoff, p_hi}}});
    }
    std::vector<Rat> dmasses;
    {
        Rat left = 1;
        for (int i = 0; i < n_proj; ++i) {
            Rat m = i + 1 == n_proj ? left : left * small_rat(1, 3, 4);
            dmasses.push_back(m);
            left -= m;
        }
    }
    for (int i = 0; i < n_proj; ++i)
        spec.demanders.push_back({WeightSpec::atom(dmasses[i]),
                                  Eta0(CreditDemander{small_rat(1, 3, 4), i}),
                                  small_rat(1, 6, 2)});
    const Rat h1 = small_rat(1, 6, 4);
    if (rng.below(2) == 0) {
        spec.suppliers.push_back({WeightSpec::atom(Rat(1)), small_rat(0, 8, 8), h1, h1});
    } else {
        const Rat lo = small_rat(0, 2, 8);
        const Rat width = small_rat(1, 8, 8);
        spec.suppliers.push_back(
            {WeightSpec::segment(lo, lo + width, Rat(1) / width), Rat(0), h1, h1});
    }
    spec.validate_structure();
    return spec;
}

PopulationSpec random_spec(Rng& rng) {
    return rng.below(2) == 0 ? random_trading_spec(rng) : random_credit_spec(rng);
}

}  // namespace nmkt::oracle
