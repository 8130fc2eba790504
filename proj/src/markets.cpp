#include "nmkt/markets.hpp"

#include <algorithm>
#include <sstream>

namespace nmkt {

namespace {

const CreditDemander& credit_eta0(const DemanderClass& cls) {
    if (!std::holds_alternative<CreditDemander>(cls.eta0))
        throw std::invalid_argument("credit kind expects (wealth fraction, project) demanders");
    return std::get<CreditDemander>(cls.eta0);
}

/// Indifference value of contracting at rate r for a credit demander,
/// relative to staying out: E[max(-w, X - 1 - r(1-w))], per unit of budget.
Rat credit_indifference(const ProjectDistribution& proj, const Rat& w, const Rat& r) {
    Rat g = 0;
    const Rat borrow = 1 - w;
    for (const auto& [x, p] : proj.atoms) g += p * std::max(Rat(-w), Rat(x - 1 - r * borrow));
    return g;
}

/// Exact root of the piecewise-affine indifference function on r >= 0.
/// The function is non-increasing, positive at 0 for viable projects, and
/// eventually constant at -w < 0, so the root is unique when it exists.
Rat credit_cutoff(const ProjectDistribution& proj, const Rat& w) {
    const Rat borrow = 1 - w;
    if (credit_indifference(proj, w, 0) <= 0)
        throw ConditionViolation(
            4, "credit demander indifference equation has no root at nonnegative rates");
    // knots where an atom switches to the limited-liability branch
    std::vector<Rat> knots;
    for (const auto& [x, p] : proj.atoms) {
        Rat k = (x - 1 + w) / borrow;
        if (k > 0) knots.push_back(std::move(k));
    }
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());

    Rat left = 0;
    for (const auto& k : knots) {
        const Rat gk = credit_indifference(proj, w, k);
        if (gk > 0) {
            left = k;
            continue;
        }
        if (gk == 0) return k;
        break;
    }
    // on (left, next knot) the function is affine: g(r) = c0 + c1 * r
    Rat c0 = 0, c1 = 0;
    for (const auto& [x, p] : proj.atoms) {
        if (x - 1 - left * borrow > -w) {  // branch still active just above `left`
            c0 += p * (x - 1);
            c1 -= p * borrow;
        } else {
            c0 += p * (-w);
        }
    }
    if (c1 == 0) throw ConditionViolation(4, "credit indifference equation is flat at the root");
    const Rat root = -c0 / c1;
    if (credit_indifference(proj, w, root) != 0)
        throw ConditionViolation(4, "credit indifference root refinement failed");
    return root;
}

/// Expected repayment per unit of budget, min(X, (1+r)(1-w)), as a
/// piecewise-affine function of r on (-inf, cutoff].
PwAffine credit_revenue(const ProjectDistribution& proj, const Rat& w, const Rat& cutoff) {
    const Rat borrow = 1 - w;
    std::vector<std::pair<Rat, Rat>> atoms = proj.atoms;
    std::sort(atoms.begin(), atoms.end());

    // knots inside (-inf, cutoff) where (1+r)(1-w) crosses a payoff atom
    std::vector<Rat> knots;
    for (const auto& [x, p] : atoms) {
        Rat k = x / borrow - 1;
        if (k < cutoff) knots.push_back(std::move(k));
    }
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());

    PwAffine out;
    Ext left = Ext::neg_inf();
    auto piece_at = [&](const Rat& probe) {
        // E[min(X, t)] with t = (1+r)(1-w); below-threshold atoms pay x, the
        // rest pay t
        Rat fixed = 0, weight = 0;
        const Rat t = (1 + probe) * borrow;
        for (const auto& [x, p] : atoms) {
            if (x <= t)
                fixed += p * x;
            else
                weight += p;
        }
        return Affine{fixed + weight * borrow, weight * borrow};
    };
    for (const auto& k : knots) {
        // probe strictly inside (left, k)
        const Rat probe = left.finite() ? (left.value + k) / 2 : k - 1;
        out.pieces.push_back({Iv{left, Ext(k), false, false}, piece_at(probe)});
        left = Ext(k);
    }
    const Rat probe = left.finite() ? (left.value + cutoff) / 2 : cutoff - 1;
    out.pieces.push_back({Iv{left, Ext(cutoff), left.finite(), true}, piece_at(probe)});
    // make knot points themselves evaluable (curves touch at knots)
    for (size_t i = 0; i + 1 < out.pieces.size(); ++i) out.pieces[i].dom.hi_closed = true;
    return out;
}

void require_full_capacity(const std::string& kind, const SupplierClass& cls) {
    if (cls.v != cls.h1)
        throw std::invalid_argument(kind + " kind requires supplier capacity v == h1");
}

}  // namespace

MarketKind trading_kind() {
    MarketKind k;
    k.name = "trading";
    k.supplier_actions = {"produce", "not_produce"};
    k.demander_actions = {"consume", "not_consume"};
    k.demander_segments_allowed = true;
    k.supplier_strategy = [](const SupplierClass& cls, const Rat& coord) {
        return SupplierStrategy{coord, cls.h1, false};
    };
    k.supplier_unit_payoff = [](const SupplierClass&) {
        return Affine{0, -1};  // -rho per unit supplied
    };
    k.demander_strategy = [](const PopulationSpec&, const DemanderClass& cls, const Rat& coord) {
        return DemanderStrategy{coord, cls.eta1, false};
    };
    k.demander_unit_revenue = [](const PopulationSpec& spec, const DemanderClass& cls) {
        const Rat coord = std::get<Rat>(cls.eta0);
        const auto cut = trading_kind().demander_strategy(spec, cls, coord).cutoff;
        PwAffine out;
        out.pieces.push_back({Iv{Ext::neg_inf(), Ext(cut), false, true}, Affine{0, 1}});
        return out;
    };
    k.check_supplier = [](const PopulationSpec&, const SupplierClass& cls) {
        require_full_capacity("trading", cls);
    };
    k.check_demander = [](const PopulationSpec&, const DemanderClass& cls) {
        if (!std::holds_alternative<Rat>(cls.eta0))
            throw std::invalid_argument("trading kind expects scalar demander valuations");
    };
    return k;
}

MarketKind credit_kind() {
    MarketKind k;
    k.name = "credit";
    k.supplier_actions = {"deposit", "not_deposit"};
    k.demander_actions = {"invest", "not_invest"};
    k.demander_segments_allowed = false;
    k.supplier_strategy = [](const SupplierClass& cls, const Rat& coord) {
        return SupplierStrategy{coord, cls.h1, false};
    };
    k.supplier_unit_payoff = [](const SupplierClass&) {
        return Affine{-1, -1};  // repay principal plus interest
    };
    k.demander_strategy = [](const PopulationSpec& spec, const DemanderClass& cls, const Rat&) {
        const auto& e = credit_eta0(cls);
        const Rat cut = credit_cutoff(spec.project(e.project), e.wealth_fraction);
        return DemanderStrategy{cut, (1 - e.wealth_fraction) * cls.eta1, false};
    };
    k.demander_unit_revenue = [](const PopulationSpec& spec, const DemanderClass& cls) {
        const auto& e = credit_eta0(cls);
        const auto& proj = spec.project(e.project);
        return credit_revenue(proj, e.wealth_fraction, credit_cutoff(proj, e.wealth_fraction));
    };
    k.check_supplier = [](const PopulationSpec&, const SupplierClass& cls) {
        require_full_capacity("credit", cls);
    };
    k.check_demander = [](const PopulationSpec& spec, const DemanderClass& cls) {
        const auto& e = credit_eta0(cls);
        if (e.wealth_fraction <= 0 || e.wealth_fraction >= 1)
            throw std::invalid_argument("credit wealth fraction must lie in (0,1)");
        spec.project(e.project);  // bounds check
    };
    return k;
}

PopulationSpec trading_example_spec(const Rat& capacity) {
    PopulationSpec spec;
    spec.kind = trading_kind();
    spec.suppliers.push_back(
        {WeightSpec::segment(0, Rat(5, 4), Rat(4, 5)), Rat(0), capacity, capacity});
    spec.demanders.push_back({WeightSpec::atom(Rat(3, 5)), Eta0(Rat(1)), Rat(1)});
    spec.demanders.push_back({WeightSpec::atom(Rat(2, 5)), Eta0(Rat(2)), Rat(1)});
    spec.validate_structure();
    return spec;
}

PopulationSpec credit_basic_spec(const Rat& supply_scale) {
    PopulationSpec spec;
    spec.kind = credit_kind();
    spec.projects.push_back({{{Rat(0), Rat(3, 5)}, {Rat(10), Rat(2, 5)}}});
    spec.projects.push_back({{{Rat(0), Rat(4, 5)}, {Rat(20), Rat(1, 5)}}});
    spec.demanders.push_back(
        {WeightSpec::atom(Rat(19, 20)), Eta0(CreditDemander{Rat(1, 2), 0}), Rat(2)});
    spec.demanders.push_back(
        {WeightSpec::atom(Rat(1, 20)), Eta0(CreditDemander{Rat(1, 2), 1}), Rat(2)});
    spec.suppliers.push_back(
        {WeightSpec::segment(0, Rat(2, 3), Rat(3, 2)), Rat(0), supply_scale, supply_scale});
    spec.validate_structure();
    return spec;
}

PopulationSpec credit_infinite_spec(const Rat& supply_scale, int truncate_at) {
    if (truncate_at < 1) throw std::invalid_argument("truncation index must be >= 1");
    PopulationSpec spec;
    spec.kind = credit_kind();
    Rat half_pow = 1;  // 2^-i
    for (int i = 1; i <= truncate_at; ++i) {
        half_pow /= 2;
        const Rat payoff = Rat(3) * boost::multiprecision::pow(BigInt(2), i);
        spec.projects.push_back({{{Rat(0), 1 - half_pow}, {payoff, half_pow}}});
        spec.demanders.push_back(
            {WeightSpec::atom(half_pow), Eta0(CreditDemander{Rat(1, 2), i - 1}), Rat(2)});
    }
    spec.suppliers.push_back(
        {WeightSpec::segment(0, Rat(2, 3), Rat(3, 2)), Rat(0), supply_scale, supply_scale});
    spec.truncation = TruncationNote{
        truncate_at, "type i in N: mass 2^-i, project {0, 3*2^i} with success probability 2^-i"};
    spec.validate_structure();
    return spec;
}

namespace {

std::map<std::string, Rat> parse_fixture_args(const std::string& args) {
    std::map<std::string, Rat> out;
    std::stringstream ss(args);
    std::string kv;
    while (std::getline(ss, kv, '&')) {
        auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("bad fixture argument: " + kv);
        out[kv.substr(0, eq)] = parse_rat(kv.substr(eq + 1));
    }
    return out;
}

}  // namespace

ExampleFixture fixture(const std::string& name) {
    std::string base = name, args;
    if (auto q = name.find('?'); q != std::string::npos) {
        base = name.substr(0, q);
        args = name.substr(q + 1);
    }
    auto kv = parse_fixture_args(args);
    auto arg_or = [&](const std::string& key, const Rat& fallback) {
        auto it = kv.find(key);
        return it == kv.end() ? fallback : it->second;
    };

    if (base == "trading") {
        const Rat v = arg_or("v", Rat(43, 100));
        ExpectedOutcome exp;
        exp.provenance = "paper-qualitative";
        if (v == Rat(4, 5))
            exp.summary = "no equilibrium";
        else if (v == Rat(43, 100))
            exp.summary = "unique equilibrium, no rationing";
        else if (v == Rat(6, 25))
            exp.summary = "unique equilibrium with rationing";
        else {
            exp.summary = "capacity sweep point of the worked trading family";
            exp.provenance = "derived";
        }
        return {name, trading_example_spec(v), exp};
    }
    if (base == "credit_basic") {
        const Rat v = arg_or("v", Rat(1));
        return {name, credit_basic_spec(v),
                {"equilibrium exists at every supply scale", "paper-qualitative"}};
    }
    if (base == "credit_infinite") {
        const Rat v = arg_or("v", Rat(1));
        const Rat kr = arg_or("k", Rat(20));
        const int K = kr.convert_to<int>();
        ExpectedOutcome exp;
        exp.provenance = "paper-qualitative";
        if (v >= 1)
            exp.summary =
                "unique equilibrium, single demand price; paper claims the price is 4 with "
                "mass 1 (compared under verify-or-document)";
        else
            exp.summary = "uncountably many zero-profit equilibria, up to K demand prices";
        return {name, credit_infinite_spec(v, K), exp};
    }
    throw std::invalid_argument("unknown fixture: " + name);
}

std::vector<std::string> fixture_catalog() {
    return {
        "trading?v=0.8        no equilibrium                      [paper-qualitative]",
        "trading?v=0.43       unique equilibrium, no rationing    [paper-qualitative]",
        "trading?v=0.24       unique equilibrium with rationing   [paper-qualitative]",
        "credit_basic?v=...   equilibrium at every supply scale   [paper-qualitative]",
        "credit_infinite?v=...&k=...  single demand price for v>=1 (paper claims price 4, "
        "checked under verify-or-document); countably many prices for v<1  [paper-qualitative]",
    };
}

}  // namespace nmkt
