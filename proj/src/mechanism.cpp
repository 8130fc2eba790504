#include "nmkt/mechanism.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace nmkt {

namespace {

constexpr size_t kSubsetSumCap = 1 << 16;

/// Deduplicated subset sums, ascending. Throws when the distinct-sum count
/// explodes; tie volumes collapse, so realistic populations stay tiny.
std::vector<Rat> subset_sums(const std::vector<Rat>& values) {
    std::set<Rat> sums{Rat(0)};
    for (const auto& v : values) {
        std::set<Rat> next = sums;
        for (const auto& s : sums) next.insert(s + v);
        if (next.size() > kSubsetSumCap)
            throw std::runtime_error("weak-winner subset sums exceed the enumeration cap");
        sums = std::move(next);
    }
    return {sums.begin(), sums.end()};
}

/// Largest subset sum of `values` that is <= cap (the resale capacity rule).
Rat max_subset_sum_below(const std::vector<Rat>& values, const Rat& cap) {
    std::set<Rat> sums{Rat(0)};
    for (const auto& v : values) {
        std::set<Rat> next = sums;
        for (const auto& s : sums) {
            const Rat t = s + v;
            if (t <= cap) next.insert(t);
        }
        if (next.size() > kSubsetSumCap)
            throw std::runtime_error("resale subset sums exceed the enumeration cap");
        sums = std::move(next);
    }
    return *sums.rbegin();
}

struct TraceWriter {
    std::ostringstream out;
    bool enabled = false;

    void event(const std::string& t, const std::string& stage, const std::string& payload) {
        if (!enabled) return;
        out << "{\"t\":" << t << ",\"stage\":\"" << stage << "\",\"payload\":" << payload
            << "}\n";
    }
};

std::string contracts_json(const std::vector<Contract>& cs) {
    std::ostringstream out;
    out << "[";
    for (size_t i = 0; i < cs.size(); ++i) {
        if (i) out << ",";
        out << "[\"" << rat_str(cs[i].volume) << "\",\"" << rat_str(cs[i].price) << "\","
            << cs[i].party << "," << cs[i].mediator << "]";
    }
    out << "]";
    return out.str();
}

/// Order-book clearing shared by the bulk auction and the resale rounds.
/// Free demanders are grouped by identical (bid price, bid volume) so a
/// uniform draw over the feasible set costs O(groups) instead of O(agents).
/// Demanders already under contract can be poached only when allow_poaching
/// and their current price strictly exceeds the order price; poaching
/// replaces the old contract.
class ClearingState {
  public:
    std::vector<Contract> orders;  // (volume, price, -1, mediator)

    ClearingState(std::vector<Contract>& demand, std::vector<int>& holder,
                  const FiniteMarketInstance& inst, bool allow_poaching)
        : demand_(demand), holder_(holder), inst_(inst), poaching_(allow_poaching) {
        std::map<std::pair<Rat, Rat>, size_t> key_to_group;
        for (size_t d = 0; d < inst.demanders.size(); ++d) {
            if (holder_[d] >= 0) continue;
            const auto key = std::make_pair(inst.demanders[d].bid_price,
                                            inst.demanders[d].bid_volume);
            auto [it, fresh] = key_to_group.try_emplace(key, groups_.size());
            if (fresh) groups_.push_back({key.first, key.second, {}});
            groups_[it->second].ids.push_back(static_cast<int>(d));
        }
        slot_.assign(inst.demanders.size(), 0);
        group_of_.assign(inst.demanders.size(), SIZE_MAX);
        for (size_t g = 0; g < groups_.size(); ++g)
            for (size_t i = 0; i < groups_[g].ids.size(); ++i) {
                slot_[groups_[g].ids[i]] = i;
                group_of_[groups_[g].ids[i]] = g;
            }
    }

    void run(Rng& rng, TraceWriter& trace, const std::string& t_label) {
        while (!orders.empty()) {
            // uniform among minimum-price orders
            size_t min_count = 0;
            const Rat* min_price = nullptr;
            for (const auto& o : orders)
                if (!min_price || o.price < *min_price) {
                    min_price = &o.price;
                    min_count = 1;
                } else if (o.price == *min_price) {
                    ++min_count;
                }
            size_t pick = rng.below(min_count);
            size_t oi = 0;
            for (size_t i = 0; i < orders.size(); ++i) {
                if (orders[i].price == *min_price) {
                    if (pick == 0) {
                        oi = i;
                        break;
                    }
                    --pick;
                }
            }
            Contract& order = orders[oi];

            size_t free_total = 0;
            for (const auto& g : groups_)
                if (g.price >= order.price && g.volume <= order.volume)
                    free_total += g.ids.size();
            std::vector<int> poachable;
            if (poaching_) {
                for (const auto& z : demand_)
                    if (z.volume <= order.volume && z.price > order.price)
                        poachable.push_back(z.party);
            }
            const size_t total = free_total + poachable.size();
            if (total == 0) {
                trace.event(t_label, "order_removed",
                            "{\"mediator\":" + std::to_string(order.mediator) +
                                ",\"residue\":\"" + rat_str(order.volume) + "\"}");
                orders.erase(orders.begin() + oi);
                continue;
            }
            size_t k = rng.below(total);
            int d;
            Rat volume;
            if (k < free_total) {
                size_t gi = 0;
                for (; gi < groups_.size(); ++gi) {
                    const auto& g = groups_[gi];
                    if (!(g.price >= order.price && g.volume <= order.volume)) continue;
                    if (k < g.ids.size()) break;
                    k -= g.ids.size();
                }
                d = groups_[gi].ids[k];
                volume = groups_[gi].volume;
                remove_free(d);
            } else {
                d = poachable[k - free_total];
                // replace the old contract, keeping its volume
                const size_t at = holder_[d];
                volume = demand_[at].volume;
                demand_[at] = demand_.back();
                holder_[demand_[at].party] = static_cast<int>(at);
                demand_.pop_back();
                holder_[d] = -1;
            }
            holder_[d] = static_cast<int>(demand_.size());
            demand_.push_back({volume, order.price, d, order.mediator});
            order.volume -= volume;
            trace.event(t_label, "match",
                        "{\"demander\":" + std::to_string(d) + ",\"mediator\":" +
                            std::to_string(order.mediator) + ",\"price\":\"" +
                            rat_str(order.price) + "\",\"volume\":\"" + rat_str(volume) +
                            "\"}");
        }
    }

  private:
    struct Group {
        Rat price, volume;
        std::vector<int> ids;
    };

    void remove_free(int d) {
        const size_t g = group_of_[d];
        auto& ids = groups_[g].ids;
        const size_t at = slot_[d];
        ids[at] = ids.back();
        slot_[ids[at]] = at;
        ids.pop_back();
        group_of_[d] = SIZE_MAX;
    }

    std::vector<Group> groups_;
    std::vector<size_t> slot_, group_of_;
    std::vector<Contract>& demand_;
    std::vector<int>& holder_;
    const FiniteMarketInstance& inst_;
    bool poaching_;
};

}  // namespace

MediatorStrategy passive_mediator() {
    MediatorStrategy s;
    s.no_bid = true;
    s.counter_supply_price = 0;
    s.residual_volume_bid = [](const Rat&, const std::vector<Rat>& combos) {
        return combos.empty() ? Rat(0) : combos.front();
    };
    s.counter_demand_price = 0;
    s.resale_bid = [](int, const Rat&) { return std::pair<Rat, Rat>{Rat(0), Rat(0)}; };
    return s;
}

RunResult run_market(const FiniteMarketInstance& inst,
                     const std::vector<MediatorStrategy>& strategies,
                     const MechanismConfig& config) {
    if (static_cast<int>(strategies.size()) != inst.n_mediators)
        throw std::invalid_argument("one strategy per mediator required");
    if (config.mu_bar < 0 || config.mu_bar > 1)
        throw std::invalid_argument("capacity threshold must lie in [0,1]");

    RunResult result;
    TraceWriter trace;
    trace.enabled = config.want_trace;
    Rng rng(config.seed);

    const int n_m = inst.n_mediators;
    trace.event("0", "supply_introduction",
                "{\"suppliers\":" + std::to_string(inst.suppliers.size()) + "}");
    trace.event("1", "demand_introduction",
                "{\"demanders\":" + std::to_string(inst.demanders.size()) + "}");

    // t = 2..3: supply price auction
    const Rat* rho_bar = nullptr;
    for (const auto& s : strategies)
        if (!s.no_bid && (!rho_bar || s.counter_supply_price > *rho_bar))
            rho_bar = &s.counter_supply_price;
    if (!rho_bar) {
        trace.event("3", "supply_price_auction", "{\"rho_bar\":\"-inf\"}");
        result.trace = trace.out.str();
        return result;  // finalized empty
    }
    std::vector<int> winning_mediators;  // intermediately winning set
    for (int m = 0; m < n_m; ++m)
        if (!strategies[m].no_bid && strategies[m].counter_supply_price == *rho_bar)
            winning_mediators.push_back(m);

    std::vector<int> strict_suppliers, weak_suppliers;
    Rat strict_volume = 0;
    for (size_t s = 0; s < inst.suppliers.size(); ++s) {
        if (inst.suppliers[s].bid_price < *rho_bar) {
            strict_suppliers.push_back(static_cast<int>(s));
            strict_volume += inst.suppliers[s].bid_volume;
        } else if (inst.suppliers[s].bid_price == *rho_bar) {
            weak_suppliers.push_back(static_cast<int>(s));
        }
    }
    std::vector<Rat> weak_volumes;
    for (int s : weak_suppliers) weak_volumes.push_back(inst.suppliers[s].bid_volume);
    const std::vector<Rat> combos = subset_sums(weak_volumes);
    trace.event("3", "supply_price_auction",
                "{\"rho_bar\":\"" + rat_str(*rho_bar) +
                    "\",\"strict_volume\":\"" + rat_str(strict_volume) +
                    "\",\"weak_count\":" + std::to_string(weak_suppliers.size()) + "}");

    // t = 4: residual-volume bids
    Rat winning_residual = 0;
    std::vector<int> residual_winners;
    for (int m : winning_mediators) {
        Rat bid = strategies[m].residual_volume_bid
                      ? strategies[m].residual_volume_bid(strict_volume, combos)
                      : Rat(0);
        if (!std::binary_search(combos.begin(), combos.end(), bid))
            throw std::invalid_argument("residual-volume bid outside the disclosed combinations");
        if (residual_winners.empty() || bid > winning_residual) {
            winning_residual = bid;
            residual_winners.clear();
        }
        if (bid == winning_residual) residual_winners.push_back(m);
    }
    trace.event("4", "supply_residual_bidding",
                "{\"target\":\"" + rat_str(winning_residual) + "\"}");

    // t = 5: residual auction, contract assignment
    std::vector<int> order = weak_suppliers;
    for (size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[rng.below(i)]);
    std::vector<int> selected_weak;
    {
        Rat acc = 0;
        for (int s : order) {
            if (acc >= winning_residual) break;
            selected_weak.push_back(s);
            acc += inst.suppliers[s].bid_volume;
        }
        if (winning_residual == 0) selected_weak.clear();
    }
    MarketTransaction tx;
    for (int s : strict_suppliers) {
        const int m = winning_mediators[rng.below(winning_mediators.size())];
        tx.supply.push_back({inst.suppliers[s].bid_volume, *rho_bar, s, m});
    }
    for (int s : selected_weak) {
        const int m = residual_winners[rng.below(residual_winners.size())];
        tx.supply.push_back({inst.suppliers[s].bid_volume, *rho_bar, s, m});
    }
    trace.event("5", "supply_residual_auction", contracts_json(tx.supply));

    std::vector<Rat> quota(n_m, Rat(0));
    for (const auto& c : tx.supply) quota[c.mediator] += c.volume;

    // t = 6..7: demand bulk auction
    trace.event("6", "demand_bulk_bidding", "{}");
    std::vector<int> holder(inst.demanders.size(), -1);
    {
        ClearingState clearing(tx.demand, holder, inst, false);
        for (int m = 0; m < n_m; ++m)
            clearing.orders.push_back({quota[m], strategies[m].counter_demand_price, -1, m});
        clearing.run(rng, trace, "7");
    }
    trace.event("7", "demand_bulk_auction", contracts_json(tx.demand));

    // resale capacity per mediator: the largest contract bundle within the
    // unsold quota
    auto resale_capacity = [&]() {
        Rat total = 0;
        std::vector<Rat> sold(n_m, Rat(0));
        for (const auto& z : tx.demand) sold[z.mediator] += z.volume;
        for (int m = 0; m < n_m; ++m) {
            std::vector<Rat> own;
            for (const auto& c : tx.supply)
                if (c.mediator == m) own.push_back(c.volume);
            total += max_subset_sum_below(own, quota[m] - sold[m]);
        }
        return total;
    };

    // capacity test on the residual-auction winners
    const Rat fraction = Rat(residual_winners.size(), n_m);
    const bool all_winners = static_cast<int>(residual_winners.size()) == n_m;
    trace.event("8", "capacity_test",
                "{\"fraction\":\"" + rat_str(fraction) + "\",\"threshold\":\"" +
                    rat_str(config.mu_bar) + "\"}");
    if (fraction > config.mu_bar || all_winners) {
        trace.event("8", "finalize", "{}");
        result.tx = std::move(tx);
        result.trace = trace.out.str();
        return result;
    }

    const Rat r0 = resale_capacity();
    std::vector<bool> is_winner(n_m, false);
    for (int m : residual_winners) is_winner[m] = true;

    for (int round = 1; round <= config.max_resale_rounds; ++round) {
        // resale bids from non-winning mediators
        Rat best_volume = 0;
        std::vector<std::pair<Rat, int>> bids;  // (price, mediator) among max-volume bidders
        for (int m = 0; m < n_m; ++m) {
            if (is_winner[m]) continue;
            auto [vol, price] = strategies[m].resale_bid ? strategies[m].resale_bid(round, r0)
                                                         : std::pair<Rat, Rat>{Rat(0), Rat(0)};
            if (vol < 0) vol = 0;
            if (vol > r0) vol = r0;
            if (vol > best_volume) {
                best_volume = vol;
                bids.clear();
            }
            if (vol == best_volume && vol > 0) bids.push_back({price, m});
        }
        trace.event("9", "resale_bidding",
                    "{\"round\":" + std::to_string(round) + ",\"volume\":\"" +
                        rat_str(best_volume) + "\"}");
        if (best_volume == 0) {
            result.tx = std::move(tx);
            result.trace = trace.out.str();
            return result;
        }
        // lexicographic winner: largest volume, lowest price, uniform ties
        const Rat* best_price = nullptr;
        for (const auto& [price, m] : bids)
            if (!best_price || price < *best_price) best_price = &price;
        std::vector<int> tied;
        for (const auto& [price, m] : bids)
            if (price == *best_price) tied.push_back(m);
        const int winner = tied[rng.below(tied.size())];
        const Rat resale_price = *best_price;

        // recontracting: move supply contracts to the winner while the donor
        // stays feasible, until the promised volume is reached
        std::vector<Rat> sold(n_m, Rat(0));
        for (const auto& z : tx.demand) sold[z.mediator] += z.volume;
        Rat moved = 0;
        while (moved < best_volume) {
            std::vector<size_t> movable;
            for (size_t i = 0; i < tx.supply.size(); ++i) {
                const auto& c = tx.supply[i];
                if (c.mediator == winner) continue;
                if (sold[c.mediator] <= quota[c.mediator] - c.volume) movable.push_back(i);
            }
            if (movable.empty()) break;
            const size_t i = movable[rng.below(movable.size())];
            quota[tx.supply[i].mediator] -= tx.supply[i].volume;
            quota[winner] += tx.supply[i].volume;
            moved += tx.supply[i].volume;
            tx.supply[i].mediator = winner;
        }
        // resale order book with poaching
        {
            ClearingState clearing(tx.demand, holder, inst, true);
            clearing.orders.push_back({moved, resale_price, -1, winner});
            clearing.run(rng, trace, "9");
        }
        trace.event("9", "demand_resale_auction",
                    "{\"round\":" + std::to_string(round) + ",\"winner\":" +
                        std::to_string(winner) + ",\"moved\":\"" + rat_str(moved) + "\"}");
        if (round == config.max_resale_rounds) result.truncated = true;
    }
    result.tx = std::move(tx);
    result.trace = trace.out.str();
    return result;
}

bool check_feasible(const FiniteMarketInstance& inst, const MarketTransaction& tx) {
    // single contract per non-mediator
    std::vector<int> supplier_count(inst.suppliers.size(), 0);
    std::vector<int> demander_count(inst.demanders.size(), 0);
    for (const auto& c : tx.supply) {
        if (c.party < 0 || c.party >= static_cast<int>(inst.suppliers.size())) return false;
        if (c.mediator < 0 || c.mediator >= inst.n_mediators) return false;
        if (c.volume < 0) return false;
        if (++supplier_count[c.party] > 1) return false;
    }
    for (const auto& z : tx.demand) {
        if (z.party < 0 || z.party >= static_cast<int>(inst.demanders.size())) return false;
        if (z.mediator < 0 || z.mediator >= inst.n_mediators) return false;
        if (z.volume < 0) return false;
        if (++demander_count[z.party] > 1) return false;
    }
    // supplier capacity
    std::vector<Rat> supplied(inst.suppliers.size(), Rat(0));
    for (const auto& c : tx.supply) supplied[c.party] += c.volume;
    for (size_t s = 0; s < inst.suppliers.size(); ++s)
        if (supplied[s] > inst.suppliers[s].capacity) return false;
    // mediator conservation
    std::vector<Rat> inflow(inst.n_mediators, Rat(0)), outflow(inst.n_mediators, Rat(0));
    for (const auto& c : tx.supply) inflow[c.mediator] += c.volume;
    for (const auto& z : tx.demand) outflow[z.mediator] += z.volume;
    for (int m = 0; m < inst.n_mediators; ++m)
        if (inflow[m] < outflow[m]) return false;
    return true;
}

ReplayReport equilibrium_replay(const PopulationSpec& spec, const EquilibriumCandidate& eq,
                                int n_suppliers, int n_mediators, int n_demanders,
                                int replications, uint64_t seed, const Rat& mu_bar) {
    if (eq.supply.atoms.empty())
        throw std::invalid_argument("equilibrium_replay needs a positive-volume equilibrium");
    ReplayReport report;
    report.replications = replications;
    report.eq_supply_price = eq.supply.atoms.front().first;

    // demand quote assignment proportional to the measure, largest remainder
    std::vector<Rat> quotes(n_mediators);
    {
        const Rat total = eq.demand.total();
        std::vector<std::pair<Rat, Rat>> shares;  // (price, exact count)
        for (const auto& [price, mass] : eq.demand.atoms)
            shares.push_back({price, Rat(n_mediators) * mass / total});
        int assigned = 0;
        std::vector<std::pair<Rat, Rat>> remainders;  // (frac, price)
        std::vector<std::pair<Rat, int>> counts;
        for (auto& [price, share] : shares) {
            const BigInt whole = boost::multiprecision::numerator(share) /
                                 boost::multiprecision::denominator(share);
            const int base = whole.convert_to<int>();
            counts.push_back({price, base});
            assigned += base;
            remainders.push_back({share - Rat(whole), price});
        }
        std::sort(remainders.rbegin(), remainders.rend());
        for (int i = 0; assigned < n_mediators && i < static_cast<int>(remainders.size()); ++i) {
            for (auto& [price, count] : counts)
                if (price == remainders[i].second) {
                    ++count;
                    break;
                }
            ++assigned;
        }
        int at = 0;
        for (const auto& [price, count] : counts)
            for (int k = 0; k < count && at < n_mediators; ++k) quotes[at++] = price;
        while (at < n_mediators) quotes[at++] = eq.demand.atoms.front().first;
    }

    const Rat q_target = eq.q;
    Rng root(seed);
    Rat sum_traded = 0;
    for (int rep = 0; rep < replications; ++rep) {
        const uint64_t inst_seed = root.child(2 * rep).next_u64();
        const uint64_t run_seed = root.child(2 * rep + 1).next_u64();
        auto inst = sample_finite_market(spec, n_suppliers, n_mediators, n_demanders, inst_seed);

        std::vector<MediatorStrategy> strategies(n_mediators);
        for (int m = 0; m < n_mediators; ++m) {
            auto& s = strategies[m];
            s.no_bid = false;
            s.counter_supply_price = report.eq_supply_price;
            s.residual_volume_bid = [q_target](const Rat&, const std::vector<Rat>& combos) {
                // largest disclosed combination within the residual ratio
                const Rat target = combos.empty() ? Rat(0) : q_target * combos.back();
                Rat best = 0;
                for (const auto& c : combos)
                    if (c <= target) best = c;
                return best;
            };
            s.counter_demand_price = quotes[m];
            s.resale_bid = [](int, const Rat&) { return std::pair<Rat, Rat>{Rat(0), Rat(0)}; };
        }
        MechanismConfig config;
        config.mu_bar = mu_bar;
        config.seed = run_seed;
        auto run = run_market(inst, strategies, config);
        report.any_truncated = report.any_truncated || run.truncated;

        Rat traded = 0;
        for (const auto& z : run.tx.demand) {
            traded += z.volume;
            report.demand_price_volume[z.price] += z.volume / (Rat(n_demanders) * replications);
        }
        for (const auto& c : run.tx.supply)
            if (c.price != report.eq_supply_price) report.supply_price_degenerate = false;
        const Rat per_capita = traded / n_demanders;
        report.traded_per_capita.push_back(per_capita);
        sum_traded += per_capita;
    }
    report.mean_traded = sum_traded / replications;
    double var = 0;
    for (const auto& t : report.traded_per_capita) {
        const double d = rat_double(t - report.mean_traded);
        var += d * d;
    }
    report.stddev_traded = replications > 1 ? std::sqrt(var / (replications - 1)) : 0.0;
    return report;
}

}  // namespace nmkt
