#pragma once

#include <functional>
#include <map>

#include "nmkt/solver.hpp"

namespace nmkt {

struct Contract {
    Rat volume;
    Rat price;
    int party = -1;     // supplier or demander index, per list
    int mediator = -1;

    friend bool operator==(const Contract&, const Contract&) = default;
};

struct MarketTransaction {
    std::vector<Contract> supply;
    std::vector<Contract> demand;
};

struct MechanismConfig {
    Rat mu_bar = Rat(1, 2);     // capacity threshold on the counting fraction
    int max_resale_rounds = 64;
    uint64_t seed = 0;
    bool want_trace = false;
};

/// Bid rule of one mediator across the stages. Suppliers and demanders bid
/// their dominant strategies from the sampled instance.
struct MediatorStrategy {
    bool no_bid = false;       // counter-supply-price of -inf
    Rat counter_supply_price;  // rho-tilde
    /// Picks the residual-volume target from the disclosed strict volume and
    /// the weak subset-sum combinations (ascending). Must return a member.
    std::function<Rat(const Rat& strict_volume, const std::vector<Rat>& weak_combos)>
        residual_volume_bid;
    Rat counter_demand_price;  // r-tilde
    /// Resale bid per round: (volume in [0, cap], price). Zero volume ends
    /// the resale phase when every eligible mediator bids zero.
    std::function<std::pair<Rat, Rat>(int round, const Rat& cap)> resale_bid;
};

MediatorStrategy passive_mediator();

struct RunResult {
    MarketTransaction tx;
    bool truncated = false;  // resale round cap hit
    std::string trace;       // newline-delimited JSON stage events
};

/// Executes the mechanism stages end to end, deterministic given the seed.
RunResult run_market(const FiniteMarketInstance& inst,
                     const std::vector<MediatorStrategy>& strategies,
                     const MechanismConfig& config);

/// Physical feasibility: single contract per non-mediator, supplier
/// capacities, and mediator inflow >= outflow.
bool check_feasible(const FiniteMarketInstance& inst, const MarketTransaction& tx);

struct ReplayReport {
    int replications = 0;
    std::vector<Rat> traded_per_capita;      // per replication
    bool supply_price_degenerate = true;     // all supply contracts at the eq price
    Rat eq_supply_price;
    Rat mean_traded;
    double stddev_traded = 0.0;
    std::map<Rat, Rat> demand_price_volume;  // aggregate per-capita histogram
    bool any_truncated = false;
};

/// Cross-validates a solved equilibrium against the finite mechanism: all
/// mediators bid the equilibrium supply price and quote demand prices
/// proportionally to the demand measure.
ReplayReport equilibrium_replay(const PopulationSpec& spec, const EquilibriumCandidate& eq,
                                int n_suppliers, int n_mediators, int n_demanders,
                                int replications, uint64_t seed,
                                const Rat& mu_bar = Rat(0));

}  // namespace nmkt
