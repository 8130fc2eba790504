#pragma once

#include <map>
#include <string>

#include "nmkt/population.hpp"

namespace nmkt {

/// Commodity market: producers sell a physical good to retails who resell to
/// consumers. Cutoffs are the cost/value parameters themselves and both unit
/// values are the contract price.
MarketKind trading_kind();

/// Credit market: depositors fund banks that lend to limited-liability
/// entrepreneurs. Supply cost per unit is principal plus interest; demand
/// revenue is the expected repayment, enumerated exactly over project atoms.
MarketKind credit_kind();

struct ExpectedOutcome {
    std::string summary;     // documented expected result
    std::string provenance;  // "paper", "paper-qualitative", or "derived"
};

struct ExampleFixture {
    std::string name;
    PopulationSpec spec;
    ExpectedOutcome expected;
};

/// Built-in examples, addressable as "trading?v=0.43", "credit_basic?v=1",
/// "credit_infinite?v=0.6&k=20". Unknown names throw std::invalid_argument.
ExampleFixture fixture(const std::string& name);

/// Fixture family constructors.
PopulationSpec trading_example_spec(const Rat& capacity);
PopulationSpec credit_basic_spec(const Rat& supply_scale);
PopulationSpec credit_infinite_spec(const Rat& supply_scale, int truncate_at = 20);

std::vector<std::string> fixture_catalog();

}  // namespace nmkt
