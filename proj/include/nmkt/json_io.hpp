#pragma once

#include <string>

#include "nmkt/population.hpp"

namespace nmkt {

struct ParseError : std::runtime_error {
    std::string field_path;
    ParseError(std::string path, const std::string& what)
        : std::runtime_error(path + ": " + what), field_path(std::move(path)) {}
};

/// Parses the population spec schema. Rationals accept "p/q" and decimal
/// strings; either form round-trips exactly.
PopulationSpec parse_population_spec(const std::string& json_text);

std::string population_spec_json(const PopulationSpec& spec);

}  // namespace nmkt
