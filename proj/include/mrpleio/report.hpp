#pragma once

#include "json.hpp"

#include "mrpleio/estimators.hpp"
#include "mrpleio/inference.hpp"
#include "mrpleio/regularize.hpp"
#include "mrpleio/simulate.hpp"

namespace mrpleio {

nlohmann::json to_json(const CausalEstimate& est);
nlohmann::json to_json(const RegularizationFit& fit);
nlohmann::json to_json(const BalanceDiagnostic& diag);
nlohmann::json to_json(const ScenarioConfig& cfg);
nlohmann::json to_json(const SimulationReport& report);

}  // namespace mrpleio
