#pragma once

// JSON dumps. Complex numbers are [re, im] pairs, matrices are row-major nested arrays.

#include "wbcal/model.hpp"

#include <json.hpp>
#include <string>

namespace wbcal::io {

nlohmann::json to_json(const cvec& v);
nlohmann::json to_json(const rvec& v);
nlohmann::json to_json(const cmat& m);
cvec cvec_from_json(const nlohmann::json& j);
rvec rvec_from_json(const nlohmann::json& j);
cmat cmat_from_json(const nlohmann::json& j);

nlohmann::json to_json(const MeasurementSet& ms);
MeasurementSet measurements_from_json(const nlohmann::json& j);

nlohmann::json to_json(const EstimatorState& st);
EstimatorState state_from_json(const nlohmann::json& j);

void save_measurements(const MeasurementSet& ms, const std::string& path);
MeasurementSet load_measurements(const std::string& path);

void save_checkpoint(const EstimatorState& st, const std::string& path);
EstimatorState load_checkpoint(const std::string& path);

}  // namespace wbcal::io
