#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "qfield/kernel.hpp"
#include "qfield/params.hpp"
#include "qfield/verify.hpp"

namespace qfield {

inline constexpr int kSchemaVersion = 1;

// Non-finite numbers become null.
nlohmann::json number(double v);

nlohmann::json to_json(const ModelParams& p);
nlohmann::json to_json(const KernelEvaluation& e);
nlohmann::json to_json(const Residual& r);
nlohmann::json to_json(const CorrelationResidual& c);
nlohmann::json to_json(const KsResult& k);
nlohmann::json to_json(const VerifyReport& r);
nlohmann::json to_json(const CounterexampleReport& r);

// Two-space indented, trailing newline.
std::string dump(const nlohmann::json& j);

// Shortest decimal form that round-trips; "nan"/"inf"/"-inf" otherwise.
std::string format_double(double v);

}  // namespace qfield
