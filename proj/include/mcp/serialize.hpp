#pragma once

#include <json.hpp>

#include "mcp/infotheory.hpp"
#include "mcp/power.hpp"
#include "mcp/precoder.hpp"
#include "mcp/types.hpp"

namespace mcp {

/// Complex numbers are [re, im]; matrices are row-major arrays of those with
/// explicit rows/cols.
nlohmann::json complex_to_json(cd z);
nlohmann::json matrix_to_json(const CMatrix& m);
nlohmann::json vector_to_json(const RVector& v);
CMatrix matrix_from_json(const nlohmann::json& j);

nlohmann::json to_json(const PowerSolution& s);
nlohmann::json to_json(const PrecoderMatrix& p);
nlohmann::json to_json(const TransmitWeights& w);
nlohmann::json to_json(const HighSnrResult& r);
nlohmann::json to_json(const Algorithm2Result& r);
nlohmann::json to_json(const MmseReport& r);

PrecoderMatrix precoder_from_json(const nlohmann::json& j);

}  // namespace mcp
