#include "mcp/serialize.hpp"

#include "mcp/error.hpp"

namespace mcp {

using nlohmann::json;

json complex_to_json(cd z) { return json::array({z.real(), z.imag()}); }

json matrix_to_json(const CMatrix& m) {
  json data = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(complex_to_json(m(i, j)));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

json vector_to_json(const RVector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

CMatrix matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const json& data = j.at("data");
  if (rows < 0 || cols < 0 || static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw Error(ErrorCode::DimensionMismatch, "matrix data does not match rows*cols");
  }
  CMatrix m(rows, cols);
  for (Eigen::Index k = 0; k < rows * cols; ++k) {
    const json& e = data[static_cast<std::size_t>(k)];
    m(k / cols, k % cols) = e.is_array() ? cd(e.at(0).get<double>(), e.at(1).get<double>()) : cd(e.get<double>(), 0.0);
  }
  return m;
}

json to_json(const PowerSolution& s) {
  json trace = json::array();
  for (const auto& it : s.trace) {
    trace.push_back({{"k", it.k}, {"powers", vector_to_json(it.powers)}, {"mi_bits", nats_to_bits(it.mi_nats)}});
  }
  return {{"powers", vector_to_json(s.powers)},
          {"multipliers", vector_to_json(s.multipliers)},
          {"iterations", s.iterations},
          {"residual", s.residual},
          {"active_caps", s.active_caps},
          {"converged", s.converged},
          {"mi_bits", nats_to_bits(s.mi_nats)},
          {"trace", trace}};
}

json to_json(const PrecoderMatrix& p) {
  json j = matrix_to_json(p.p);
  j["trace_budget"] = p.trace_budget;
  j["trace"] = p.power();
  return j;
}

PrecoderMatrix precoder_from_json(const json& j) {
  PrecoderMatrix p;
  p.p = matrix_from_json(j);
  p.trace_budget = j.contains("trace_budget") ? j.at("trace_budget").get<double>() : p.power();
  return p;
}

json to_json(const TransmitWeights& w) {
  return {{"radiated", matrix_to_json(w.radiated)},
          {"printed", matrix_to_json(w.printed)},
          {"cross_x1_to_bs2", complex_to_json(w.cross_x1_to_bs2)},
          {"cross_x2_to_bs1", complex_to_json(w.cross_x2_to_bs1)},
          {"nu", matrix_to_json(w.nu)}};
}

json to_json(const HighSnrResult& r) {
  return {{"precoder", to_json(r.p)},
          {"d_min", r.dmin},
          {"bound_bits", nats_to_bits(r.bound)},
          {"best_restart", r.best_restart},
          {"iterations", r.iterations},
          {"max_trace_deviation", r.max_trace_deviation},
          {"improved", r.improved}};
}

json to_json(const Algorithm2Result& r) {
  json trace = json::array();
  for (const auto& it : r.trace) {
    trace.push_back({{"k", it.k}, {"mi_bits", nats_to_bits(it.mi_nats)}, {"trace", it.trace}});
  }
  return {{"precoder", to_json(r.p)},
          {"weights", to_json(r.weights)},
          {"iterations", r.iterations},
          {"converged", r.converged},
          {"mi_bits", nats_to_bits(r.mi_nats)},
          {"mi_std_error_bits", nats_to_bits(r.mi_std_error)},
          {"trace", trace}};
}

json to_json(const MmseReport& r) {
  return {{"e", matrix_to_json(r.e)},
          {"per_user_mmse", vector_to_json(r.per_user_mmse)},
          {"method", to_string(r.method)},
          {"samples_or_nodes", r.samples_or_nodes}};
}

}  // namespace mcp
