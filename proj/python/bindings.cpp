#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>

#include "mcp/config.hpp"
#include "mcp/coopsim.hpp"
#include "mcp/error.hpp"
#include "mcp/experiments.hpp"
#include "mcp/infotheory.hpp"
#include "mcp/power.hpp"
#include "mcp/precoder.hpp"
#include "mcp/serialize.hpp"

namespace py = pybind11;
using namespace mcp;

namespace {

// Results cross the boundary as plain dicts, through the same JSON the CLI writes.
py::object to_py(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

py::dict mi_dict(const MiEstimate& m) {
  py::dict d;
  d["nats"] = m.nats;
  d["bits"] = m.bits;
  d["std_error"] = m.std_error;
  return d;
}

StepRule step_rule_of(const std::string& s) {
  if (s == "constant") return StepRule::Constant;
  if (s == "diminishing") return StepRule::Diminishing;
  throw Error(ErrorCode::InvalidArgument, "step_rule must be 'constant' or 'diminishing'");
}

UpdateRule update_of(const std::string& s) {
  if (s == "projected_gradient") return UpdateRule::ProjectedGradient;
  if (s == "as_printed") return UpdateRule::AsPrinted;
  throw Error(ErrorCode::InvalidArgument, "update must be 'projected_gradient' or 'as_printed'");
}

Integrator integrator_or_auto(const std::optional<Integrator>& i) { return i ? *i : Integrator::automatic(); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Two-cell cooperative MIMO: mutual information, MMSE, power allocation and precoding";

  py::register_exception<Error>(m, "McpError", PyExc_ValueError);

  py::class_<Constellation>(m, "Constellation")
      .def_static("bpsk", &Constellation::bpsk)
      .def_static("qpsk", &Constellation::qpsk, py::arg("normalize_energy") = false)
      .def_static("gaussian", &Constellation::gaussian)
      .def_static("custom", &Constellation::custom, py::arg("points"), py::arg("priors") = std::vector<double>{},
                  py::arg("normalize_energy") = false)
      .def_static("from_name", &Constellation::from_name, py::arg("name"), py::arg("normalize_energy") = false)
      .def_property_readonly("kind", [](const Constellation& c) { return std::string(to_string(c.kind())); })
      .def_property_readonly("points", &Constellation::points)
      .def_property_readonly("priors", &Constellation::priors)
      .def_property_readonly("energy", &Constellation::energy)
      .def_property_readonly("is_finite", &Constellation::is_finite)
      .def_property_readonly("is_real", &Constellation::is_real)
      .def("__len__", &Constellation::size)
      .def("__repr__", [](const Constellation& c) { return "<Constellation " + std::string(to_string(c.kind())) + ">"; });

  py::class_<Integrator>(m, "Integrator")
      .def_static("gauss_hermite", &Integrator::gauss_hermite, py::arg("nodes") = 32)
      .def_static("monte_carlo", &Integrator::monte_carlo, py::arg("samples"), py::arg("seed"), py::arg("threads") = 1)
      .def_static("automatic", &Integrator::automatic, py::arg("seed") = 1)
      .def_readwrite("nodes", &Integrator::nodes)
      .def_readwrite("samples", &Integrator::samples)
      .def_readwrite("seed", &Integrator::seed)
      .def_readwrite("threads", &Integrator::threads);

  m.def("joint_alphabet", [](const std::vector<Constellation>& users) {
    const JointAlphabet a = enumerate_joint(users);
    return py::make_tuple(a.vectors, a.priors);
  }, py::arg("inputs"), "All joint input vectors and their priors, last user varying fastest.");

  m.def("evaluate", [](const CMatrix& h, double snr, const CMatrix& p, const std::vector<Constellation>& inputs,
                       const std::optional<Integrator>& integ) {
    const InfoMmse r = evaluate_inputs(VirtualChannel(h, snr), p, inputs, integrator_or_auto(integ));
    py::dict d = mi_dict(r.mi);
    d["e"] = r.mmse.e;
    d["per_user_mmse"] = r.mmse.per_user_mmse;
    d["method"] = std::string(to_string(r.mmse.method));
    return d;
  }, py::arg("h"), py::arg("snr"), py::arg("p"), py::arg("inputs"), py::arg("integrator") = py::none(),
        "Mutual information and MMSE matrix of y = sqrt(snr) H P x + n.");

  m.def("mi_gradient", [](const CMatrix& h, double snr, const CMatrix& p, const CMatrix& e) {
    MmseReport r;
    r.e = e;
    return mi_gradient(VirtualChannel(h, snr), p, r);
  }, py::arg("h"), py::arg("snr"), py::arg("p"), py::arg("e"));
  m.attr("REAL_PARAMETER_GRADIENT_FACTOR") = kRealParameterGradientFactor;

  m.def("bpsk_siso_mi", &bpsk_siso_mi, py::arg("snr"), py::arg("nodes") = 128);
  m.def("bpsk_siso_mmse", &bpsk_siso_mmse, py::arg("snr"), py::arg("nodes") = 128);
  m.def("qpsk_siso_mi", &qpsk_siso_mi, py::arg("snr"), py::arg("nodes") = 128);

  m.def("d_min", [](const CMatrix& h, const CMatrix& p, const std::vector<Constellation>& inputs) {
    return d_min(VirtualChannel(h, 1.0), p, enumerate_joint(inputs));
  }, py::arg("h"), py::arg("p"), py::arg("inputs"));

  m.def("highsnr_bound", [](const CMatrix& h, const CMatrix& p, const std::vector<Constellation>& inputs, double snr) {
    return highsnr_bound(VirtualChannel(h, snr), p, enumerate_joint(inputs), snr);
  }, py::arg("h"), py::arg("p"), py::arg("inputs"), py::arg("snr"));

  m.def("optimize_precoder_highsnr", [](const CMatrix& h, const std::vector<Constellation>& inputs, double snr,
                                        double trace_budget, std::size_t restarts, const std::string& field,
                                        std::uint64_t seed, std::size_t threads) {
    HighSnrParams hp;
    hp.snr = snr;
    hp.trace_budget = trace_budget;
    hp.restarts = restarts;
    if (field != "real" && field != "complex") throw Error(ErrorCode::InvalidArgument, "field must be 'real' or 'complex'");
    hp.field = field == "real" ? PrecoderField::Real : PrecoderField::Complex;
    hp.seed = seed;
    hp.threads = threads;
    const HighSnrResult r = optimize_precoder_highsnr(VirtualChannel(h, snr), enumerate_joint(inputs), hp);
    py::dict d = to_py(to_json(r));
    d["p"] = r.p.p;
    return d;
  }, py::arg("h"), py::arg("inputs"), py::arg("snr") = 10.0, py::arg("trace_budget") = 1.0, py::arg("restarts") = 8,
        py::arg("field") = "real", py::arg("seed") = 1, py::arg("threads") = 1);

  m.def("lowsnr_optimal_precoder", [](const CMatrix& h, double snr, double budget) {
    return lowsnr_optimal_precoder(VirtualChannel(h, snr), snr, budget).p;
  }, py::arg("h"), py::arg("snr"), py::arg("trace_budget") = 1.0);

  m.def("algorithm1_solve", [](const CMatrix& h, double snr, const RVector& caps,
                               const std::vector<Constellation>& inputs, double step, const std::string& step_rule,
                               const std::string& update, std::size_t max_iters, double tol,
                               const std::optional<Integrator>& integ) {
    PowerSolveParams p;
    p.step = step;
    p.step_rule = step_rule_of(step_rule);
    p.update = update_of(update);
    p.max_iters = max_iters;
    p.tol = tol;
    p.integrator = integrator_or_auto(integ);
    return to_py(to_json(algorithm1_solve(VirtualChannel(h, snr), caps, inputs, p)));
  }, py::arg("h"), py::arg("snr"), py::arg("caps"), py::arg("inputs"), py::arg("step") = 0.5,
        py::arg("step_rule") = "diminishing", py::arg("update") = "projected_gradient", py::arg("max_iters") = 500,
        py::arg("tol") = 1e-6, py::arg("integrator") = py::none());

  m.def("algorithm2_solve", [](const CMatrix& h, double snr, const CMatrix& p_init,
                               const std::vector<Constellation>& inputs, double step, const std::string& step_rule,
                               std::size_t max_iters, double tol, const std::optional<Integrator>& integ) {
    Algorithm2Params p;
    p.step = step;
    p.step_rule = step_rule_of(step_rule);
    p.max_iters = max_iters;
    p.tol = tol;
    p.integrator = integrator_or_auto(integ);
    const Algorithm2Result r =
        algorithm2_solve(VirtualChannel(h, snr), {p_init, p_init.squaredNorm()}, inputs, p);
    py::dict d = to_py(to_json(r));
    d["p"] = r.p.p;
    return d;
  }, py::arg("h"), py::arg("snr"), py::arg("p_init"), py::arg("inputs"), py::arg("step") = 0.5,
        py::arg("step_rule") = "diminishing", py::arg("max_iters") = 500, py::arg("tol") = 1e-6,
        py::arg("integrator") = py::none());

  m.def("run_uplink_session", [](const CMatrix& h, double snr, const RVector& caps,
                                 const std::vector<Constellation>& inputs, double bandwidth, double threshold,
                                 double resources_bs1, double resources_bs2, std::uint64_t seed,
                                 const std::optional<Integrator>& integ) {
    BackhaulLink link;
    link.bandwidth = bandwidth;
    link.threshold = threshold;
    UplinkSessionParams p;
    p.resources_bs1 = resources_bs1;
    p.resources_bs2 = resources_bs2;
    p.seed = seed;
    p.power.integrator = integrator_or_auto(integ);
    const UplinkOutcome o = run_uplink_session(VirtualChannel(h, snr), caps, inputs, link, p);
    py::dict d;
    d["transcript"] = o.transcript.dump();
    d["congested"] = o.congested;
    d["load"] = o.load;
    d["processor"] = std::string(to_string(o.processor));
    d["solution"] = o.solution ? to_py(to_json(*o.solution)) : py::none();
    return d;
  }, py::arg("h"), py::arg("snr"), py::arg("caps"), py::arg("inputs"), py::arg("bandwidth") = 1000.0,
        py::arg("threshold") = 1.0, py::arg("resources_bs1") = 1.0, py::arg("resources_bs2") = 1.0,
        py::arg("seed") = 1, py::arg("integrator") = py::none());

  m.def("run_downlink_session", [](const CMatrix& h, double snr, const std::vector<Constellation>& inputs,
                                   double trace_budget, double bandwidth, double threshold,
                                   const std::optional<Integrator>& integ) {
    BackhaulLink link;
    link.bandwidth = bandwidth;
    link.threshold = threshold;
    DownlinkSessionParams p;
    p.trace_budget = trace_budget;
    p.solver.integrator = integrator_or_auto(integ);
    const DownlinkOutcome o = run_downlink_session(VirtualChannel(h, snr), inputs, link, p);
    py::dict d;
    d["transcript"] = o.transcript.dump();
    d["congested"] = o.congested;
    d["load"] = o.load;
    d["consistent"] = o.consistent;
    d["result"] = o.result ? to_py(to_json(*o.result)) : py::none();
    return d;
  }, py::arg("h"), py::arg("snr"), py::arg("inputs"), py::arg("trace_budget") = 1.0, py::arg("bandwidth") = 1000.0,
        py::arg("threshold") = 1.0, py::arg("integrator") = py::none());

  m.def("run_command", [](const std::string& command, const std::string& config, const std::string& out_dir,
                          std::optional<std::uint64_t> seed) {
    ExperimentConfig cfg = load_config(config);
    if (seed) cfg.override_seed(*seed);
    CommandOutput out;
    if (command == "mi") out = cmd_mi(cfg, out_dir);
    else if (command == "table2") out = cmd_table2(cfg, out_dir);
    else if (command == "power") out = cmd_power(cfg, out_dir);
    else if (command == "precode") out = cmd_precode(cfg, out_dir);
    else if (command == "sim") out = cmd_sim(cfg, out_dir);
    else if (command == "check") out = cmd_check(cfg, out_dir);
    else throw Error(ErrorCode::InvalidArgument, "unknown command '" + command + "'");
    std::vector<std::string> files;
    for (const auto& f : out.files) files.push_back(f.string());
    return py::make_tuple(out.exit_code, out.summary, files);
  }, py::arg("command"), py::arg("config"), py::arg("out_dir"), py::arg("seed") = py::none(),
        "Run one CLI experiment in-process. Returns (exit_code, summary, files).");
}
