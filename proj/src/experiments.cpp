#include "mcp/experiments.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "mcp/coopsim.hpp"
#include "mcp/error.hpp"
#include "mcp/power.hpp"
#include "mcp/precoder.hpp"
#include "mcp/serialize.hpp"

namespace mcp {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

fs::path write_text(const fs::path& dir, const std::string& name, const std::string& body) {
  fs::create_directories(dir);
  const fs::path p = dir / name;
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + p.string());
  out << body;
  return p;
}

fs::path write_json(const fs::path& dir, const std::string& name, const json& j) {
  return write_text(dir, name, j.dump(2) + "\n");
}

CMatrix random_channel(std::mt19937_64& rng, Eigen::Index n) {
  CMatrix h(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) h(i, j) = sample_noise(1, rng)(0) * std::sqrt(2.0);
  }
  return h;
}

double operating_snr(const ExperimentConfig& cfg) { return db_to_linear(cfg.snr_db.back()); }

Integrator seeded(Integrator integ, std::uint64_t seed) {
  integ.seed = seed;
  return integ;
}

}  // namespace

std::string csv_header(const ExperimentConfig& cfg, std::string_view command, std::uint64_t seed) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "# mcp %.*s config_hash=%016" PRIx64 " seed=%" PRIu64 "\n",
                static_cast<int>(command.size()), command.data(), cfg.config_hash, seed);
  return buf;
}

std::uint64_t point_seed(std::uint64_t seed, std::uint64_t index) { return make_substream(seed, index)(); }

std::vector<Table2Row> table2_rows(const Table2Config& t, const Integrator& base, std::uint64_t seed) {
  const double snr = db_to_linear(t.snr_db);
  std::vector<Table2Row> rows;
  std::uint64_t idx = 0;
  for (const int size : t.sizes) {
    const Eigen::Index n = size;
    for (const char* sig : {"BPSK", "QPSK"}) {
      const bool qpsk = std::string_view(sig) == "QPSK";
      std::vector<Constellation> users(static_cast<std::size_t>(n), qpsk ? Constellation::qpsk() : Constellation::bpsk());
      Integrator integ = base;
      integ.kind = static_cast<std::size_t>(n) <= Integrator::kMaxQuadratureReceiveDims ? Integrator::Kind::GaussHermite
                                                                                        : Integrator::Kind::MonteCarlo;
      if (qpsk && n >= 4 && integ.samples < t.sample_floor) {
        throw Error(ErrorCode::IntegratorBudgetTooSmall,
                    "4x4 QPSK needs at least " + std::to_string(t.sample_floor) + " samples");
      }
      const CMatrix p = CMatrix::Identity(n, n);
      Table2Row row;
      row.size = size;
      row.signaling = sig;
      row.without = evaluate_inputs(VirtualChannel(CMatrix::Identity(n, n), snr), p, users,
                                    seeded(integ, point_seed(seed, idx++))).mi;
      row.with = evaluate_inputs(VirtualChannel(CMatrix::Ones(n, n), snr), p, users,
                                 seeded(integ, point_seed(seed, idx++))).mi;
      rows.push_back(row);
    }
  }
  return rows;
}

std::vector<PropertyCheck> run_property_checks(const CheckConfig& c, std::uint64_t seed) {
  std::vector<PropertyCheck> out;
  auto rng = make_substream(seed, 0x636b);
  const std::vector<Constellation> bpsk2{Constellation::bpsk(), Constellation::bpsk()};
  const std::vector<Constellation> qpsk2{Constellation::qpsk(true), Constellation::qpsk(true)};
  const JointAlphabet bpsk_joint = enumerate_joint(bpsk2);
  const JointAlphabet qpsk_joint = enumerate_joint(qpsk2);
  const Integrator gh = Integrator::gauss_hermite(20);
  const CMatrix eye = CMatrix::Identity(2, 2);

  // dI/dsnr = Tr{H P E (H P)^H}
  {
    double worst = 0.0;
    for (std::size_t k = 0; k < c.channels; ++k) {
      const CMatrix h = random_channel(rng, 2);
      for (const double snr : {0.5, 1.0, 2.0}) {
        const double step = 1e-3 * snr;
        const double up = mi_discrete(VirtualChannel(h, snr + step), eye, bpsk_joint, gh).nats;
        const double dn = mi_discrete(VirtualChannel(h, snr - step), eye, bpsk_joint, gh).nats;
        const CMatrix e = mmse_matrix(VirtualChannel(h, snr), eye, bpsk_joint, gh).e;
        const double rhs = (h * e * h.adjoint()).trace().real();
        worst = std::max(worst, std::abs((up - dn) / (2.0 * step) - rhs));
      }
    }
    out.push_back({"immse_finite_difference", worst <= 2e-3, worst, 2e-3});
  }

  // gradient vs finite differences of the real parameters
  {
    double worst = 0.0;
    const CMatrix h = random_channel(rng, 2);
    const CMatrix p = 0.7 * random_channel(rng, 2);
    const VirtualChannel vc(h, 1.0);
    const CMatrix g = mi_gradient(vc, p, mmse_matrix(vc, p, bpsk_joint, gh));
    const double step = 1e-5;
    for (Eigen::Index i = 0; i < 2; ++i) {
      for (Eigen::Index j = 0; j < 2; ++j) {
        for (const cd dir : {cd(1.0, 0.0), cd(0.0, 1.0)}) {
          CMatrix pu = p, pd = p;
          pu(i, j) += step * dir;
          pd(i, j) -= step * dir;
          const double fd = (mi_discrete(vc, pu, bpsk_joint, gh).nats - mi_discrete(vc, pd, bpsk_joint, gh).nats) /
                            (2.0 * step);
          const double analytic = c.gradient_factor * (dir.real() != 0.0 ? g(i, j).real() : g(i, j).imag());
          worst = std::max(worst, std::abs(fd - analytic));
        }
      }
    }
    out.push_back({"gradient_finite_difference", worst <= 1e-3, worst, 1e-3});
  }

  // low-snr MMSE expansion error is second order
  {
    const CMatrix h = random_channel(rng, 2);
    double err[2];
    int i = 0;
    for (const double snr : {1e-2, 1e-3}) {
      const VirtualChannel vc(h, snr);
      const LowSnrMmseExpansion ex = lowsnr_mmse_expansion(vc, eye);
      const CMatrix e = mmse_matrix(vc, eye, qpsk_joint, gh).e;
      err[i++] = (e - (ex.zeroth + snr * ex.first)).norm();
    }
    const double ratio = err[0] / err[1];
    out.push_back({"lowsnr_mmse_second_order", ratio >= 100.0 / 3.0 && ratio <= 300.0, ratio, 3.0});
  }

  // first-order MI slope does not depend on the input
  {
    const CMatrix h = random_channel(rng, 2);
    const VirtualChannel vc(h, 1e-3);
    const double gauss = mi_gaussian(vc, eye).nats;
    const double bpsk = mi_discrete(vc, eye, bpsk_joint, gh).nats;
    const double rel = std::abs(bpsk - gauss) / gauss;
    out.push_back({"lowsnr_mi_slope_input_free", rel <= 1e-2, rel, 1e-2});
  }

  // BPSK closed forms vs generic quadrature
  {
    const JointAlphabet one = enumerate_joint(std::vector<Constellation>{Constellation::bpsk()});
    const CMatrix p1 = CMatrix::Identity(1, 1);
    const Integrator fine = Integrator::gauss_hermite(128);
    double worst = 0.0;
    for (const double snr : {0.1, 1.0, 10.0}) {
      const VirtualChannel vc(CMatrix::Identity(1, 1), snr);
      const InfoMmse q = mi_and_mmse(effective(vc, p1), one, fine);
      worst = std::max(worst, std::abs(bpsk_siso_mmse(snr) - q.mmse.e(0, 0).real()));
      worst = std::max(worst, std::abs(bpsk_siso_mi(snr) - q.mi.nats));
    }
    out.push_back({"bpsk_closed_form_vs_quadrature", worst <= 1e-6, worst, 1e-6});
  }

  // snr = 0: no information, error covariance equals the input covariance
  {
    const CMatrix h = random_channel(rng, 2);
    const VirtualChannel vc(h, 0.0);
    double worst = 0.0;
    for (const JointAlphabet* a : {&bpsk_joint, &qpsk_joint}) {
      const InfoMmse r = mi_and_mmse(effective(vc, eye), *a, gh);
      worst = std::max(worst, std::abs(r.mi.nats));
      worst = std::max(worst, (r.mmse.e - a->second_moment()).norm());
    }
    const MmseReport g = mmse_gaussian(vc, eye);
    worst = std::max(worst, (g.e - eye).norm());
    worst = std::max(worst, std::abs(mi_gaussian(vc, eye).nats));
    out.push_back({"snr_zero_identities", worst <= 1e-10, worst, 1e-10});
  }

  // Gaussian I-MMSE, closed forms on both sides
  {
    const CMatrix h = random_channel(rng, 2);
    const double snr = 1.0, step = 1e-5;
    const double fd = (mi_gaussian(VirtualChannel(h, snr + step), eye).nats -
                       mi_gaussian(VirtualChannel(h, snr - step), eye).nats) /
                      (2.0 * step);
    const CMatrix e = mmse_gaussian(VirtualChannel(h, snr), eye).e;
    const double err = std::abs(fd - (h * e * h.adjoint()).trace().real());
    out.push_back({"gaussian_immse", err <= 1e-6, err, 1e-6});
  }
  return out;
}

CommandOutput cmd_mi(const ExperimentConfig& cfg, const fs::path& out_dir) {
  const std::uint64_t seed = cfg.require_seed(cfg.may_use_monte_carlo());
  const CMatrix p = amplitude_matrix(cfg.caps);
  std::ostringstream csv;
  csv << csv_header(cfg, "mi", seed) << "snr_db,mi_bits,std_error,e11,e22,e12_abs,e21_abs,sum_e\n";
  const bool two = cfg.h.rows() >= 2;
  double last_mi = 0.0, last_sum = 0.0;
  for (std::size_t i = 0; i < cfg.snr_db.size(); ++i) {
    const VirtualChannel vc(cfg.h, db_to_linear(cfg.snr_db[i]));
    const InfoMmse r = evaluate_inputs(vc, p, cfg.inputs, seeded(cfg.integrator, point_seed(seed, i)));
    const CMatrix& e = r.mmse.e;
    csv << num(cfg.snr_db[i]) << ',' << num(r.mi.bits) << ',' << num(r.mi.std_error_bits()) << ','
        << num(e(0, 0).real()) << ',' << num(two ? e(1, 1).real() : 0.0) << ',' << num(two ? std::abs(e(0, 1)) : 0.0)
        << ',' << num(two ? std::abs(e(1, 0)) : 0.0) << ',' << num(r.mmse.trace()) << '\n';
    last_mi = r.mi.bits;
    last_sum = r.mmse.trace();
  }
  CommandOutput out;
  out.files.push_back(write_text(out_dir, "mi.csv", csv.str()));
  out.summary = "mi: " + std::to_string(cfg.snr_db.size()) + " points; top of grid mi_bits=" + num(last_mi) +
                " sum_e=" + num(last_sum);
  return out;
}

CommandOutput cmd_table2(const ExperimentConfig& cfg, const fs::path& out_dir) {
  const std::uint64_t seed = cfg.require_seed(true);
  const std::vector<Table2Row> rows = table2_rows(cfg.table2, seeded(cfg.integrator, seed), seed);
  std::ostringstream csv;
  csv << csv_header(cfg, "table2", seed) << "setup,signaling,mi_without,mi_with,loss,se_without,se_with\n";
  std::ostringstream text;
  for (const auto& r : rows) {
    const std::string setup = std::to_string(r.size) + "x" + std::to_string(r.size);
    csv << setup << ',' << r.signaling << ',' << num(r.without.bits) << ',' << num(r.with.bits) << ','
        << num(r.loss_bits()) << ',' << num(r.without.std_error_bits()) << ',' << num(r.with.std_error_bits()) << '\n';
    char line[160];
    std::snprintf(line, sizeof line, "%-4s %-5s without=%.4f with=%.4f loss=%.4f\n", setup.c_str(),
                  r.signaling.c_str(), r.without.bits, r.with.bits, r.loss_bits());
    text << line;
  }
  CommandOutput out;
  out.files.push_back(write_text(out_dir, "table2.csv", csv.str()));
  out.summary = text.str();
  return out;
}

CommandOutput cmd_power(const ExperimentConfig& cfg, const fs::path& out_dir) {
  const std::uint64_t seed = cfg.require_seed(cfg.may_use_monte_carlo());
  const VirtualChannel vc(cfg.h, operating_snr(cfg));
  PowerSolveParams params = cfg.power;
  params.integrator.seed = seed;
  const PowerSolution s = algorithm1_solve(vc, cfg.caps, cfg.inputs, params);

  std::ostringstream csv;
  csv << csv_header(cfg, "power", seed) << "k";
  for (Eigen::Index i = 0; i < cfg.caps.size(); ++i) csv << ",p" << i + 1;
  csv << ",mi_bits\n";
  for (const auto& it : s.trace) {
    csv << it.k;
    for (Eigen::Index i = 0; i < it.powers.size(); ++i) csv << ',' << num(it.powers(i));
    csv << ',' << num(nats_to_bits(it.mi_nats)) << '\n';
  }
  json j = to_json(s);
  j.erase("trace");
  j["snr_db"] = cfg.snr_db.back();
  j["caps"] = vector_to_json(cfg.caps);

  CommandOutput out;
  out.files.push_back(write_json(out_dir, "power.json", j));
  out.files.push_back(write_text(out_dir, "power_trace.csv", csv.str()));
  std::ostringstream text;
  text << "power: P* = [";
  for (Eigen::Index i = 0; i < s.powers.size(); ++i) text << (i ? ", " : "") << num(s.powers(i));
  text << "] iterations=" << s.iterations << " residual=" << num(s.residual)
       << (s.converged ? "" : " (NoConvergence, best iterate)");
  out.summary = text.str();
  out.exit_code = s.converged ? kExitOk : kExitNoConvergence;
  return out;
}

CommandOutput cmd_precode(const ExperimentConfig& cfg, const fs::path& out_dir) {
  const PrecodeConfig& pc = cfg.precode;
  CommandOutput out;
  std::ostringstream text;
  switch (pc.mode) {
    case PrecodeMode::Compare: {
      if (pc.matrices.empty()) throw Error(ErrorCode::ConfigError, "field 'precode.matrices': compare mode needs matrices");
      const std::uint64_t seed = cfg.require_seed(cfg.may_use_monte_carlo());
      std::ostringstream csv;
      csv << csv_header(cfg, "precode", seed) << "snr_db";
      for (const auto& [name, _] : pc.matrices) csv << ",mi_bits_" << name << ",se_" << name;
      csv << '\n';
      for (std::size_t i = 0; i < cfg.snr_db.size(); ++i) {
        const VirtualChannel vc(cfg.h, db_to_linear(cfg.snr_db[i]));
        csv << num(cfg.snr_db[i]);
        for (std::size_t m = 0; m < pc.matrices.size(); ++m) {
          // same noise draws for every matrix at a grid point
          const InfoMmse r =
              evaluate_inputs(vc, pc.matrices[m].second, cfg.inputs, seeded(cfg.integrator, point_seed(seed, i)));
          csv << ',' << num(r.mi.bits) << ',' << num(r.mi.std_error_bits());
        }
        csv << '\n';
      }
      json j = json::object();
      j["snr_db"] = pc.snr_db;
      json mats = json::array();
      const VirtualChannel vc(cfg.h, db_to_linear(pc.snr_db));
      const bool finite = !all_gaussian(cfg.inputs);
      for (const auto& [name, m] : pc.matrices) {
        json e = {{"name", name}, {"precoder", to_json(PrecoderMatrix{m, m.squaredNorm()})}};
        if (finite) {
          const JointAlphabet a = enumerate_joint(cfg.inputs);
          const double d = d_min(vc, m, a);
          e["d_min"] = d;
          if (d > 1e-12) e["bound_bits"] = nats_to_bits(highsnr_bound(vc, m, a, vc.snr()));
          text << name << ": d_min=" << num(d) << '\n';
        }
        mats.push_back(e);
      }
      j["matrices"] = mats;
      out.files.push_back(write_text(out_dir, "precode_mi.csv", csv.str()));
      out.files.push_back(write_json(out_dir, "precode.json", j));
      text << "precode compare: " << cfg.snr_db.size() << " points x " << pc.matrices.size() << " matrices";
      break;
    }
    case PrecodeMode::Algorithm2: {
      const std::uint64_t seed = cfg.require_seed(cfg.may_use_monte_carlo());
      const VirtualChannel vc(cfg.h, db_to_linear(pc.snr_db));
      RVector powers = pc.initial_powers;
      if (powers.size() == 0) powers = RVector::Constant(vc.size(), pc.trace_budget / static_cast<double>(vc.size()));
      Algorithm2Params params = pc.algorithm2;
      params.integrator.seed = seed;
      const Algorithm2Result r =
          algorithm2_solve(vc, {svd_initial_precoder(vc, powers), pc.trace_budget}, cfg.inputs, params);
      std::ostringstream csv;
      csv << csv_header(cfg, "precode", seed) << "k,mi_bits,trace\n";
      for (const auto& it : r.trace) csv << it.k << ',' << num(nats_to_bits(it.mi_nats)) << ',' << num(it.trace) << '\n';
      json j = to_json(r);
      j.erase("trace");
      out.files.push_back(write_json(out_dir, "precode.json", j));
      out.files.push_back(write_text(out_dir, "precode_trace.csv", csv.str()));
      text << "precode algorithm2: mi_bits=" << num(nats_to_bits(r.mi_nats)) << " iterations=" << r.iterations
           << (r.converged ? "" : " (NoConvergence, best iterate)");
      out.exit_code = r.converged ? kExitOk : kExitNoConvergence;
      break;
    }
    case PrecodeMode::HighSnr: {
      const VirtualChannel vc(cfg.h, db_to_linear(pc.snr_db));
      const HighSnrResult r = optimize_precoder_highsnr(vc, enumerate_joint(cfg.inputs), pc.highsnr);
      std::ostringstream csv;
      csv << csv_header(cfg, "precode", pc.highsnr.seed) << "iterate,trace,d_min\n";
      for (std::size_t k = 0; k < r.trace_history.size(); ++k) {
        csv << k << ',' << num(r.trace_history[k]) << ',' << num(r.dmin_history[k]) << '\n';
      }
      out.files.push_back(write_json(out_dir, "precode.json", to_json(r)));
      out.files.push_back(write_text(out_dir, "precode_trace.csv", csv.str()));
      text << "precode highsnr: d_min=" << num(r.dmin) << " bound_bits=" << num(nats_to_bits(r.bound))
           << (r.improved ? "" : " (NoImprovement, best restart)");
      out.exit_code = r.improved ? kExitOk : kExitNoConvergence;
      break;
    }
    case PrecodeMode::LowSnr: {
      const VirtualChannel vc(cfg.h, db_to_linear(pc.snr_db));
      const PrecoderMatrix p = lowsnr_optimal_precoder(vc, vc.snr(), pc.trace_budget);
      const double slope = lowsnr_mi_expansion(vc, p.p).first;
      out.files.push_back(write_json(out_dir, "precode.json", {{"precoder", to_json(p)}, {"slope_nats", slope}}));
      text << "precode lowsnr: first-order slope=" << num(slope) << " nats per unit snr";
      break;
    }
  }
  out.summary = text.str();
  return out;
}

CommandOutput cmd_sim(const ExperimentConfig& cfg, const fs::path& out_dir) {
  const std::uint64_t seed = cfg.require_seed(cfg.may_use_monte_carlo());
  const VirtualChannel vc(cfg.h, operating_snr(cfg));
  CommandOutput out;
  std::ostringstream text;
  if (cfg.session.direction == SessionDirection::Uplink) {
    UplinkSessionParams params;
    params.power = cfg.power;
    params.power.integrator.seed = seed;
    params.resources_bs1 = cfg.session.resources_bs1;
    params.resources_bs2 = cfg.session.resources_bs2;
    params.seed = seed;
    const UplinkOutcome o = run_uplink_session(vc, cfg.caps, cfg.inputs, cfg.session.link, params);
    out.files.push_back(write_text(out_dir, "transcript.json", o.transcript.dump() + "\n"));
    json j = {{"direction", "uplink"}, {"congested", o.congested}, {"load", o.load}};
    if (o.solution) {
      json s = to_json(*o.solution);
      s.erase("trace");
      j["solution"] = s;
      j["processor"] = to_string(o.processor);
      out.exit_code = o.solution->converged ? kExitOk : kExitNoConvergence;
    }
    out.files.push_back(write_json(out_dir, "session.json", j));
    text << "sim uplink: " << o.transcript.messages.size() << " messages"
         << (o.congested ? ", congestion declared" : ", processor " + std::string(to_string(o.processor)));
  } else {
    DownlinkSessionParams params;
    params.solver = cfg.precode.algorithm2;
    params.solver.integrator.seed = seed;
    params.trace_budget = cfg.precode.trace_budget;
    params.initial_powers = cfg.precode.initial_powers;
    const DownlinkOutcome o = run_downlink_session(vc, cfg.inputs, cfg.session.link, params);
    out.files.push_back(write_text(out_dir, "transcript.json", o.transcript.dump() + "\n"));
    json j = {{"direction", "downlink"}, {"congested", o.congested}, {"load", o.load}, {"consistent", o.consistent}};
    if (o.result) {
      json s = to_json(*o.result);
      s.erase("trace");
      j["solution"] = s;
      out.exit_code = o.result->converged ? kExitOk : kExitNoConvergence;
    }
    out.files.push_back(write_json(out_dir, "session.json", j));
    text << "sim downlink: " << o.transcript.messages.size() << " messages"
         << (o.congested ? ", congestion declared" : "");
  }
  out.summary = text.str();
  return out;
}

CommandOutput cmd_check(const ExperimentConfig& cfg, const fs::path& out_dir) {
  const std::uint64_t seed = cfg.require_seed(false);
  const std::vector<PropertyCheck> checks = run_property_checks(cfg.check, seed);
  std::ostringstream csv, text;
  csv << csv_header(cfg, "check", seed) << "property,pass,measured,tolerance\n";
  bool all = true;
  for (const auto& c : checks) {
    csv << c.name << ',' << (c.pass ? "true" : "false") << ',' << num(c.measured) << ',' << num(c.tolerance) << '\n';
    text << (c.pass ? "PASS " : "FAIL ") << c.name << " measured=" << num(c.measured) << " tol=" << num(c.tolerance)
         << '\n';
    all = all && c.pass;
  }
  CommandOutput out;
  out.files.push_back(write_text(out_dir, "check.csv", csv.str()));
  out.summary = text.str();
  out.exit_code = all ? kExitOk : kExitPropertyFailure;
  return out;
}

}  // namespace mcp
