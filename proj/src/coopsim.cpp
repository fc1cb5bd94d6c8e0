#include "mcp/coopsim.hpp"

#include <cmath>
#include <functional>
#include <queue>
#include <random>

#include "mcp/error.hpp"
#include "mcp/infotheory.hpp"
#include "mcp/serialize.hpp"

namespace mcp {

namespace {

using nlohmann::json;

json vector_json(const CVector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(complex_to_json(v(i)));
  return a;
}

CVector vector_from_json(const json& a) {
  CVector v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = cd(a[i][0].get<double>(), a[i][1].get<double>());
  return v;
}

Endpoint peer_of(Endpoint bs) { return bs == Endpoint::BS1 ? Endpoint::BS2 : Endpoint::BS1; }
Endpoint ut_of(Endpoint bs) { return bs == Endpoint::BS1 ? Endpoint::UT1 : Endpoint::UT2; }
std::size_t index_of(Endpoint bs) { return bs == Endpoint::BS1 ? 0 : 1; }

// Delivery-ordered queue; ties in time resolve by send order.
class EventLoop {
 public:
  explicit EventLoop(double latency) : latency_(latency) {}

  void send(double now, Endpoint from, Endpoint to, MessageKind kind, double size, json payload) {
    queue_.push({now + latency_, seq_++, Message{now + latency_, from, to, kind, size, std::move(payload)}});
  }

  void run(Transcript& transcript, const std::function<void(const Message&)>& deliver) {
    while (!queue_.empty()) {
      Pending p = queue_.top();
      queue_.pop();
      transcript.messages.push_back(p.msg);
      deliver(p.msg);
    }
  }

 private:
  struct Pending {
    double time;
    std::uint64_t seq;
    Message msg;
    bool operator>(const Pending& o) const { return time != o.time ? time > o.time : seq > o.seq; }
  };
  double latency_;
  std::uint64_t seq_ = 0;
  std::priority_queue<Pending, std::vector<Pending>, std::greater<>> queue_;
};

void require_pair(const VirtualChannel& vc, std::span<const Constellation> inputs) {
  if (vc.size() != 2) throw Error(ErrorCode::DimensionMismatch, "the cooperation protocol is written for two cells");
  if (inputs.size() != 2) throw Error(ErrorCode::DimensionMismatch, "one constellation per user required");
}

double csi_size(Eigen::Index n) { return 2.0 * static_cast<double>(n); }
double data_size(Eigen::Index n) { return 2.0 * static_cast<double>(n); }

// One channel use; each BS forms E[x | its own output].
std::vector<CVector> local_estimates(const VirtualChannel& vc, const CMatrix& p, std::span<const Constellation> inputs,
                                     std::uint64_t seed) {
  const Eigen::Index n = vc.size();
  auto rng = make_substream(seed, 0);
  CVector x(n);
  for (Eigen::Index u = 0; u < n; ++u) {
    const Constellation& c = inputs[static_cast<std::size_t>(u)];
    if (c.is_finite()) {
      std::discrete_distribution<std::size_t> pick(c.priors().begin(), c.priors().end());
      x(u) = c.points()[pick(rng)];
    } else {
      x(u) = sample_noise(1, rng)(0);
    }
  }
  const CMatrix g = effective(vc, p);
  const CVector y = sample_output(g, x, rng);
  std::vector<CVector> out;
  const bool gaussian = all_gaussian(inputs);
  const JointAlphabet alphabet = gaussian ? JointAlphabet{} : enumerate_joint(inputs);
  for (Eigen::Index b = 0; b < n; ++b) {
    const CMatrix row = g.row(b);
    const CVector yb = y.segment(b, 1);
    if (gaussian) {
      out.push_back(row.adjoint() * (yb / (1.0 + row.squaredNorm())));
    } else {
      out.push_back(conditional_mean(yb, row, alphabet));
    }
  }
  return out;
}

CMatrix assemble(const BsNode& self, const CVector& peer_row) {
  CMatrix h(2, self.csi.size());
  h.row(static_cast<Eigen::Index>(index_of(self.id))) = self.csi.transpose();
  h.row(static_cast<Eigen::Index>(index_of(peer_of(self.id)))) = peer_row.transpose();
  return h;
}

}  // namespace

std::string_view to_string(Endpoint e) {
  switch (e) {
    case Endpoint::BS1: return "BS1";
    case Endpoint::BS2: return "BS2";
    case Endpoint::UT1: return "UT1";
    case Endpoint::UT2: return "UT2";
  }
  return "?";
}

std::string_view to_string(MessageKind k) {
  switch (k) {
    case MessageKind::CsiShare: return "CsiShare";
    case MessageKind::DataShare: return "DataShare";
    case MessageKind::CongestionNotice: return "CongestionNotice";
    case MessageKind::PowerFeedback: return "PowerFeedback";
    case MessageKind::PrecoderShare: return "PrecoderShare";
    case MessageKind::CrossTransmitShare: return "CrossTransmitShare";
  }
  return "?";
}

std::string_view to_string(BsRole r) {
  switch (r) {
    case BsRole::Undecided: return "Undecided";
    case BsRole::Processor: return "Processor";
    case BsRole::Peer: return "Peer";
  }
  return "?";
}

void BackhaulLink::validate() const {
  if (!(threshold > 0.0)) throw Error(ErrorCode::InvalidArgument, "backhaul threshold must be positive");
  if (!(bandwidth >= 0.0) || !(per_message_cost >= 0.0) || !(latency >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "backhaul bandwidth, cost and latency must be non-negative");
  }
}

json Transcript::to_json() const {
  json msgs = json::array();
  for (const auto& m : messages) {
    msgs.push_back({{"time", m.time},
                    {"from", to_string(m.from)},
                    {"to", to_string(m.to)},
                    {"kind", to_string(m.kind)},
                    {"payload_size", m.payload_size},
                    {"payload", m.payload}});
  }
  return {{"schema", kSchema}, {"messages", msgs}};
}

std::size_t Transcript::count(MessageKind kind) const {
  std::size_t c = 0;
  for (const auto& m : messages) c += m.kind == kind ? 1 : 0;
  return c;
}

double cooperation_load(Eigen::Index users, const BackhaulLink& link) {
  // CSI and data, each sent in both directions.
  return 2.0 * (csi_size(users) + data_size(users)) * link.per_message_cost;
}

UplinkOutcome run_uplink_session(const VirtualChannel& vc, const RVector& caps, std::span<const Constellation> inputs,
                                 const BackhaulLink& link, const UplinkSessionParams& params) {
  require_pair(vc, inputs);
  link.validate();
  params.power.validate();
  UplinkOutcome out;
  out.load = cooperation_load(vc.size(), link);
  out.congested = link.congested(out.load);
  EventLoop loop(link.latency);

  if (out.congested) {
    const json notice = {{"load", out.load}, {"capacity", link.capacity()}};
    loop.send(0.0, Endpoint::BS1, Endpoint::BS2, MessageKind::CongestionNotice, 2.0, notice);
    loop.send(0.0, Endpoint::BS2, Endpoint::BS1, MessageKind::CongestionNotice, 2.0, notice);
    loop.run(out.transcript, [](const Message&) {});
    return out;
  }

  const std::vector<CVector> est = local_estimates(vc, amplitude_matrix(caps), inputs, params.seed);
  std::vector<BsNode> nodes(2);
  nodes[0] = {Endpoint::BS1, vc.h().row(0).transpose(), est[0], params.resources_bs1, BsRole::Undecided};
  nodes[1] = {Endpoint::BS2, vc.h().row(1).transpose(), est[1], params.resources_bs2, BsRole::Undecided};
  struct Inbox {
    std::optional<CVector> csi;
    double resources = 0.0;
    bool data = false;
  };
  std::vector<Inbox> inbox(2);

  for (const BsNode& n : nodes) {
    loop.send(0.0, n.id, peer_of(n.id), MessageKind::CsiShare, csi_size(vc.size()),
              {{"row", vector_json(n.csi)}, {"resources", n.resources}});
  }
  loop.run(out.transcript, [&](const Message& m) {
    if (m.to == Endpoint::UT1 || m.to == Endpoint::UT2) return;
    BsNode& self = nodes[index_of(m.to)];
    Inbox& box = inbox[index_of(m.to)];
    switch (m.kind) {
      case MessageKind::CsiShare:
        box.csi = vector_from_json(m.payload["row"]);
        box.resources = m.payload["resources"].get<double>();
        loop.send(m.time, self.id, m.from, MessageKind::DataShare, data_size(vc.size()),
                  {{"estimates", vector_json(self.decoded_estimates)}});
        break;
      case MessageKind::DataShare: {
        box.data = true;
        if (!box.csi) break;
        // Handshake: more resources processes, BS1 on a tie.
        const bool self_wins = self.resources > box.resources ||
                               (self.resources == box.resources && self.id == Endpoint::BS1);
        self.role = self_wins ? BsRole::Processor : BsRole::Peer;
        if (!self_wins) break;
        out.processor = self.id;
        const VirtualChannel joint(assemble(self, *box.csi), vc.snr());
        PowerSolution sol = algorithm1_solve(joint, caps, inputs, params.power);
        std::vector<double> powers(sol.powers.data(), sol.powers.data() + sol.powers.size());
        const json fb = {{"powers", powers}, {"converged", sol.converged}};
        loop.send(m.time, self.id, peer_of(self.id), MessageKind::PowerFeedback, 2.0, fb);
        loop.send(m.time, self.id, ut_of(self.id), MessageKind::PowerFeedback, 2.0, fb);
        out.solution = std::move(sol);
        break;
      }
      case MessageKind::PowerFeedback:
        loop.send(m.time, self.id, ut_of(self.id), MessageKind::PowerFeedback, 2.0, m.payload);
        break;
      default:
        break;
    }
  });
  out.nodes = std::move(nodes);
  return out;
}

PrecoderMatrix downlink_initial_precoder(const VirtualChannel& vc, const DownlinkSessionParams& params) {
  RVector powers = params.initial_powers;
  if (powers.size() == 0) powers = RVector::Constant(vc.size(), params.trace_budget / static_cast<double>(vc.size()));
  return {svd_initial_precoder(vc, powers), params.trace_budget};
}

DownlinkOutcome run_downlink_session(const VirtualChannel& vc, std::span<const Constellation> inputs,
                                     const BackhaulLink& link, const DownlinkSessionParams& params) {
  require_pair(vc, inputs);
  link.validate();
  params.solver.validate();
  DownlinkOutcome out;
  out.load = cooperation_load(vc.size(), link);
  out.congested = link.congested(out.load);
  EventLoop loop(link.latency);

  if (out.congested) {
    const json notice = {{"load", out.load}, {"capacity", link.capacity()}};
    loop.send(0.0, Endpoint::BS1, Endpoint::BS2, MessageKind::CongestionNotice, 2.0, notice);
    loop.send(0.0, Endpoint::BS2, Endpoint::BS1, MessageKind::CongestionNotice, 2.0, notice);
    loop.run(out.transcript, [](const Message&) {});
    return out;
  }

  struct State {
    BsNode node;
    std::optional<CVector> peer_csi;
    bool data = false;
    std::optional<Algorithm2Result> result;
    std::optional<CMatrix> peer_precoder;
  };
  std::vector<State> st(2);
  st[0].node = {Endpoint::BS1, vc.h().row(0).transpose(), CVector(), 1.0, BsRole::Undecided};
  st[1].node = {Endpoint::BS2, vc.h().row(1).transpose(), CVector(), 1.0, BsRole::Undecided};

  const auto try_solve = [&](State& s, double now) {
    if (!s.peer_csi || !s.data || s.result) return;
    const VirtualChannel joint(assemble(s.node, *s.peer_csi), vc.snr());
    s.result = algorithm2_solve(joint, downlink_initial_precoder(joint, params), inputs, params.solver);
    const CMatrix& p = s.result->p.p;
    const Endpoint self = s.node.id;
    loop.send(now, self, peer_of(self), MessageKind::PrecoderShare, 2.0 * static_cast<double>(p.size()),
              {{"precoder", matrix_to_json(p)}, {"trace_budget", s.result->p.trace_budget}});
    const TransmitWeights& w = s.result->weights;
    if (self == Endpoint::BS1) {
      loop.send(now, self, Endpoint::BS2, MessageKind::CrossTransmitShare, 2.0,
                {{"symbol", "x1"}, {"weight", complex_to_json(w.cross_x1_to_bs2)}});
    } else {
      loop.send(now, self, Endpoint::BS1, MessageKind::CrossTransmitShare, 2.0,
                {{"symbol", "x2"}, {"weight", complex_to_json(w.cross_x2_to_bs1)}});
    }
  };

  for (const State& s : st) {
    const Endpoint id = s.node.id;
    loop.send(0.0, id, peer_of(id), MessageKind::CsiShare, csi_size(vc.size()), {{"row", vector_json(s.node.csi)}});
    loop.send(0.0, id, peer_of(id), MessageKind::DataShare, data_size(vc.size()),
              {{"user", to_string(ut_of(id))}});
  }
  loop.run(out.transcript, [&](const Message& m) {
    State& s = st[index_of(m.to)];
    switch (m.kind) {
      case MessageKind::CsiShare:
        s.peer_csi = vector_from_json(m.payload["row"]);
        try_solve(s, m.time);
        break;
      case MessageKind::DataShare:
        s.data = true;
        try_solve(s, m.time);
        break;
      case MessageKind::PrecoderShare:
        s.peer_precoder = matrix_from_json(m.payload["precoder"]);
        break;
      default:
        break;
    }
  });

  out.result = std::move(st[0].result);
  out.consistent = out.result && st[1].result && st[0].peer_precoder && st[1].peer_precoder &&
                   *st[0].peer_precoder == st[1].result->p.p && *st[1].peer_precoder == out.result->p.p &&
                   out.result->p.p == st[1].result->p.p;
  return out;
}

}  // namespace mcp
