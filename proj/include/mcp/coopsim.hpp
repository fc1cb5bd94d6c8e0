#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mcp/channel.hpp"
#include "mcp/constellation.hpp"
#include "mcp/power.hpp"
#include "mcp/precoder.hpp"

namespace mcp {

enum class Endpoint { BS1, BS2, UT1, UT2 };
enum class MessageKind { CsiShare, DataShare, CongestionNotice, PowerFeedback, PrecoderShare, CrossTransmitShare };
enum class BsRole { Undecided, Processor, Peer };

std::string_view to_string(Endpoint e);
std::string_view to_string(MessageKind k);
std::string_view to_string(BsRole r);

/// Abstract backhaul. A full exchange costs sum(payload_size) * per_message_cost
/// and congests when that load exceeds bandwidth * threshold.
struct BackhaulLink {
  double bandwidth = 1000.0;
  double threshold = 1.0;  // tau
  double per_message_cost = 1.0;
  double latency = 1.0;  // timestamps only

  void validate() const;
  double capacity() const { return bandwidth * threshold; }
  bool congested(double load) const { return load > capacity(); }
};

struct Message {
  double time = 0.0;  // delivery time
  Endpoint from = Endpoint::BS1;
  Endpoint to = Endpoint::BS2;
  MessageKind kind = MessageKind::CsiShare;
  double payload_size = 0.0;  // real scalars carried
  nlohmann::json payload;
};

struct Transcript {
  static constexpr std::string_view kSchema = "mcp.transcript/1";
  std::vector<Message> messages;

  nlohmann::json to_json() const;
  std::string dump() const { return to_json().dump(2); }
  std::size_t count(MessageKind kind) const;
};

struct BsNode {
  Endpoint id = Endpoint::BS1;
  CVector csi;                // row of H heard by this BS
  CVector decoded_estimates;  // E[x | y_local] for one channel use
  double resources = 1.0;
  BsRole role = BsRole::Undecided;
};

struct UplinkSessionParams {
  PowerSolveParams power;
  double resources_bs1 = 1.0;
  double resources_bs2 = 1.0;
  std::uint64_t seed = 1;  // draws the channel use whose estimates are shared
};

struct UplinkOutcome {
  Transcript transcript;
  bool congested = false;
  double load = 0.0;
  std::optional<PowerSolution> solution;
  Endpoint processor = Endpoint::BS1;
  std::vector<BsNode> nodes;
};

/// Modeled load of the full CSI + data exchange for an n-user cluster.
double cooperation_load(Eigen::Index users, const BackhaulLink& link);

UplinkOutcome run_uplink_session(const VirtualChannel& vc, const RVector& caps, std::span<const Constellation> inputs,
                                 const BackhaulLink& link, const UplinkSessionParams& params);

struct DownlinkSessionParams {
  Algorithm2Params solver;
  double trace_budget = 1.0;
  /// Powers for V_H diag(sqrt(P)); empty means an equal split of the budget.
  RVector initial_powers;
};

struct DownlinkOutcome {
  Transcript transcript;
  bool congested = false;
  double load = 0.0;
  std::optional<Algorithm2Result> result;
  /// Both BSs derived the same precoder.
  bool consistent = false;
};

/// The P_init a downlink session uses.
PrecoderMatrix downlink_initial_precoder(const VirtualChannel& vc, const DownlinkSessionParams& params);

DownlinkOutcome run_downlink_session(const VirtualChannel& vc, std::span<const Constellation> inputs,
                                     const BackhaulLink& link, const DownlinkSessionParams& params);

}  // namespace mcp
