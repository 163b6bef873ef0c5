#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hsdn/time.hpp"
#include "hsdn/topology.hpp"

namespace hsdn {

enum class DropCause {
  kLinkDownAtSend,
  kLinkDownInFlight,
  kLinkLoss,
  kTtlExceeded,
  kDropRule,
  kNoRule,
  kTagOverflow,
  kParkTimeout,
};

const char* drop_cause_name(DropCause c);

struct Anomaly {
  enum class Kind { kLoop, kTtlExpiry, kDeadEnd };
  Kind kind;
  std::uint64_t packet_id = 0;
  NodeId node = 0;
  std::string detail;  // includes the rule ids involved
};

struct Incident {
  std::string kind;  // e.g. "unreconfigured-node", "uncovered-failure"
  std::string detail;
  SimTime t = 0;
};

// Per-trial failure reaction delay with its component breakdown.
// delay_us always equals the sum of the five components.
struct DelaySample {
  std::uint64_t trial = 0;
  std::string method;
  SimTime delay_us = 0;
  SimTime signal_up_us = 0;
  SimTime compute_us = 0;
  SimTime signal_down_us = 0;
  SimTime install_us = 0;
  SimTime retries_us = 0;
  bool censored = false;
};

struct MessageCounters {
  std::uint64_t heartbeats = 0;
  std::uint64_t lsas = 0;  // every transmission, originated and relayed
  std::map<std::uint32_t, std::uint64_t> lsa_originated;  // floods per node
  std::map<std::string, std::uint64_t> control_by_kind;

  std::uint64_t control_total() const {
    std::uint64_t n = 0;
    for (const auto& [k, v] : control_by_kind) n += v;
    return n;
  }
  std::uint64_t total() const { return heartbeats + lsas + control_total(); }
};

struct RunMetrics {
  // Packet conservation: generated == delivered + dropped_total() + in_flight_end.
  std::uint64_t generated = 0;
  std::uint64_t delivered = 0;
  std::uint64_t in_flight_end = 0;
  std::map<DropCause, std::uint64_t> dropped;

  MessageCounters messages;

  std::uint64_t rule_installs = 0;
  std::uint64_t rule_removes = 0;
  std::uint64_t table_overflows = 0;
  std::map<NodeId, std::uint64_t> table_high_water;

  std::uint64_t detections = 0;
  std::uint64_t reclusters = 0;
  std::uint64_t retags = 0;

  // LinkReports that reached the controller, by link. A failure was handled
  // locally iff its link never shows up here.
  std::map<std::string, std::uint64_t> link_reports_received;

  std::vector<Anomaly> anomalies;
  std::vector<Incident> incidents;

  std::uint64_t dropped_total() const {
    std::uint64_t n = 0;
    for (const auto& [c, v] : dropped) n += v;
    return n;
  }
  bool conservation_holds() const {
    return generated == delivered + dropped_total() + in_flight_end;
  }
  void drop(DropCause c) { ++dropped[c]; }
};

}  // namespace hsdn
