#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "hsdn/metrics.hpp"
#include "hsdn/rng.hpp"
#include "hsdn/time.hpp"
#include "hsdn/topology.hpp"
#include "hsdn/trace.hpp"

namespace hsdn {

// Raised for harness bugs and invalid scenario references; never caught
// inside the simulator.
class ScenarioError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class EventKind {
  kTimer,
  kPacketArrival,
  kLinkChange,
  kControlDelivery,
  kMark,
};

struct EventState {
  SimTime t = 0;
  std::uint64_t seq = 0;
  EventKind kind = EventKind::kTimer;
  std::string label;
  std::function<void()> fn;
  bool cancelled = false;
};

using EventHandle = std::shared_ptr<EventState>;

enum class TransmitClass { kDataPacket, kHeartbeat, kLsa };

// Outcome passed to the drop callback of a link transmission.
enum class TransmitDrop { kDownAtSend, kDownInFlight, kLoss };

// Per-message delivery bookkeeping for one reliable control-channel send.
// latency is the flight time of the attempt that delivered; retry_wait is
// the time between the first send and that attempt's send. Their sum plus
// the first-send instant gives the arrival instant exactly.
struct ControlDelivery {
  int attempts = 0;
  SimTime first_sent = 0;
  SimTime arrived_at = 0;
  SimTime latency = 0;
  SimTime retry_wait = 0;
};

struct ControlLatencyCfg {
  enum class Dist { kConstant, kUniform, kLognormal };
  Dist dist = Dist::kLognormal;
  SimTime constant = ms(20);
  SimTime lo = ms(10), hi = ms(30);    // uniform bounds
  SimTime median = ms(20);             // lognormal median (= exp(mu))
  double sigma = 0.5;                  // lognormal shape
  SimTime min = ms(1), max = ms(500);  // truncation bounds

  SimTime median_value() const;
};

struct ControlChannelCfg {
  ControlLatencyCfg latency;
  double loss = 0.0;
  SimTime rto = 0;  // 0 -> 3 x median latency
  int max_retries = 3;

  SimTime effective_rto() const {
    return rto > 0 ? rto : 3 * latency.median_value();
  }
};

// Deterministic single-threaded event loop with the authoritative topology
// and both message transports (per-link transmissions and the end-to-end
// control channel). Everything downstream of the seed is reproducible.
class Simulator {
 public:
  explicit Simulator(std::uint64_t seed);

  SimTime now() const { return now_; }
  std::uint64_t seed() const { return seed_; }

  TopologyView& topology() { return topo_; }
  const TopologyView& topology() const { return topo_; }

  RunMetrics& metrics() { return metrics_; }
  void set_trace(TraceSink* sink) { trace_ = sink; }

  // Scheduling in the past signals a harness bug and throws.
  EventHandle schedule(SimTime at, EventKind kind, std::string label,
                       std::function<void()> fn);
  EventHandle schedule_in(SimTime dt, EventKind kind, std::string label,
                          std::function<void()> fn) {
    return schedule(now_ + dt, kind, std::move(label), std::move(fn));
  }
  static void cancel(const EventHandle& h) {
    if (h) h->cancelled = true;
  }

  // Processes every pending event with fire_time <= t_end in (fire_time, seq)
  // order, then advances the clock to t_end. Returns the number fired.
  std::size_t run_until(SimTime t_end);

  // Named deterministic stream; created on first use.
  RngStream& rng(const std::string& label);

  void trace_event(const std::string& body);

  // --- topology dynamics -----------------------------------------------

  // Schedules a link up/down transition at time t. When a link goes down,
  // transmissions still in flight on it are dropped.
  void schedule_link_event(NodeId a, NodeId b, bool up, SimTime t);

  // --- link-layer transmission -------------------------------------------

  // One-hop transmission (data packet, heartbeat or LSA) over a topology
  // link. Uses the link's latency and loss probability from the true view.
  // Returns false if the link is already down at send time (on_drop is
  // invoked synchronously in that case).
  bool transmit(NodeId from, NodeId to, TransmitClass cls, std::string label,
                std::function<void()> on_rx,
                std::function<void(TransmitDrop)> on_drop = nullptr);

  // --- control channel -----------------------------------------------------

  void set_control_channel(const ControlChannelCfg& cfg) { ctrl_cfg_ = cfg; }
  const ControlChannelCfg& control_channel() const { return ctrl_cfg_; }

  // End-to-end control-plane send. Requires an up path between the two
  // endpoints at attempt time and again at arrival. If reliable, lost
  // attempts are retransmitted every RTO up to max_retries; exhaustion
  // invokes on_exhausted. kind_name is used for per-kind message metering.
  void send_control(NodeId from, NodeId to, const std::string& kind_name,
                    bool reliable,
                    std::function<void(const ControlDelivery&)> on_deliver,
                    std::function<void()> on_exhausted = nullptr);

  SimTime sample_control_latency();

 private:
  struct EventCmp {
    bool operator()(const EventHandle& x, const EventHandle& y) const {
      if (x->t != y->t) return x->t > y->t;
      return x->seq > y->seq;
    }
  };

  struct ControlSendState;
  void control_attempt(const std::shared_ptr<ControlSendState>& st);
  void apply_link_change(NodeId a, NodeId b, bool up);

  std::uint64_t seed_;
  SimTime now_ = 0;
  std::uint64_t next_seq_ = 0;
  std::priority_queue<EventHandle, std::vector<EventHandle>, EventCmp> queue_;
  std::map<std::string, RngStream> rngs_;
  TopologyView topo_;
  RunMetrics metrics_;
  TraceSink* trace_ = nullptr;
  ControlChannelCfg ctrl_cfg_;

  // In-flight transmissions per link, so a link-down event can drop them.
  struct InFlight {
    EventHandle ev;
    std::function<void(TransmitDrop)> on_drop;
  };
  std::map<LinkKey, std::map<std::uint64_t, InFlight>> in_flight_;
};

}  // namespace hsdn
