#include "hsdn/sim.hpp"

#include <algorithm>
#include <cmath>

namespace hsdn {

SimTime ControlLatencyCfg::median_value() const {
  switch (dist) {
    case Dist::kConstant:
      return constant;
    case Dist::kUniform:
      return (lo + hi) / 2;
    case Dist::kLognormal:
      return median;
  }
  return constant;
}

Simulator::Simulator(std::uint64_t seed) : seed_(seed) {}

EventHandle Simulator::schedule(SimTime at, EventKind kind, std::string label,
                                std::function<void()> fn) {
  if (at < now_)
    throw ScenarioError("schedule in the past: t=" + std::to_string(at) +
                        " now=" + std::to_string(now_) + " label=" + label);
  auto ev = std::make_shared<EventState>();
  ev->t = at;
  ev->seq = next_seq_++;
  ev->kind = kind;
  ev->label = std::move(label);
  ev->fn = std::move(fn);
  queue_.push(ev);
  return ev;
}

std::size_t Simulator::run_until(SimTime t_end) {
  std::size_t fired = 0;
  while (!queue_.empty()) {
    EventHandle ev = queue_.top();
    if (ev->t > t_end) break;
    queue_.pop();
    if (ev->cancelled) continue;
    now_ = ev->t;
    if (trace_) trace_->emit({ev->t, ev->seq, ev->label});
    ++fired;
    ev->fn();
  }
  now_ = t_end;
  return fired;
}

RngStream& Simulator::rng(const std::string& label) {
  auto it = rngs_.find(label);
  if (it == rngs_.end())
    it = rngs_.emplace(label, RngStream(seed_, label)).first;
  return it->second;
}

void Simulator::trace_event(const std::string& body) {
  if (trace_) trace_->emit({now_, next_seq_++, body});
}

void Simulator::schedule_link_event(NodeId a, NodeId b, bool up, SimTime t) {
  if (!topo_.has_link(a, b))
    throw ScenarioError("link event references unknown link " +
                        LinkKey(a, b).str());
  schedule(t, EventKind::kLinkChange,
           "link_change link=" + LinkKey(a, b).str() +
               " up=" + (up ? std::string("1") : std::string("0")),
           [this, a, b, up] { apply_link_change(a, b, up); });
}

void Simulator::apply_link_change(NodeId a, NodeId b, bool up) {
  topo_.set_link_up(a, b, up);
  if (up) return;
  // Drop whatever is still in flight on the downed link.
  auto it = in_flight_.find(LinkKey(a, b));
  if (it == in_flight_.end()) return;
  auto pending = std::move(it->second);
  in_flight_.erase(it);
  for (auto& [seq, inf] : pending) {
    cancel(inf.ev);
    if (inf.on_drop) inf.on_drop(TransmitDrop::kDownInFlight);
  }
}

bool Simulator::transmit(NodeId from, NodeId to, TransmitClass cls,
                         std::string label, std::function<void()> on_rx,
                         std::function<void(TransmitDrop)> on_drop) {
  const LinkKey key(from, to);
  const LinkAttr& attr = topo_.attr(from, to);
  switch (cls) {
    case TransmitClass::kHeartbeat:
      ++metrics_.messages.heartbeats;
      break;
    case TransmitClass::kLsa:
      ++metrics_.messages.lsas;
      break;
    case TransmitClass::kDataPacket:
      break;
  }
  if (!attr.up) {
    if (on_drop) on_drop(TransmitDrop::kDownAtSend);
    return false;
  }
  if (attr.loss_prob > 0.0 && rng("link_loss").bernoulli(attr.loss_prob)) {
    if (on_drop) on_drop(TransmitDrop::kLoss);
    return true;
  }
  auto ev = schedule_in(attr.latency, EventKind::kPacketArrival,
                        std::move(label), nullptr);
  in_flight_[key][ev->seq] = InFlight{ev, on_drop};
  const std::uint64_t ev_seq = ev->seq;
  ev->fn = [this, key, ev_seq, cb = std::move(on_rx)] {
    auto it = in_flight_.find(key);
    if (it != in_flight_.end()) {
      it->second.erase(ev_seq);
      if (it->second.empty()) in_flight_.erase(it);
    }
    cb();
  };
  return true;
}

SimTime Simulator::sample_control_latency() {
  const ControlLatencyCfg& c = ctrl_cfg_.latency;
  switch (c.dist) {
    case ControlLatencyCfg::Dist::kConstant:
      return c.constant;
    case ControlLatencyCfg::Dist::kUniform: {
      double v = rng("ctrl_latency").uniform(static_cast<double>(c.lo),
                                             static_cast<double>(c.hi));
      return std::clamp<SimTime>(std::llround(v), c.min, c.max);
    }
    case ControlLatencyCfg::Dist::kLognormal: {
      const double mu = std::log(static_cast<double>(c.median));
      double v = rng("ctrl_latency").lognormal(mu, c.sigma);
      return std::clamp<SimTime>(std::llround(v), c.min, c.max);
    }
  }
  return c.constant;
}

struct Simulator::ControlSendState {
  NodeId from = 0, to = 0;
  std::string kind;
  bool reliable = true;
  int attempt = 0;  // attempts made so far
  SimTime first_sent = 0;
  bool delivered = false;
  bool exhausted = false;
  std::function<void(const ControlDelivery&)> on_deliver;
  std::function<void()> on_exhausted;
};

void Simulator::send_control(
    NodeId from, NodeId to, const std::string& kind_name, bool reliable,
    std::function<void(const ControlDelivery&)> on_deliver,
    std::function<void()> on_exhausted) {
  auto st = std::make_shared<ControlSendState>();
  st->from = from;
  st->to = to;
  st->kind = kind_name;
  st->reliable = reliable;
  st->first_sent = now_;
  st->on_deliver = std::move(on_deliver);
  st->on_exhausted = std::move(on_exhausted);
  control_attempt(st);
}

void Simulator::control_attempt(const std::shared_ptr<ControlSendState>& st) {
  if (st->delivered || st->exhausted) return;
  ++st->attempt;
  ++metrics_.messages.control_by_kind[st->kind];
  trace_event("ctrl_tx kind=" + st->kind + " from=" + std::to_string(st->from) +
              " to=" + std::to_string(st->to) +
              " attempt=" + std::to_string(st->attempt));

  const SimTime sent_at = now_;
  const bool reachable = topo_.reachable(st->from, st->to);
  const bool lost =
      !reachable || (ctrl_cfg_.loss > 0.0 && rng("ctrl_loss").bernoulli(ctrl_cfg_.loss));
  const SimTime latency = sample_control_latency();

  if (!lost) {
    schedule_in(latency, EventKind::kControlDelivery,
                "ctrl_rx kind=" + st->kind + " to=" + std::to_string(st->to),
                [this, st, sent_at, latency] {
                  if (st->delivered || st->exhausted) return;
                  if (!topo_.reachable(st->from, st->to)) return;
                  st->delivered = true;
                  ControlDelivery d;
                  d.attempts = st->attempt;
                  d.first_sent = st->first_sent;
                  d.arrived_at = now_;
                  d.latency = latency;
                  d.retry_wait = sent_at - st->first_sent;
                  if (st->on_deliver) st->on_deliver(d);
                });
  }

  if (!st->reliable) return;
  const SimTime rto = ctrl_cfg_.effective_rto();
  if (st->attempt <= ctrl_cfg_.max_retries) {
    schedule_in(rto, EventKind::kTimer, "ctrl_rto kind=" + st->kind,
                [this, st] {
                  if (!st->delivered) control_attempt(st);
                });
  } else {
    schedule_in(rto, EventKind::kTimer, "ctrl_exhaust kind=" + st->kind,
                [this, st] {
                  if (st->delivered) return;
                  st->exhausted = true;
                  trace_event("ctrl_exhausted kind=" + st->kind +
                              " from=" + std::to_string(st->from) +
                              " to=" + std::to_string(st->to));
                  if (st->on_exhausted) st->on_exhausted();
                });
  }
}

const char* drop_cause_name(DropCause c) {
  switch (c) {
    case DropCause::kLinkDownAtSend: return "link_down_at_send";
    case DropCause::kLinkDownInFlight: return "link_down_in_flight";
    case DropCause::kLinkLoss: return "link_loss";
    case DropCause::kTtlExceeded: return "ttl_exceeded";
    case DropCause::kDropRule: return "drop_rule";
    case DropCause::kNoRule: return "no_rule";
    case DropCause::kTagOverflow: return "tag_overflow";
    case DropCause::kParkTimeout: return "park_timeout";
  }
  return "unknown";
}

}  // namespace hsdn
