#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "hsdn/time.hpp"

namespace hsdn {

// One fired event, already rendered to a key=value line body. Lines are the
// unit of the determinism contract: two runs with the same (config, seed)
// produce byte-identical sequences.
struct TraceRecord {
  SimTime t = 0;
  std::uint64_t seq = 0;
  std::string body;

  std::string line() const {
    return "t=" + std::to_string(t) + " seq=" + std::to_string(seq) + " " + body;
  }
};

class TraceSink {
 public:
  virtual ~TraceSink() = default;
  virtual void emit(const TraceRecord& rec) = 0;
};

class MemoryTraceSink : public TraceSink {
 public:
  void emit(const TraceRecord& rec) override { records_.push_back(rec); }
  const std::vector<TraceRecord>& records() const { return records_; }
  std::string text() const {
    std::string out;
    for (const auto& r : records_) {
      out += r.line();
      out += '\n';
    }
    return out;
  }

 private:
  std::vector<TraceRecord> records_;
};

class StreamTraceSink : public TraceSink {
 public:
  explicit StreamTraceSink(std::ostream& os) : os_(os) {}
  void emit(const TraceRecord& rec) override { os_ << rec.line() << '\n'; }

 private:
  std::ostream& os_;
};

}  // namespace hsdn
