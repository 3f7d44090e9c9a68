#pragma once

#include <cstdint>
#include <queue>
#include <vector>

#include "contaski/types.hpp"

namespace contaski {

template <typename Payload>
struct SimEvent {
  SimTime fire_time;
  std::uint64_t sequence{0};
  Payload payload;
};

/// Min-queue ordered by (fire_time, sequence). Sequence numbers are assigned
/// at insertion and strictly increase, so equal timestamps pop in FIFO order.
template <typename Payload>
class EventQueue {
 public:
  using Event = SimEvent<Payload>;

  std::uint64_t push(SimTime at, Payload payload) {
    const auto seq = next_sequence_++;
    heap_.push(Event{at, seq, std::move(payload)});
    return seq;
  }

  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }
  const Event& top() const { return heap_.top(); }

  Event pop() {
    Event e = heap_.top();
    heap_.pop();
    return e;
  }

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.fire_time != b.fire_time) return a.fire_time > b.fire_time;
      return a.sequence > b.sequence;
    }
  };

  std::priority_queue<Event, std::vector<Event>, Later> heap_;
  std::uint64_t next_sequence_{0};
};

}  // namespace contaski
