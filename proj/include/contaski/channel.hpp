#pragma once

#include <algorithm>
#include <map>
#include <stdexcept>
#include <vector>

#include "contaski/rng.hpp"
#include "contaski/types.hpp"

namespace contaski {

struct ChannelModel {
  double range_m{50.0};
  SimTime delay{SimTime::from_ms(2)};
  double loss_prob{0.0};
  /// Loss on links to or from the access point, which ignore range.
  double ap_loss_prob{0.0};
};

enum class DeliveryOutcome { kDelivered, kLost, kOutOfRange };

struct DeliveryPlan {
  NodeId recipient;
  DeliveryOutcome outcome{DeliveryOutcome::kDelivered};
  SimTime at;
};

/// Unit-disk radio with fixed delay and independent Bernoulli loss. The
/// access point reaches every node regardless of distance.
class Channel {
 public:
  Channel(ChannelModel model, std::map<NodeId, Position> positions, RandomStream& loss)
      : model_(model), positions_(std::move(positions)), loss_(loss) {
    if (!(model_.range_m > 0.0) || model_.delay.us <= 0 || model_.loss_prob < 0.0 || model_.loss_prob > 1.0) {
      throw std::invalid_argument("invalid channel model");
    }
  }

  const ChannelModel& model() const { return model_; }

  bool in_range(NodeId a, NodeId b) const {
    if (a == kAccessPoint || b == kAccessPoint) return true;
    return distance(positions_.at(a), positions_.at(b)) <= model_.range_m;
  }

  /// Ground-truth adjacency: every other node within range, sorted by id.
  std::vector<NodeId> neighbors_of(NodeId n) const {
    std::vector<NodeId> out;
    for (const auto& [id, pos] : positions_) {
      if (id != n && in_range(n, id)) out.push_back(id);
    }
    return out;
  }

  /// Radio broadcast to every node in range. Loss draws are taken in
  /// ascending recipient order.
  std::vector<DeliveryPlan> broadcast(NodeId sender, SimTime now) {
    std::vector<DeliveryPlan> out;
    for (const auto& [id, pos] : positions_) {
      if (id == sender || !in_range(sender, id)) continue;
      out.push_back(draw(sender, id, now));
    }
    return out;
  }

  /// Directed copies to an explicit recipient list, in ascending id order.
  std::vector<DeliveryPlan> multicast(NodeId sender, std::vector<NodeId> recipients, SimTime now) {
    std::sort(recipients.begin(), recipients.end());
    std::vector<DeliveryPlan> out;
    out.reserve(recipients.size());
    for (const auto& r : recipients) out.push_back(unicast(sender, r, now));
    return out;
  }

  DeliveryPlan unicast(NodeId sender, NodeId recipient, SimTime now) {
    if (recipient != kAccessPoint && !positions_.count(recipient)) {
      throw std::out_of_range("unknown recipient " + to_string(recipient));
    }
    if (!in_range(sender, recipient)) return DeliveryPlan{recipient, DeliveryOutcome::kOutOfRange, now};
    return draw(sender, recipient, now);
  }

 private:
  DeliveryPlan draw(NodeId sender, NodeId recipient, SimTime now) {
    const bool ap_link = sender == kAccessPoint || recipient == kAccessPoint;
    const double p = ap_link ? model_.ap_loss_prob : model_.loss_prob;
    const bool lost = loss_.bernoulli(p);
    return DeliveryPlan{recipient, lost ? DeliveryOutcome::kLost : DeliveryOutcome::kDelivered, now + model_.delay};
  }

  ChannelModel model_;
  std::map<NodeId, Position> positions_;
  RandomStream& loss_;
};

}  // namespace contaski
