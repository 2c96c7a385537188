#include "poselift/pose.hpp"

namespace poselift {

HypothesisSet::HypothesisSet(std::vector<PoseSeq3D> hypotheses) : hypotheses_(std::move(hypotheses)) {
  if (hypotheses_.empty()) throw InvalidArgument("hypothesis set must hold at least one hypothesis");
  for (const auto& h : hypotheses_) {
    require_same_layout(hypotheses_.front(), h, "hypothesis set");
  }
}

}  // namespace poselift
