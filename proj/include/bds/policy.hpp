#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "bds/decode.hpp"

namespace bds {

struct Decision {
  bool stop = false;
  std::size_t label = 0;
};

struct StopOutcome {
  std::size_t stopped_at = 0;  // grid index
  std::size_t emitted_label = 0;
  bool forced = false;     // emitted only because the last window was reached
  bool abstained = false;  // forced trial suppressed instead of emitted
  std::vector<bool> decisions;  // one entry per visited window, true only at the stop
};

/// A stopping rule evaluated window by window on a score trace. Implementations
/// are immutable and must stop when `is_last` is set.
class StoppingPolicy {
 public:
  virtual ~StoppingPolicy() = default;

  virtual Decision decide(const decode::ScoreVector& scores, std::size_t window,
                          bool is_last) const = 0;
  virtual decode::Similarity similarity() const { return decode::Similarity::inner; }
  virtual std::string name() const = 0;
};

enum class ForcedEmission { emit, abstain };

/// Walks the trace until the policy stops. A stop at the last window that the
/// policy would not have made otherwise is marked forced.
StopOutcome run_policy(const StoppingPolicy& policy, std::span<const decode::ScoreVector> trace,
                       ForcedEmission forced_mode = ForcedEmission::emit);

}  // namespace bds
