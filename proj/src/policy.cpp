#include "bds/policy.hpp"

#include <stdexcept>

namespace bds {

StopOutcome run_policy(const StoppingPolicy& policy, std::span<const decode::ScoreVector> trace,
                       ForcedEmission forced_mode) {
  if (trace.empty()) throw std::invalid_argument("run_policy: empty score trace");
  StopOutcome out;
  for (std::size_t k = 0; k < trace.size(); ++k) {
    const Decision d = policy.decide(trace[k], k, false);
    if (d.stop) {
      out.stopped_at = k;
      out.emitted_label = d.label;
      out.decisions.push_back(true);
      return out;
    }
    if (k + 1 < trace.size()) out.decisions.push_back(false);
  }
  const std::size_t last = trace.size() - 1;
  const Decision d = policy.decide(trace[last], last, true);
  out.stopped_at = last;
  out.emitted_label = d.label;
  out.forced = true;
  out.abstained = forced_mode == ForcedEmission::abstain;
  out.decisions.push_back(true);
  return out;
}

}  // namespace bds
