#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "mirrormdp/amdp.hpp"

namespace mirrormdp {

// Head <-> worker wire vocabulary. One logical node per state-action pair;
// a physical worker may host several nodes.
struct CheckConstraints {};
struct ConstraintValue {
  int pair;
  double value;
};
struct SampleRequest {
  int pair;
};
struct SampleReply {
  int pair;
  int state;
};
struct ProductiveStep {};
struct NonProductiveStep {
  int i;  // state of the argmax pair
  int s;  // sampled next state
};
struct Shutdown {};

using Message = std::variant<CheckConstraints, ConstraintValue, SampleRequest, SampleReply,
                             ProductiveStep, NonProductiveStep, Shutdown>;

/// Per-pair node state. The node mirrors the head's v_bar and h evolution
/// (deterministic given the step broadcasts), which lets it derive exact
/// cache deltas even when a step clamps at the box boundary.
struct WorkerState {
  int pair = -1;
  int pair_state = -1;
  const Mdp* mdp = nullptr;          // true kernel, sampling only
  Eigen::VectorXd p_tilde_row;       // empirical row, constraint values
  double cache = 0.0;
  std::int64_t k = 0;
  Rng rng{0};
  double v_bar_mirror = 0.0;
  Eigen::VectorXd h_mirror;
  double eta = 0.0;
  double box_radius = 0.0;

  static WorkerState make(const AmdpProgram& program, const AmdpStepPlan& plan, int pair,
                          std::uint64_t master_seed);
};

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One protocol step of a pair node. CheckConstraints never mutates the
/// state; SampleRequest draws from the true row with the node's stream;
/// step broadcasts advance the cache. Returns the reply, if any.
std::optional<Message> worker_handle(WorkerState& state, const Message& msg);

/// Message counts at the pair-node granularity (independent of how nodes are
/// multiplexed onto physical workers). Bits convention: 1 tag bit per message
/// plus ceil(log2 |S|) bits per carried state id.
struct CommStats {
  std::int64_t iterations = 0;
  std::int64_t productive_iterations = 0;
  std::int64_t nonproductive_iterations = 0;
  std::int64_t check_messages = 0;
  std::int64_t constraint_replies = 0;
  std::int64_t productive_step_broadcasts = 0;
  std::int64_t nonproductive_step_broadcasts = 0;  // each carries (i, s)
  std::int64_t sample_requests = 0;
  std::int64_t sample_replies = 0;  // each carries one state id
  std::int64_t shutdown_messages = 0;
  int state_id_bits = 0;

  std::int64_t total_messages() const {
    return check_messages + constraint_replies + productive_step_broadcasts +
           nonproductive_step_broadcasts + sample_requests + sample_replies + shutdown_messages;
  }
  std::int64_t payload_bits_estimate() const {
    return total_messages() + (sample_replies + 2 * nonproductive_step_broadcasts) *
                                  static_cast<std::int64_t>(state_id_bits);
  }
};

enum class Scheduler {
  kThreads,  // one OS thread per worker, FIFO channels
  kInline,   // single-threaded deterministic scheduler (CI mode)
};

struct ParallelRunResult {
  PrimalPoint x_hat;
  DualEstimate dual;
  std::int64_t productive_count = 0;
  std::int64_t nonproductive_count = 0;
  std::vector<TraceRecord> trace;
  CommStats comm;
};

/// Algorithm-2 execution: the head broadcasts CheckConstraints, barriers on
/// all replies, picks the argmax pair (lowest id on ties), then either
/// broadcasts ProductiveStep or fetches one sample from the argmax pair's
/// node and broadcasts NonProductiveStep(i, s). Outputs are bit-identical to
/// the sequential solve under the same master seed for any worker count and
/// either scheduler.
ParallelRunResult run_parallel(const AmdpProgram& program, const SolverConfig& cfg,
                               int num_workers, Scheduler scheduler = Scheduler::kThreads);

}  // namespace mirrormdp
