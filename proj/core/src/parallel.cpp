#include "mirrormdp/parallel.hpp"

#include <cmath>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <thread>

namespace mirrormdp {

namespace {

/// Ordered, reliable FIFO channel between two actors.
class Channel {
 public:
  void push(Message msg) {
    {
      std::lock_guard lock(mu_);
      queue_.push_back(std::move(msg));
    }
    cv_.notify_one();
  }

  /// Blocks until a message or channel closure.
  std::optional<Message> pop() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return !queue_.empty() || closed_; });
    if (queue_.empty()) return std::nullopt;
    Message msg = std::move(queue_.front());
    queue_.pop_front();
    return msg;
  }

  void close() {
    {
      std::lock_guard lock(mu_);
      closed_ = true;
    }
    cv_.notify_all();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Message> queue_;
  bool closed_ = false;
};

int state_id_bits_for(int num_states) {
  int bits = 0;
  while ((1 << bits) < num_states) ++bits;
  return std::max(bits, 1);
}

}  // namespace

WorkerState WorkerState::make(const AmdpProgram& program, const AmdpStepPlan& plan, int pair,
                              std::uint64_t master_seed) {
  WorkerState w;
  w.pair = pair;
  w.pair_state = program.mdp().pair_state(pair);
  w.mdp = &program.mdp();
  w.p_tilde_row = program.p_tilde().row(pair);
  w.cache = program.mdp().reward(pair);  // c^0_(j,a) = r_(j,a)
  w.k = 0;
  w.rng = Rng(derive_stream(master_seed, static_cast<std::uint64_t>(pair)));
  w.v_bar_mirror = 0.0;
  w.h_mirror = Eigen::VectorXd::Zero(program.mdp().num_states());
  w.eta = plan.eta;
  w.box_radius = program.box_radius();
  return w;
}

std::optional<Message> worker_handle(WorkerState& state, const Message& msg) {
  if (std::holds_alternative<CheckConstraints>(msg)) {
    return Message(ConstraintValue{state.pair, state.cache});
  }
  if (const auto* req = std::get_if<SampleRequest>(&msg)) {
    if (req->pair != state.pair)
      throw ProtocolError("worker_handle: sample request for a pair this node does not own");
    const auto row = state.mdp->row(state.pair);
    const int s = sample_categorical(
        std::span<const double>(row.data(), static_cast<std::size_t>(row.size())), state.rng);
    return Message(SampleReply{state.pair, s});
  }
  if (std::holds_alternative<ProductiveStep>(msg)) {
    const StepDeltas d = apply_productive_step(state.v_bar_mirror, state.eta);
    if (d.clamped)
      state.cache += -d.dv;
    else
      state.cache += state.eta;  // Eq.-(13) fast path
    ++state.k;
    return std::nullopt;
  }
  if (const auto* step = std::get_if<NonProductiveStep>(&msg)) {
    const StepDeltas d = apply_nonproductive_step(state.v_bar_mirror, state.h_mirror, step->i,
                                                  step->s, state.eta, state.box_radius);
    // Same canonical-vs-exact branch as the sequential cache, so both sides
    // perform identical float arithmetic.
    StepDeltas used = d;
    if (!d.clamped) {
      used.dv = state.eta;
      used.ds = step->s != step->i ? -state.eta : 0.0;
      used.di = step->s != step->i ? state.eta : 0.0;
    }
    state.cache += cache_delta_nonproductive(used.dv, step->i, used.di, step->s, used.ds,
                                             state.pair_state, state.p_tilde_row[step->s],
                                             state.p_tilde_row[step->i]);
    ++state.k;
    return std::nullopt;
  }
  if (std::holds_alternative<Shutdown>(msg)) return std::nullopt;
  throw ProtocolError("worker_handle: unexpected message kind");
}

namespace {

/// Moves messages between the head and the pair nodes. kInline dispatches
/// synchronously in pair order; kThreads runs one OS thread per physical
/// worker with FIFO channels, nodes assigned round-robin.
class NodeTransport {
 public:
  NodeTransport(std::vector<WorkerState> nodes, int num_workers, Scheduler scheduler)
      : nodes_(std::move(nodes)), num_workers_(num_workers), scheduler_(scheduler) {
    if (scheduler_ == Scheduler::kThreads) {
      to_worker_ = std::vector<Channel>(static_cast<std::size_t>(num_workers_));
      threads_.reserve(static_cast<std::size_t>(num_workers_));
      for (int w = 0; w < num_workers_; ++w)
        threads_.emplace_back([this, w] { worker_loop(w); });
    }
  }

  ~NodeTransport() {
    if (scheduler_ == Scheduler::kThreads) {
      for (auto& ch : to_worker_) ch.close();
      for (auto& t : threads_) {
        if (t.joinable()) t.join();
      }
    }
  }

  int num_nodes() const { return static_cast<int>(nodes_.size()); }

  /// Sends msg to every pair node; collects replies indexed by pair id.
  /// Returns the number of replies.
  int broadcast(const Message& msg, std::vector<double>* values_by_pair) {
    if (scheduler_ == Scheduler::kInline) {
      int replies = 0;
      for (auto& node : nodes_) {
        auto reply = worker_handle(node, msg);
        if (reply) {
          ++replies;
          if (values_by_pair) {
            const auto& cv = std::get<ConstraintValue>(*reply);
            (*values_by_pair)[static_cast<std::size_t>(cv.pair)] = cv.value;
          }
        }
      }
      rethrow_if_failed();
      return replies;
    }
    for (auto& ch : to_worker_) ch.push(msg);
    int expected = 0;
    if (std::holds_alternative<CheckConstraints>(msg)) expected = num_nodes();
    int replies = 0;
    while (replies < expected) {
      auto reply = from_workers_.pop();
      if (!reply) {
        rethrow_if_failed();
        throw ProtocolError("run_parallel: worker channel closed mid-barrier");
      }
      const auto& cv = std::get<ConstraintValue>(*reply);
      if (values_by_pair) (*values_by_pair)[static_cast<std::size_t>(cv.pair)] = cv.value;
      ++replies;
    }
    rethrow_if_failed();
    return replies;
  }

  /// Point-to-point sample exchange with the owner of `pair`.
  int request_sample(int pair) {
    if (scheduler_ == Scheduler::kInline) {
      auto reply = worker_handle(nodes_[static_cast<std::size_t>(pair)], Message(SampleRequest{pair}));
      if (!reply) throw ProtocolError("run_parallel: missing sample reply");
      return std::get<SampleReply>(*reply).state;
    }
    to_worker_[static_cast<std::size_t>(owner_of(pair))].push(Message(SampleRequest{pair}));
    auto reply = from_workers_.pop();
    if (!reply) {
      rethrow_if_failed();
      throw ProtocolError("run_parallel: worker channel closed awaiting sample");
    }
    return std::get<SampleReply>(*reply).state;
  }

 private:
  int owner_of(int pair) const { return pair % num_workers_; }

  void worker_loop(int worker_id) {
    try {
      auto& inbox = to_worker_[static_cast<std::size_t>(worker_id)];
      for (;;) {
        auto msg = inbox.pop();
        if (!msg) return;  // channel closed
        if (std::holds_alternative<Shutdown>(*msg)) return;
        if (const auto* req = std::get_if<SampleRequest>(&*msg)) {
          auto reply = worker_handle(nodes_[static_cast<std::size_t>(req->pair)], *msg);
          from_workers_.push(std::move(*reply));
          continue;
        }
        for (int pair = worker_id; pair < num_nodes(); pair += num_workers_) {
          auto reply = worker_handle(nodes_[static_cast<std::size_t>(pair)], *msg);
          if (reply) from_workers_.push(std::move(*reply));
        }
      }
    } catch (...) {
      {
        std::lock_guard lock(error_mu_);
        if (!error_) error_ = std::current_exception();
      }
      from_workers_.close();
    }
  }

  void rethrow_if_failed() {
    std::lock_guard lock(error_mu_);
    if (error_) std::rethrow_exception(error_);
  }

  std::vector<WorkerState> nodes_;
  int num_workers_;
  Scheduler scheduler_;
  std::vector<Channel> to_worker_;
  Channel from_workers_;
  std::vector<std::thread> threads_;
  std::mutex error_mu_;
  std::exception_ptr error_;
};

}  // namespace

ParallelRunResult run_parallel(const AmdpProgram& program, const SolverConfig& cfg,
                               int num_workers, Scheduler scheduler) {
  const Mdp& mdp = program.mdp();
  const int a_tot = mdp.num_pairs();
  if (num_workers < 1 || num_workers > a_tot)
    throw std::invalid_argument("run_parallel: need 1 <= num_workers <= A_tot");
  const AmdpStepPlan plan = AmdpStepPlan::from_config(cfg);

  std::vector<WorkerState> nodes;
  nodes.reserve(static_cast<std::size_t>(a_tot));
  for (int p = 0; p < a_tot; ++p) nodes.push_back(WorkerState::make(program, plan, p, cfg.seed));
  NodeTransport transport(std::move(nodes), num_workers, scheduler);

  double v_bar = 0.0;
  Eigen::VectorXd h = Eigen::VectorXd::Zero(mdp.num_states());
  double v_sum = 0.0;
  Eigen::VectorXd h_sum = Eigen::VectorXd::Zero(mdp.num_states());
  std::vector<std::int64_t> counts(static_cast<std::size_t>(a_tot), 0);
  std::int64_t productive = 0;
  std::int64_t nonproductive = 0;
  std::vector<double> cache_values(static_cast<std::size_t>(a_tot), 0.0);
  std::vector<TraceRecord> trace;
  if (cfg.record_trace) trace.reserve(static_cast<std::size_t>(cfg.iterations));
  CommStats comm;
  comm.state_id_bits = state_id_bits_for(mdp.num_states());
  const auto t0 = std::chrono::steady_clock::now();

  for (std::int64_t k = 0; k < cfg.iterations; ++k) {
    comm.check_messages += a_tot;
    comm.constraint_replies += transport.broadcast(Message(CheckConstraints{}), &cache_values);

    int argmax = 0;
    double max_c = cache_values[0];
    for (int p = 1; p < a_tot; ++p) {
      if (cache_values[static_cast<std::size_t>(p)] > max_c) {
        max_c = cache_values[static_cast<std::size_t>(p)];
        argmax = p;
      }
    }
    const bool is_productive = max_c <= plan.threshold();

    TraceRecord rec;
    if (cfg.record_trace) {
      rec.k = k;
      rec.productive = is_productive;
      rec.max_approx_constraint = max_c;
      rec.objective_value = v_bar;
    }

    ++comm.iterations;
    if (is_productive) {
      ++comm.productive_iterations;
      v_sum += v_bar;
      h_sum += h;
      ++productive;
      apply_productive_step(v_bar, plan.eta);
      transport.broadcast(Message(ProductiveStep{}), nullptr);
      comm.productive_step_broadcasts += a_tot;
    } else {
      ++comm.nonproductive_iterations;
      ++nonproductive;
      ++counts[static_cast<std::size_t>(argmax)];
      if (cfg.record_trace) rec.chosen_constraint = argmax;
      const int i = mdp.pair_state(argmax);
      ++comm.sample_requests;
      const int s = transport.request_sample(argmax);
      ++comm.sample_replies;
      apply_nonproductive_step(v_bar, h, i, s, plan.eta, program.box_radius());
      transport.broadcast(Message(NonProductiveStep{i, s}), nullptr);
      comm.nonproductive_step_broadcasts += a_tot;
    }

    if (cfg.record_trace) {
      rec.elapsed =
          std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - t0);
      trace.push_back(rec);
    }
  }

  transport.broadcast(Message(Shutdown{}), nullptr);
  comm.shutdown_messages += a_tot;

  if (productive == 0) throw NoProductiveStepsError(std::move(trace));

  ParallelRunResult out;
  out.x_hat.v_bar = v_sum / static_cast<double>(productive);
  out.x_hat.h = h_sum / static_cast<double>(productive);
  out.dual = DualEstimate::from_counts(mdp, counts, productive);
  out.productive_count = productive;
  out.nonproductive_count = nonproductive;
  out.trace = std::move(trace);
  out.comm = comm;
  return out;
}

}  // namespace mirrormdp
