// SPDX-License-Identifier: Apache-2.0
//
// Episodic replay with stored recurrent state. Every transition keeps the
// hidden state the agent held *before* processing its observation; a sampled
// sequence is initialized from the state stored with its first transition, or
// from the live learnable start state when that transition opens an episode.

#ifndef ACTRNN_REPLAY_HPP
#define ACTRNN_REPLAY_HPP

#include <cstddef>
#include <cstdint>
#include <deque>
#include <span>
#include <string_view>
#include <vector>

#include "actrnn/params.hpp"

namespace actrnn {

struct Transition {
  /// Pre-step state. Ignored (resolved to the live s0) when episode_start.
  std::vector<double> h_stored;
  std::size_t prev_action = 0;
  std::vector<double> obs;
  std::size_t action = 0;
  double reward = 0.0;
  std::vector<double> next_obs;
  bool terminal = false;
  bool episode_start = false;
};

/// How sequence-initial states are produced and maintained.
///  refresh: stored states, nudged by the initial-state gradient after updates
///  stale:   stored states, never modified after append
///  zero:    zero vector (episode starts still use s0)
enum class StateMode { kRefresh, kStale, kZero };

std::string_view to_string(StateMode mode);
StateMode parse_state_mode(std::string_view name);

/// Where a sampled transition sits in its sequence.
///  end:   the sampled transition is the last step; the sequence reaches back
///         up to tau steps, stopping at the episode start
///  start: the sampled transition is the first step; the sequence runs forward
///         up to tau steps, stopping at the episode end or the newest entry
enum class SequenceAnchor { kEnd, kStart };

std::string_view to_string(SequenceAnchor anchor);
SequenceAnchor parse_sequence_anchor(std::string_view name);

/// Global ids [first_id, anchor_id] of a sampled sequence plus its resolved
/// initial state.
struct SampledSequence {
  std::uint64_t first_id = 0;
  std::uint64_t anchor_id = 0;
  bool from_s0 = false;
  std::vector<double> h_init;

  std::size_t length() const { return static_cast<std::size_t>(anchor_id - first_id + 1); }
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity, StateMode mode = StateMode::kRefresh);

  std::size_t capacity() const { return slots_.size(); }
  std::size_t size() const { return size_; }
  StateMode mode() const { return mode_; }
  bool empty() const { return size_ == 0; }

  /// FIFO insert; evicts the oldest transition when full. Returns its id.
  std::uint64_t append(Transition t);

  /// Ids still held are [oldest_id(), next_id()).
  std::uint64_t oldest_id() const { return next_id_ - size_; }
  std::uint64_t next_id() const { return next_id_; }
  bool contains(std::uint64_t id) const { return id >= oldest_id() && id < next_id_; }
  const Transition& at(std::uint64_t id) const;

  /// One sequence ending at `anchor_id`, reaching back at most tau steps, cut
  /// at an episode start and at the oldest stored transition.
  SampledSequence sequence_ending_at(std::uint64_t anchor_id, std::size_t tau,
                                     std::span<const double> s0) const;

  SampledSequence sequence_starting_at(std::uint64_t first_id, std::size_t tau,
                                       std::span<const double> s0) const;

  /// `batch` sequences with anchors drawn uniformly over stored transitions.
  std::vector<SampledSequence> sample_sequences(std::size_t batch, std::size_t tau,
                                                std::span<const double> s0, Rng& rng,
                                                SequenceAnchor anchor = SequenceAnchor::kEnd) const;

  /// h_stored of the sequence's first transition -= lr * grad_h_init.
  /// No-op for episode-start sequences (s0 is a model parameter), for evicted
  /// ids, and outside refresh mode.
  void refresh_states(const SampledSequence& seq, std::span<const double> grad_h_init,
                      double lr);

 private:
  void resolve_initial_state(SampledSequence& seq, std::span<const double> s0) const;

  std::vector<Transition> slots_;
  std::size_t size_ = 0;
  std::uint64_t next_id_ = 0;
  StateMode mode_;
};

/// Trailing transitions of the current episode for replay-free training.
class OnlineHistory {
 public:
  explicit OnlineHistory(std::size_t tau) : tau_(tau) {}

  /// Starts a fresh window when t.episode_start.
  void push(Transition t);
  void clear() { window_.clear(); }
  std::size_t size() const { return window_.size(); }
  const Transition& operator[](std::size_t i) const { return window_[i]; }
  const Transition& back() const { return window_.back(); }

 private:
  std::size_t tau_;
  std::deque<Transition> window_;
};

/// The most recent <= tau transitions of `history` (never crossing an episode
/// start), oldest first.
std::vector<const Transition*> online_window(const OnlineHistory& history, std::size_t tau);

}  // namespace actrnn

#endif  // ACTRNN_REPLAY_HPP
