// SPDX-License-Identifier: Apache-2.0

#include "actrnn/replay.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace actrnn {

std::string_view to_string(StateMode mode) {
  switch (mode) {
    case StateMode::kRefresh: return "refresh";
    case StateMode::kStale: return "stale";
    case StateMode::kZero: return "zero";
  }
  return "?";
}

StateMode parse_state_mode(std::string_view name) {
  for (StateMode m : {StateMode::kRefresh, StateMode::kStale, StateMode::kZero})
    if (to_string(m) == name) return m;
  throw std::invalid_argument(fmt::format("unknown replay state mode '{}'", name));
}

std::string_view to_string(SequenceAnchor anchor) {
  return anchor == SequenceAnchor::kStart ? "start" : "end";
}

SequenceAnchor parse_sequence_anchor(std::string_view name) {
  if (name == "end") return SequenceAnchor::kEnd;
  if (name == "start") return SequenceAnchor::kStart;
  throw std::invalid_argument(fmt::format("unknown sequence anchor '{}'", name));
}

ReplayBuffer::ReplayBuffer(std::size_t capacity, StateMode mode) : slots_(capacity), mode_(mode) {
  if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
}

std::uint64_t ReplayBuffer::append(Transition t) {
  if (!t.episode_start) {
    for (double v : t.h_stored)
      if (!std::isfinite(v)) throw std::invalid_argument("replay: non-finite stored state");
  }
  const std::uint64_t id = next_id_++;
  slots_[id % slots_.size()] = std::move(t);
  size_ = std::min(size_ + 1, slots_.size());
  return id;
}

const Transition& ReplayBuffer::at(std::uint64_t id) const {
  if (!contains(id))
    throw std::out_of_range(fmt::format("replay id {} not in [{}, {})", id, oldest_id(), next_id_));
  return slots_[id % slots_.size()];
}

void ReplayBuffer::resolve_initial_state(SampledSequence& seq, std::span<const double> s0) const {
  const Transition& first = at(seq.first_id);
  seq.from_s0 = first.episode_start;
  if (seq.from_s0)
    seq.h_init.assign(s0.begin(), s0.end());
  else if (mode_ == StateMode::kZero)
    seq.h_init.assign(s0.size(), 0.0);
  else
    seq.h_init = first.h_stored;
}

SampledSequence ReplayBuffer::sequence_ending_at(std::uint64_t anchor_id, std::size_t tau,
                                                 std::span<const double> s0) const {
  if (tau == 0) throw std::invalid_argument("truncation tau must be positive");
  SampledSequence seq;
  seq.anchor_id = anchor_id;
  seq.first_id = anchor_id;
  // Walk back while the current first transition is not an episode start.
  while (seq.length() < tau && !at(seq.first_id).episode_start && seq.first_id > oldest_id())
    --seq.first_id;
  resolve_initial_state(seq, s0);
  return seq;
}

SampledSequence ReplayBuffer::sequence_starting_at(std::uint64_t first_id, std::size_t tau,
                                                   std::span<const double> s0) const {
  if (tau == 0) throw std::invalid_argument("truncation tau must be positive");
  SampledSequence seq;
  seq.first_id = first_id;
  seq.anchor_id = first_id;
  // Walk forward until tau steps, a terminal step, the next episode's start
  // or the newest stored transition.
  while (seq.length() < tau && !at(seq.anchor_id).terminal && seq.anchor_id + 1 < next_id_ &&
         !at(seq.anchor_id + 1).episode_start)
    ++seq.anchor_id;
  resolve_initial_state(seq, s0);
  return seq;
}

std::vector<SampledSequence> ReplayBuffer::sample_sequences(std::size_t batch, std::size_t tau,
                                                            std::span<const double> s0,
                                                            Rng& rng,
                                                            SequenceAnchor anchor) const {
  if (empty()) throw std::logic_error("cannot sample from an empty replay buffer");
  std::vector<SampledSequence> out;
  out.reserve(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    const std::uint64_t id = oldest_id() + uniform_index(rng, size_);
    out.push_back(anchor == SequenceAnchor::kEnd ? sequence_ending_at(id, tau, s0)
                                                 : sequence_starting_at(id, tau, s0));
  }
  return out;
}

void ReplayBuffer::refresh_states(const SampledSequence& seq, std::span<const double> grad_h_init,
                                  double lr) {
  if (mode_ != StateMode::kRefresh || seq.from_s0 || !contains(seq.first_id)) return;
  Transition& t = slots_[seq.first_id % slots_.size()];
  if (t.episode_start) return;
  if (grad_h_init.size() != t.h_stored.size())
    throw std::invalid_argument("refresh_states: gradient length differs from stored state");
  for (std::size_t i = 0; i < grad_h_init.size(); ++i) t.h_stored[i] -= lr * grad_h_init[i];
}

void OnlineHistory::push(Transition t) {
  if (t.episode_start) window_.clear();
  window_.push_back(std::move(t));
  while (window_.size() > tau_) window_.pop_front();
}

std::vector<const Transition*> online_window(const OnlineHistory& history, std::size_t tau) {
  std::vector<const Transition*> out;
  const std::size_t n = history.size();
  std::size_t start = n > tau ? n - tau : 0;
  // The history already starts at the latest episode start; cut anyway in case
  // tau is smaller than the history's own limit.
  for (std::size_t i = n; i-- > start;) {
    if (history[i].episode_start) {
      start = i;
      break;
    }
  }
  for (std::size_t i = start; i < n; ++i) out.push_back(&history[i]);
  return out;
}

}  // namespace actrnn
