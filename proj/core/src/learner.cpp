// SPDX-License-Identifier: Apache-2.0

#include "actrnn/learner.hpp"

#include <stdexcept>

namespace actrnn {

std::vector<double> CellRunner::step(const CellParams& params, std::span<const double> h,
                                     std::span<const double> obs, std::size_t prev_action) {
  tape_.reset(params.values);
  Var hv = tape_.constant(h);
  Var o = tape_.constant(obs);
  Var a = record_action(tape_, params, ActionEncoding::onehot(prev_action, params.spec.num_actions));
  auto v = tape_.value(record_cell_step(tape_, params, hv, o, a));
  return {v.begin(), v.end()};
}

std::vector<double> CellRunner::head(const CellParams& params, std::span<const double> h) {
  tape_.reset(params.values);
  auto v = tape_.value(record_head(tape_, params, tape_.constant(h)));
  return {v.begin(), v.end()};
}

std::vector<double> CellRunner::unroll(const CellParams& params, std::span<const double> h_init,
                                       std::span<const StepInput> steps) {
  tape_.reset(params.values);
  Var h = tape_.constant(h_init);
  for (std::size_t t = 0; t < steps.size(); ++t) {
    tape_.set_step(t + 1);
    Var o = tape_.constant(steps[t].obs);
    Var a = record_action(tape_, params,
                          ActionEncoding::onehot(steps[t].prev_action, params.spec.num_actions));
    h = record_cell_step(tape_, params, h, o, a);
  }
  auto v = tape_.value(h);
  return {v.begin(), v.end()};
}

SequenceItem make_item(const ReplayBuffer& buffer, const SampledSequence& seq) {
  SequenceItem item;
  item.h_init = seq.h_init;
  item.from_s0 = seq.from_s0;
  for (std::uint64_t id = seq.first_id; id <= seq.anchor_id; ++id)
    item.transitions.push_back(&buffer.at(id));
  return item;
}

SequenceItem make_item(std::span<const Transition* const> window, std::span<const double> s0) {
  if (window.empty()) throw std::invalid_argument("empty online window");
  SequenceItem item;
  item.transitions.assign(window.begin(), window.end());
  item.from_s0 = window.front()->episode_start;
  if (item.from_s0)
    item.h_init.assign(s0.begin(), s0.end());
  else
    item.h_init = window.front()->h_stored;
  return item;
}

RecurrentLearner::RecurrentLearner(CellParams params, OptimizerConfig optimizer, std::size_t tau,
                                   std::size_t target_sync)
    : params_(std::move(params)),
      target_(params_),
      optimizer_config_(optimizer),
      optimizer_(OptimizerState::for_params(params_.values)),
      tau_(tau),
      target_sync_(target_sync),
      grads_(params_.values.zeros_like()) {
  if (tau_ == 0) throw std::invalid_argument("truncation tau must be positive");
}

UpdateResult RecurrentLearner::gradient(std::span<const SequenceItem> items, const LossFn& loss,
                                        ParamSet& grads) {
  UpdateResult result;
  const std::size_t outputs = params_.spec.outputs;
  const ParamId s0 = params_.layout.s0;
  for (const SequenceItem& item : items) {
    if (item.transitions.empty()) throw std::invalid_argument("empty training sequence");
    window_.clear();
    for (const Transition* t : item.transitions) window_.push_back({t->obs, t->prev_action});
    unroll_.run(params_, item.h_init, window_, tau_);

    const Transition& last = *item.transitions.back();
    std::vector<double> h_next;
    if (target_sync_ == 0) {
      h_next = bootstrap_runner_.step(params_, unroll_.final_hidden(), last.next_obs, last.action);
    } else {
      // The target network starts from the same stored state.
      window_.push_back({last.next_obs, last.action});
      h_next = bootstrap_runner_.unroll(target_, item.h_init, window_);
    }
    const std::vector<double> v_next = bootstrap_runner_.head(target(), h_next);

    loss_grad_.assign(outputs, 0.0);
    result.loss += loss(unroll_.output(), v_next, last, loss_grad_);
    std::vector<double> gh = bptt_backward_into(unroll_, loss_grad_, grads);
    if (item.from_s0) {
      auto& g = grads[s0].values;
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += gh[i];
    }
    result.grad_h_init.push_back(std::move(gh));
  }
  return result;
}

UpdateResult RecurrentLearner::update(std::span<const SequenceItem> items, const LossFn& loss) {
  grads_.fill(0.0);
  UpdateResult result = gradient(items, loss, grads_);
  optimizer_step(optimizer_config_, optimizer_, params_.values, grads_);
  return result;
}

}  // namespace actrnn
