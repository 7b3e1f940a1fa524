// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "actrnn/cells.hpp"
#include "gradcheck.hpp"

using namespace actrnn;
using actrnn::testing::jittered_params;
using actrnn::testing::small_spec;

namespace {

CellSpec tmaze_spec(CellKind kind, std::size_t n, std::size_t embed = 0, std::size_t factors = 0) {
  CellSpec s;
  s.kind = kind;
  s.hidden = n;
  s.obs_dim = 3;
  s.num_actions = 4;
  s.outputs = 4;
  s.action_embed = embed;
  s.factors = factors;
  return s;
}

std::size_t count(const CellSpec& s) {
  Rng rng(0);
  return count_params(init_params(s, rng));
}

}  // namespace

TEST(CountParams, TMazeTableRows) {
  EXPECT_EQ(count(tmaze_spec(CellKind::kRNN, 20)), 584u);
  EXPECT_EQ(count(tmaze_spec(CellKind::kAARNN, 20)), 664u);
  EXPECT_EQ(count(tmaze_spec(CellKind::kMARNN, 20)), 2024u);
  EXPECT_EQ(count(tmaze_spec(CellKind::kDARNN, 20, 4)), 684u);
  EXPECT_EQ(count(tmaze_spec(CellKind::kGRU, 6)), 214u);
  EXPECT_EQ(count(tmaze_spec(CellKind::kAAGRU, 6)), 286u);
  EXPECT_EQ(count(tmaze_spec(CellKind::kMAGRU, 6)), 754u);
  EXPECT_EQ(count(tmaze_spec(CellKind::kDAGRU, 6, 4)), 306u);
}

TEST(CountParams, DirectionalTMazeRows) {
  auto dir = [](CellKind k, std::size_t n) {
    CellSpec s = tmaze_spec(k, n);
    s.num_actions = 3;
    s.outputs = 3;
    return count(s);
  };
  EXPECT_EQ(dir(CellKind::kGRU, 17), 1142u);
  EXPECT_EQ(dir(CellKind::kAAGRU, 17), 1295u);
  EXPECT_EQ(dir(CellKind::kMAGRU, 10), 1303u);
  EXPECT_EQ(dir(CellKind::kRNN, 30), 1143u);
  EXPECT_EQ(dir(CellKind::kAARNN, 30), 1233u);
  EXPECT_EQ(dir(CellKind::kMARNN, 18), 1263u);
}

TEST(CountParams, HandCountedUnitRnn) {
  CellSpec s;
  s.kind = CellKind::kRNN;
  s.hidden = 1;
  s.obs_dim = 1;
  s.num_actions = 3;
  s.outputs = 1;
  EXPECT_EQ(count(s), 6u);  // W 1x2, b, head W, head b, s0
}

TEST(CountParams, FactoredSharingScheme) {
  // factor_in and factor_action shared by the gates; factor_out, lambda and
  // bias per gate.
  EXPECT_EQ(count(tmaze_spec(CellKind::kFacGRU, 6, 0, 21)), 9u * 21 + 4 * 21 + 3 * (6 * 21 + 21 + 6) + 28 + 6);
  EXPECT_EQ(count(tmaze_spec(CellKind::kFacRNN, 20, 0, 40)), 23u * 40 + 4 * 40 + 20 * 40 + 40 + 20 + 84 + 20);
}

TEST(CountParams, EncoderAddsAPlusOneTimesB) {
  EXPECT_EQ(count(tmaze_spec(CellKind::kDAGRU, 6, 4)) - count(tmaze_spec(CellKind::kAAGRU, 6)), 20u);
}

TEST(InitParams, XavierBoundsAndZeroBiases) {
  CellSpec s;
  s.kind = CellKind::kRNN;
  s.hidden = 15;
  s.obs_dim = 2;
  s.num_actions = 2;
  s.outputs = 20;
  Rng rng(42);
  CellParams p = init_params(s, rng);
  const double bound = std::sqrt(6.0 / (17.0 + 15.0));
  const auto& w = p.values[p.layout.blocks[0].gates[0].w];
  ASSERT_EQ(w.size(), 15u * 17u);
  double max_abs = 0.0;
  for (double v : w.values) max_abs = std::max(max_abs, std::abs(v));
  EXPECT_LE(max_abs, bound);
  EXPECT_GT(max_abs, 0.8 * bound);
  for (double v : p.values[p.layout.blocks[0].gates[0].bias].values) EXPECT_EQ(v, 0.0);
  for (double v : p.s0()) EXPECT_EQ(v, 0.0);
}

TEST(InitParams, TensorSlicesIndependentXavier) {
  CellSpec s;
  s.kind = CellKind::kMARNN;
  s.hidden = 15;
  s.obs_dim = 2;
  s.num_actions = 2;
  s.outputs = 20;
  Rng rng(7);
  CellParams p = init_params(s, rng);
  const auto& t = p.values[p.layout.blocks[0].gates[0].tensor];
  ASSERT_EQ(t.shape, (std::vector<std::size_t>{15, 17, 2}));
  const double bound = std::sqrt(6.0 / 32.0);
  const std::size_t block = 15 * 17;
  for (std::size_t k = 0; k < 2; ++k) {
    double mx = 0.0;
    for (std::size_t i = 0; i < block; ++i) mx = std::max(mx, std::abs(t.values[k * block + i]));
    EXPECT_LE(mx, bound);
    EXPECT_GT(mx, 0.8 * bound);  // each slice spans its own Xavier range
  }
  bool differ = false;
  for (std::size_t i = 0; i < block; ++i) differ |= t.values[i] != t.values[block + i];
  EXPECT_TRUE(differ);
}

TEST(InitParams, Deterministic) {
  for (CellKind kind : all_cell_kinds()) {
    Rng a(99), b(99);
    CellParams p = init_params(small_spec(kind), a);
    CellParams q = init_params(small_spec(kind), b);
    ASSERT_TRUE(p.values.same_layout(q.values));
    for (ParamId id = 0; id < p.values.num_arrays(); ++id)
      EXPECT_EQ(p.values[id].values, q.values[id].values) << to_string(kind);
  }
}

TEST(InitParams, FactorWeightsStartAtOne) {
  Rng rng(1);
  CellParams p = init_params(small_spec(CellKind::kFacGRU), rng);
  for (const auto& g : p.layout.blocks[0].gates)
    for (double v : p.values[g.lambda].values) EXPECT_EQ(v, 1.0);
}

TEST(CellSpec, RejectsMissingDimensions) {
  CellSpec s = small_spec(CellKind::kFacRNN);
  s.factors = 0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = small_spec(CellKind::kDAGRU);
  s.action_embed = 0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = small_spec(CellKind::kMoERNN);
  s.experts = 0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = small_spec(CellKind::kGRU);
  s.hidden = 0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(CellKind, NamesRoundTrip) {
  std::set<std::string_view> names;
  for (CellKind k : all_cell_kinds()) {
    EXPECT_EQ(parse_cell_kind(to_string(k)), k);
    names.insert(to_string(k));
  }
  EXPECT_EQ(names.size(), all_cell_kinds().size());
  EXPECT_THROW(parse_cell_kind("LSTM"), std::invalid_argument);
}

TEST(CellForward, ZeroWeightsGiveZeroState) {
  Rng rng(3);
  CellParams p = init_params(small_spec(CellKind::kRNN), rng);
  p.values.fill(0.0);
  auto h = cell_forward(p, std::vector<double>{0.2, -0.4, 0.9, 0.1}, std::vector<double>{1, 0, 1},
                        ActionEncoding::onehot(2, 3));
  for (double v : h) EXPECT_EQ(v, 0.0);
}

TEST(CellForward, MultiplicativeOnehotMatchesSliceRnn) {
  Rng rng(5);
  CellSpec ms = small_spec(CellKind::kMARNN);
  CellParams ma = jittered_params(ms, rng);
  CellSpec rs = ms;
  rs.kind = CellKind::kRNN;
  CellParams rnn = init_params(rs, rng);

  const std::vector<double> h{0.3, -0.2, 0.5, -0.7};
  const std::vector<double> obs{0.4, -1.0, 0.25};
  const auto& tensor = ma.values[ma.layout.blocks[0].gates[0].tensor];
  const auto& bias = ma.values[ma.layout.blocks[0].gates[0].action_bias];
  const std::size_t n = ms.hidden, in = ms.obs_dim + ms.hidden, A = ms.num_actions;
  for (std::size_t k = 0; k < A; ++k) {
    auto& w = rnn.values[rnn.layout.blocks[0].gates[0].w].values;
    auto& b = rnn.values[rnn.layout.blocks[0].gates[0].bias].values;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < in; ++j) w[i * in + j] = tensor.values[(k * n + i) * in + j];
      b[i] = bias.values[i * A + k];
    }
    auto want = cell_forward(rnn, h, obs, ActionEncoding::onehot(0, A));
    auto got = cell_forward(ma, h, obs, ActionEncoding::onehot(k, A));
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(got[i], want[i], 1e-15);
  }
}

TEST(CellForward, ClosedUpdateGateCarriesState) {
  Rng rng(9);
  CellParams p = jittered_params(small_spec(CellKind::kGRU), rng);
  const auto& z = p.layout.blocks[0].gates[1];
  std::fill(p.values[z.w].values.begin(), p.values[z.w].values.end(), 0.0);
  std::fill(p.values[z.bias].values.begin(), p.values[z.bias].values.end(), -1e3);
  const std::vector<double> h{0.3, -0.2, 0.5, -0.7};
  auto out = cell_forward(p, h, std::vector<double>{1, 0, 0}, ActionEncoding::onehot(1, 3));
  for (std::size_t i = 0; i < h.size(); ++i) EXPECT_NEAR(out[i], h[i], 1e-12);
}

TEST(CellForward, SoftmaxComboSymmetricIsMean) {
  Rng rng(12);
  CellParams p = init_params(small_spec(CellKind::kCombSoftmaxRNN), rng);
  auto [wa, wm] = softmax_weights(p);
  for (std::size_t i = 0; i < wa.size(); ++i) {
    EXPECT_EQ(wa[i], 0.5);
    EXPECT_EQ(wm[i], 0.5);
  }
  // Drop each sub-cell in turn by zeroing the other's contributions through
  // the concatenated variant with identical weights.
  CellSpec cs = p.spec;
  cs.kind = CellKind::kCombConcatRNN;
  Rng rng2(12);
  CellParams cat = init_params(cs, rng2);
  for (ParamId id = 0; id < p.values.num_arrays(); ++id) {
    const auto& name = p.values[id].name;
    if (name.rfind("rnn.", 0) == 0) cat.values[cat.values.find(name)].values = p.values[id].values;
  }
  const std::vector<double> h{0.1, 0.2, -0.3, 0.4};
  const std::vector<double> obs{1.0, 0.0, -1.0};
  auto soft = cell_forward(p, h, obs, ActionEncoding::onehot(1, 3));
  std::vector<double> hh(h);
  hh.insert(hh.end(), h.begin(), h.end());
  auto both = cell_forward(cat, hh, obs, ActionEncoding::onehot(1, 3));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(soft[i], 0.5 * (both[i] + both[4 + i]), 1e-15);
}

TEST(CellForward, SoftmaxWeightsSumToOne) {
  Rng rng(2);
  CellParams p = jittered_params(small_spec(CellKind::kCombSoftmaxGRU), rng, 3.0);
  auto [wa, wm] = softmax_weights(p);
  for (std::size_t i = 0; i < wa.size(); ++i) EXPECT_NEAR(wa[i] + wm[i], 1.0, 1e-15);
  CellParams q = init_params(small_spec(CellKind::kGRU), rng);
  EXPECT_THROW(softmax_weights(q), std::invalid_argument);
}

TEST(CellForward, TanhCellsStayInsideUnitBox) {
  Rng rng(17);
  for (CellKind kind : all_cell_kinds()) {
    CellParams p = jittered_params(small_spec(kind), rng, 2.0);
    std::vector<double> h(p.spec.state_size(), 0.0);
    for (int t = 0; t < 20; ++t) {
      std::vector<double> obs{uniform(rng, -3, 3), uniform(rng, -3, 3), uniform(rng, -3, 3)};
      h = cell_forward(p, h, obs, ActionEncoding::onehot(uniform_index(rng, 3), 3));
      for (double v : h) {
        EXPECT_GE(v, -1.0) << to_string(kind);
        EXPECT_LE(v, 1.0) << to_string(kind);
      }
    }
  }
}

TEST(CellForward, DeterministicAndValidated) {
  Rng rng(4);
  CellParams p = jittered_params(small_spec(CellKind::kMAGRU), rng);
  const std::vector<double> h{0.1, 0.2, 0.3, 0.4}, obs{1, 0, 1};
  EXPECT_EQ(cell_forward(p, h, obs, ActionEncoding::onehot(2, 3)),
            cell_forward(p, h, obs, ActionEncoding::onehot(2, 3)));
  EXPECT_THROW(cell_forward(p, std::vector<double>{0.1, 0.2}, obs, ActionEncoding::onehot(0, 3)),
               DimensionError);
  EXPECT_THROW(cell_forward(p, h, std::vector<double>{1, 0}, ActionEncoding::onehot(0, 3)),
               DimensionError);
  const std::vector<double> bad{0.1, NAN, 0.3, 0.4};
  EXPECT_THROW(cell_forward(p, bad, obs, ActionEncoding::onehot(0, 3)), NonFiniteError);
  EXPECT_THROW(ActionEncoding::onehot(3, 3), std::out_of_range);
}

TEST(CellForward, FactoredMatchesReconstructedTensor) {
  // A FacRNN with M factors equals a MARNN whose tensor is the CP
  // reconstruction, provided the per-action bias is folded in as b.
  Rng rng(23);
  CellSpec fs = small_spec(CellKind::kFacRNN);
  CellParams f = jittered_params(fs, rng);
  const auto& blk = f.layout.blocks[0];
  FactoredTensor ft;
  const std::size_t n = fs.hidden, in = fs.obs_dim + fs.hidden, A = fs.num_actions, M = fs.factors;
  ft.w_out = Matrix(n, M);
  ft.w_out.values = f.values[blk.gates[0].w_out].values;
  ft.w_in = Matrix(in, M);
  ft.w_in.values = f.values[blk.factor_in].values;
  ft.w_act = Matrix(A, M);
  ft.w_act.values = f.values[blk.factor_action].values;
  ft.lambda = f.values[blk.gates[0].lambda].values;
  Tensor3 w = cp_reconstruct(ft);

  CellSpec ms = fs;
  ms.kind = CellKind::kMARNN;
  CellParams m = init_params(ms, rng);
  const auto& g = m.layout.blocks[0].gates[0];
  std::copy(w.values().begin(), w.values().end(), m.values[g.tensor].values.begin());
  const auto& b = f.values[blk.gates[0].bias].values;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < A; ++k) m.values[g.action_bias].values[i * A + k] = b[i];

  const std::vector<double> h{0.3, -0.1, 0.2, 0.6}, obs{0.5, -0.5, 1.0};
  for (std::size_t k = 0; k < A; ++k) {
    auto hf = cell_forward(f, h, obs, ActionEncoding::onehot(k, A));
    auto hm = cell_forward(m, h, obs, ActionEncoding::onehot(k, A));
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(hf[i], hm[i], 1e-13);
  }
}

TEST(DeepActionEncode, ZeroWeightsGiveActivationOfZero) {
  ActionEncoder enc{Matrix(4, 3), std::vector<double>(4, 0.0), Activation::kRelu};
  for (double v : deep_action_encode(enc, std::vector<double>{0, 1, 0})) EXPECT_EQ(v, 0.0);
  enc.activation = Activation::kTanh;
  for (double v : deep_action_encode(enc, std::vector<double>{0, 1, 0})) EXPECT_EQ(v, 0.0);
}

TEST(DeepActionEncode, IdentityReturnsOnehot) {
  ActionEncoder enc{Matrix(4, 4), std::vector<double>(4, 0.0), Activation::kIdentity};
  for (std::size_t i = 0; i < 4; ++i) enc.weights(i, i) = 1.0;
  const std::vector<double> a{0, 0, 1, 0};
  EXPECT_EQ(deep_action_encode(enc, a), a);
}

TEST(DeepActionEncode, CellEncoderFeedsAdditiveUpdate) {
  // DAGRU on a one-hot equals AAGRU fed the dense encoding directly.
  Rng rng(31);
  CellSpec ds = small_spec(CellKind::kDAGRU);
  CellParams d = jittered_params(ds, rng);
  auto emb = deep_action_encode(action_encoder(d), ActionEncoding::onehot(1, 3).values);
  ASSERT_EQ(emb.size(), ds.action_embed);
  const std::vector<double> h{0.3, -0.1, 0.2, 0.6}, obs{0.5, -0.5, 1.0};
  EXPECT_EQ(cell_forward(d, h, obs, ActionEncoding::onehot(1, 3)),
            cell_forward(d, h, obs, ActionEncoding::embedding(emb)));
  Rng r2(1);
  EXPECT_THROW(action_encoder(init_params(small_spec(CellKind::kAAGRU), r2)),
               std::invalid_argument);
}

TEST(HeadForward, LinearMap) {
  Rng rng(2);
  CellParams p = jittered_params(small_spec(CellKind::kRNN), rng);
  const auto& w = p.values[p.layout.head_w].values;
  const auto& b = p.values[p.layout.head_b].values;
  const std::vector<double> h{0.3, -0.1, 0.2, 0.6};
  auto out = head_forward(p, h);
  for (std::size_t o = 0; o < 2; ++o) {
    double want = b[o];
    for (std::size_t i = 0; i < 4; ++i) want += w[o * 4 + i] * h[i];
    EXPECT_NEAR(out[o], want, 1e-15);
  }
}
