#pragma once

#include <string>
#include <utility>
#include <vector>

#include "vqp/ad.hpp"
#include "vqp/frame.hpp"

namespace vqp::nn {

// Shared encoder: three stride-2 3x3 conv blocks (8 -> 16 -> 32 channels,
// ReLU) -> global average pool -> linear embedding. Small enough to train on
// a CPU in minutes while keeping the shared-trunk / per-task-head topology.
struct EncoderParams {
  int in_height = 0;
  int in_width = 0;
  int embed_dim = 64;
  ad::Var c1_w, c1_b;  // [8,1,3,3]
  ad::Var c2_w, c2_b;  // [16,8,3,3]
  ad::Var c3_w, c3_b;  // [32,16,3,3]
  ad::Var fc_w, fc_b;  // [D,32]

  static EncoderParams init(int height, int width, int embed_dim, uint64_t seed);
  std::vector<std::pair<std::string, ad::Var>> named() const;
  size_t param_count() const;
};

// Per-task head: 2-layer MLP, scalar output.
struct HeadParams {
  int in_dim = 0;
  int hidden = 32;
  ad::Var fc1_w, fc1_b;  // [hidden,in_dim]
  ad::Var fc2_w, fc2_b;  // [1,hidden]

  static HeadParams init(int in_dim, int hidden, uint64_t seed);
  std::vector<std::pair<std::string, ad::Var>> named() const;
};

// Embedding z = f(frame); rejects frames that do not match the configured
// input geometry.
ad::Var encoder_forward(const EncoderParams& enc, const Frame& frame);

// Scalar prediction from an embedding.
ad::Var head_forward(const HeadParams& head, const ad::Var& z);
double head_predict(const HeadParams& head, const std::vector<double>& z);

// Mean Smooth-L1 over a batch of (prediction, target) pairs built by the
// caller; kept here so single-task and multi-task paths share one definition.
ad::Var task_loss(const std::vector<ad::Var>& preds, const std::vector<double>& targets,
                  double beta = 1.0);

}  // namespace vqp::nn
