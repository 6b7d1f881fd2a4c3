#include "vqp/nn.hpp"

#include <stdexcept>

namespace vqp::nn {

namespace {

// One RNG stream per tensor, derived from (seed, tensor name), so adding or
// reordering tensors never silently reshuffles every init.
ad::Var init_weight(std::vector<int> shape, int fan_in, uint64_t seed, const char* name) {
  Rng rng = Rng::stream(seed, Rng::tag(name));
  return ad::make_param(std::move(shape), fan_in, rng);
}

}  // namespace

EncoderParams EncoderParams::init(int height, int width, int embed_dim, uint64_t seed) {
  if (height < kMinFrameDim || width < kMinFrameDim) {
    throw std::invalid_argument("encoder input geometry must be at least 16x16");
  }
  if (embed_dim < 1) throw std::invalid_argument("embed_dim must be positive");
  EncoderParams e;
  e.in_height = height;
  e.in_width = width;
  e.embed_dim = embed_dim;
  e.c1_w = init_weight({8, 1, 3, 3}, 1 * 9, seed, "enc.c1.w");
  e.c1_b = ad::make_zero_param({8});
  e.c2_w = init_weight({16, 8, 3, 3}, 8 * 9, seed, "enc.c2.w");
  e.c2_b = ad::make_zero_param({16});
  e.c3_w = init_weight({32, 16, 3, 3}, 16 * 9, seed, "enc.c3.w");
  e.c3_b = ad::make_zero_param({32});
  e.fc_w = init_weight({embed_dim, 32}, 32, seed, "enc.fc.w");
  e.fc_b = ad::make_zero_param({embed_dim});
  return e;
}

std::vector<std::pair<std::string, ad::Var>> EncoderParams::named() const {
  return {{"enc.c1.w", c1_w}, {"enc.c1.b", c1_b}, {"enc.c2.w", c2_w}, {"enc.c2.b", c2_b},
          {"enc.c3.w", c3_w}, {"enc.c3.b", c3_b}, {"enc.fc.w", fc_w}, {"enc.fc.b", fc_b}};
}

size_t EncoderParams::param_count() const {
  size_t n = 0;
  for (const auto& [name, v] : named()) n += v->size();
  return n;
}

HeadParams HeadParams::init(int in_dim, int hidden, uint64_t seed) {
  if (in_dim < 1 || hidden < 1) throw std::invalid_argument("head dimensions must be positive");
  HeadParams h;
  h.in_dim = in_dim;
  h.hidden = hidden;
  h.fc1_w = init_weight({hidden, in_dim}, in_dim, seed, "head.fc1.w");
  h.fc1_b = ad::make_zero_param({hidden});
  h.fc2_w = init_weight({1, hidden}, hidden, seed, "head.fc2.w");
  h.fc2_b = ad::make_zero_param({1});
  return h;
}

std::vector<std::pair<std::string, ad::Var>> HeadParams::named() const {
  return {{"fc1.w", fc1_w}, {"fc1.b", fc1_b}, {"fc2.w", fc2_w}, {"fc2.b", fc2_b}};
}

ad::Var encoder_forward(const EncoderParams& enc, const Frame& frame) {
  if (frame.height != enc.in_height || frame.width != enc.in_width) {
    throw std::invalid_argument("frame geometry " + std::to_string(frame.width) + "x" +
                                std::to_string(frame.height) + " does not match encoder input " +
                                std::to_string(enc.in_width) + "x" + std::to_string(enc.in_height));
  }
  ad::Var x = ad::make_const({1, frame.height, frame.width}, frame.luma);
  x = ad::relu(ad::conv2d(x, enc.c1_w, enc.c1_b, 2, 1));
  x = ad::relu(ad::conv2d(x, enc.c2_w, enc.c2_b, 2, 1));
  x = ad::relu(ad::conv2d(x, enc.c3_w, enc.c3_b, 2, 1));
  x = ad::global_avg_pool(x);
  return ad::linear(enc.fc_w, enc.fc_b, x);
}

ad::Var head_forward(const HeadParams& head, const ad::Var& z) {
  if (!z || z->shape.size() != 1 || z->shape[0] != head.in_dim) {
    throw std::invalid_argument("head expects an embedding of dimension " +
                                std::to_string(head.in_dim));
  }
  ad::Var h = ad::relu(ad::linear(head.fc1_w, head.fc1_b, z));
  return ad::linear(head.fc2_w, head.fc2_b, h);
}

double head_predict(const HeadParams& head, const std::vector<double>& z) {
  ad::Var zv = ad::make_const({static_cast<int>(z.size())}, z);
  return head_forward(head, zv)->scalar();
}

ad::Var task_loss(const std::vector<ad::Var>& preds, const std::vector<double>& targets,
                  double beta) {
  if (preds.empty() || preds.size() != targets.size()) {
    throw std::invalid_argument("task_loss: batch size mismatch");
  }
  std::vector<ad::Var> per_sample;
  per_sample.reserve(preds.size());
  for (size_t i = 0; i < preds.size(); ++i) {
    per_sample.push_back(ad::smooth_l1(preds[i], targets[i], beta));
  }
  return ad::mean(per_sample);
}

}  // namespace vqp::nn
