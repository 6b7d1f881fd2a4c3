#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "vqp/fr_metrics.hpp"
#include "vqp/frame.hpp"
#include "vqp/mgda.hpp"
#include "vqp/nn.hpp"

namespace vqp::train {

struct TrainConfig {
  int batch_size = 20;
  double learning_rate = 0.01;
  double momentum = 0.9;
  int epochs = 10;
  int frame_stride = 2;  // train on every frame_stride-th frame of a clip
  int embed_dim = 64;
  std::vector<fr::Task> tasks = {fr::Task::Ssim, fr::Task::MsSsim, fr::Task::PsnrNorm};
  uint64_t seed = 0;
};

// Shared encoder plus one scalar head per task.
struct Model {
  nn::EncoderParams encoder;
  std::vector<fr::Task> tasks;
  std::vector<nn::HeadParams> heads;

  static Model init(int height, int width, int embed_dim, const std::vector<fr::Task>& tasks,
                    uint64_t seed);
  // Fixed flattening order: encoder tensors, then per-task head tensors. This
  // order defines checkpoints, gradient snapshots, and optimizer slots.
  std::vector<std::pair<std::string, ad::Var>> named() const;
  std::vector<ad::Var> parameters() const;
  std::vector<ad::Var> encoder_parameters() const;
};

struct OptState {
  std::vector<std::vector<double>> velocity;  // aligned with Model::parameters()
  static OptState init(const Model& model);
};

struct StepRecord {
  int step = 0;
  int epoch = 0;
  std::vector<double> task_losses;
  std::vector<double> alpha;
  double joint_loss = 0.0;
  std::vector<double> grad_norms;  // per-task encoder gradient norms (pass 1)
  bool aborted = false;            // non-finite loss; parameters left untouched
  bool degenerate_alpha = false;   // all-zero gradient bundle
};

struct TrainLog {
  std::vector<std::string> task_names;
  std::vector<StepRecord> steps;
};

std::vector<double> flatten_grads(const std::vector<ad::Var>& params);

// One batch: frames with per-task targets aligned to config.tasks. Pass 1
// backpropagates each task loss separately and snapshots the encoder
// gradients; pass 2 recomputes the forward pass, forms the alpha-weighted
// joint loss, and applies one SGD-with-momentum update to all parameters.
StepRecord train_step(Model& model, OptState& opt, const std::vector<const Frame*>& frames,
                      const std::vector<std::vector<double>>& targets, const TrainConfig& config,
                      int step_index, int epoch_index);

struct PretrainResult {
  Model model;
  TrainLog log;
};

// clips[i] pairs with targets[i][frame][task] (task order = config.tasks).
// on_epoch, when set, fires after every epoch with the current model.
PretrainResult pretrain(const std::vector<Clip>& clips,
                        const std::vector<std::vector<std::vector<double>>>& targets,
                        const TrainConfig& config,
                        const std::function<void(int, const Model&)>& on_epoch = {});

void write_train_log(std::ostream& os, const TrainLog& log);

}  // namespace vqp::train
