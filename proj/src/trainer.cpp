#include "vqp/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vqp/util.hpp"

namespace vqp::train {

namespace {

void validate_config(const TrainConfig& c) {
  if (c.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(c.learning_rate >= 0.0) || !std::isfinite(c.learning_rate)) {
    throw std::invalid_argument("learning_rate must be finite and non-negative");
  }
  if (c.momentum < 0.0 || c.momentum >= 1.0) {
    throw std::invalid_argument("momentum must be in [0,1)");
  }
  if (c.epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (c.frame_stride < 1) throw std::invalid_argument("frame_stride must be >= 1");
  if (c.embed_dim < 1) throw std::invalid_argument("embed_dim must be >= 1");
  if (c.tasks.empty()) throw std::invalid_argument("tasks must be nonempty");
}

}  // namespace

Model Model::init(int height, int width, int embed_dim, const std::vector<fr::Task>& tasks,
                  uint64_t seed) {
  if (tasks.empty()) throw std::invalid_argument("model needs at least one task");
  Model m;
  m.encoder = nn::EncoderParams::init(height, width, embed_dim, seed);
  m.tasks = tasks;
  m.heads.reserve(tasks.size());
  for (size_t t = 0; t < tasks.size(); ++t) {
    // Distinct stream per head so equal-width heads do not start identical.
    uint64_t head_seed = Rng::stream(seed, Rng::tag("head"), static_cast<uint64_t>(t)).next_u64();
    m.heads.push_back(nn::HeadParams::init(embed_dim, 32, head_seed));
  }
  return m;
}

std::vector<std::pair<std::string, ad::Var>> Model::named() const {
  std::vector<std::pair<std::string, ad::Var>> out = encoder.named();
  for (size_t t = 0; t < heads.size(); ++t) {
    for (auto& [name, v] : heads[t].named()) {
      out.emplace_back(std::string("head.") + fr::task_name(tasks[t]) + "." + name, v);
    }
  }
  return out;
}

std::vector<ad::Var> Model::parameters() const {
  std::vector<ad::Var> out;
  for (auto& [name, v] : named()) out.push_back(v);
  return out;
}

std::vector<ad::Var> Model::encoder_parameters() const {
  std::vector<ad::Var> out;
  for (auto& [name, v] : encoder.named()) out.push_back(v);
  return out;
}

OptState OptState::init(const Model& model) {
  OptState s;
  for (const auto& p : model.parameters()) s.velocity.emplace_back(p->size(), 0.0);
  return s;
}

std::vector<double> flatten_grads(const std::vector<ad::Var>& params) {
  std::vector<double> out;
  size_t n = 0;
  for (const auto& p : params) n += p->size();
  out.reserve(n);
  for (const auto& p : params) out.insert(out.end(), p->grad.begin(), p->grad.end());
  return out;
}

StepRecord train_step(Model& model, OptState& opt, const std::vector<const Frame*>& frames,
                      const std::vector<std::vector<double>>& targets, const TrainConfig& config,
                      int step_index, int epoch_index) {
  const size_t T = model.tasks.size();
  if (frames.empty() || frames.size() != targets.size()) {
    throw std::invalid_argument("train_step: batch frames/targets mismatch");
  }
  for (const auto& tg : targets) {
    if (tg.size() != T) throw std::invalid_argument("train_step: targets missing for some task");
  }

  StepRecord rec;
  rec.step = step_index;
  rec.epoch = epoch_index;

  auto forward_losses = [&](std::vector<ad::Var>& losses) {
    std::vector<std::vector<ad::Var>> preds(T);
    for (size_t i = 0; i < frames.size(); ++i) {
      ad::Var z = nn::encoder_forward(model.encoder, *frames[i]);
      for (size_t t = 0; t < T; ++t) preds[t].push_back(nn::head_forward(model.heads[t], z));
    }
    losses.clear();
    for (size_t t = 0; t < T; ++t) {
      std::vector<double> tv(frames.size());
      for (size_t i = 0; i < frames.size(); ++i) tv[i] = targets[i][t];
      losses.push_back(nn::task_loss(preds[t], tv));
    }
  };

  // Pass 1: per-task losses and encoder gradient snapshots. backward() clears
  // the reachable subgraph before filling, so consecutive calls on the shared
  // graph give each task's gradient in isolation.
  std::vector<ad::Var> losses;
  forward_losses(losses);
  const auto enc_params = model.encoder_parameters();
  mgda::GradientBundle bundle;
  for (size_t t = 0; t < T; ++t) {
    rec.task_losses.push_back(losses[t]->scalar());
    if (!std::isfinite(rec.task_losses.back())) {
      rec.aborted = true;
      rec.alpha.assign(T, 0.0);
      rec.grad_norms.assign(T, 0.0);
      rec.joint_loss = rec.task_losses.back();
      return rec;
    }
    ad::backward(losses[t]);
    bundle.task_names.push_back(fr::task_name(model.tasks[t]));
    bundle.vectors.push_back(flatten_grads(enc_params));
    double n2 = 0.0;
    for (double g : bundle.vectors.back()) n2 += g * g;
    rec.grad_norms.push_back(std::sqrt(n2));
  }

  mgda::SimplexWeights alpha = mgda::min_norm_solve(bundle);
  rec.alpha = alpha.alpha;
  rec.degenerate_alpha = alpha.degenerate;

  // Pass 2: fresh forward, alpha-weighted joint loss, single backward, SGD.
  forward_losses(losses);
  ad::Var joint = mgda::compose_joint_loss(alpha, losses);
  rec.joint_loss = joint->scalar();
  if (!std::isfinite(rec.joint_loss)) {
    rec.aborted = true;
    return rec;
  }
  ad::backward(joint);

  const auto params = model.parameters();
  for (size_t p = 0; p < params.size(); ++p) {
    auto& vel = opt.velocity[p];
    auto& val = params[p]->val;
    const auto& grad = params[p]->grad;
    for (size_t k = 0; k < val.size(); ++k) {
      vel[k] = config.momentum * vel[k] + grad[k];
      val[k] -= config.learning_rate * vel[k];
    }
  }
  return rec;
}

PretrainResult pretrain(const std::vector<Clip>& clips,
                        const std::vector<std::vector<std::vector<double>>>& targets,
                        const TrainConfig& config,
                        const std::function<void(int, const Model&)>& on_epoch) {
  validate_config(config);
  if (clips.empty()) throw std::invalid_argument("pretrain: empty clip set");
  if (clips.size() != targets.size()) {
    throw std::invalid_argument("pretrain: clip/target count mismatch");
  }
  const size_t T = config.tasks.size();
  for (size_t c = 0; c < clips.size(); ++c) {
    validate_clip(clips[c]);
    if (!same_geometry(clips[c].frames.front(), clips[0].frames.front())) {
      throw std::invalid_argument("pretrain: clip geometry not uniform");
    }
    if (targets[c].size() != clips[c].frames.size()) {
      throw std::invalid_argument("pretrain: per-frame target count mismatch for clip " +
                                  std::to_string(clips[c].content_id));
    }
    for (const auto& row : targets[c]) {
      if (row.size() != T) {
        throw std::invalid_argument("pretrain: targets missing for a configured task");
      }
      for (double v : row) {
        if (!std::isfinite(v)) throw std::invalid_argument("pretrain: non-finite target");
      }
    }
  }

  struct SampleRef {
    size_t clip;
    size_t frame;
  };
  std::vector<SampleRef> samples;
  for (size_t c = 0; c < clips.size(); ++c) {
    for (size_t f = 0; f < clips[c].frames.size(); f += static_cast<size_t>(config.frame_stride)) {
      samples.push_back({c, f});
    }
  }
  if (samples.empty()) throw std::invalid_argument("pretrain: no samples after frame stride");

  PretrainResult res;
  res.model = Model::init(clips[0].height(), clips[0].width(), config.embed_dim, config.tasks,
                          config.seed);
  for (fr::Task t : config.tasks) res.log.task_names.push_back(fr::task_name(t));
  OptState opt = OptState::init(res.model);

  int step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Rng shuffle_rng = Rng::stream(config.seed, Rng::tag("shuffle"), static_cast<uint64_t>(epoch));
    std::vector<size_t> order(samples.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    shuffle_rng.shuffle(order);

    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(config.batch_size)) {
      size_t end = std::min(order.size(), start + static_cast<size_t>(config.batch_size));
      std::vector<const Frame*> frames;
      std::vector<std::vector<double>> batch_targets;
      for (size_t k = start; k < end; ++k) {
        const SampleRef& s = samples[order[k]];
        frames.push_back(&clips[s.clip].frames[s.frame]);
        batch_targets.push_back(targets[s.clip][s.frame]);
      }
      res.log.steps.push_back(
          train_step(res.model, opt, frames, batch_targets, config, step++, epoch));
    }
    if (on_epoch) on_epoch(epoch, res.model);
  }
  return res;
}

void write_train_log(std::ostream& os, const TrainLog& log) {
  os << "step,epoch";
  for (const auto& t : log.task_names) os << ",loss_" << t;
  for (const auto& t : log.task_names) os << ",alpha_" << t;
  os << ",joint_loss";
  for (const auto& t : log.task_names) os << ",grad_norm_" << t;
  os << ",aborted,degenerate_alpha\n";
  for (const auto& s : log.steps) {
    os << s.step << ',' << s.epoch;
    for (double v : s.task_losses) os << ',' << fmt_g(v);
    for (double v : s.alpha) os << ',' << fmt_g(v);
    os << ',' << fmt_g(s.joint_loss);
    for (double v : s.grad_norms) os << ',' << fmt_g(v);
    os << ',' << (s.aborted ? 1 : 0) << ',' << (s.degenerate_alpha ? 1 : 0) << '\n';
  }
}

}  // namespace vqp::train
