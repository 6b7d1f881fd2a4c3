#include "vqp/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "vqp/correlation.hpp"
#include "vqp/fr_metrics.hpp"
#include "vqp/io.hpp"
#include "vqp/protocols.hpp"
#include "vqp/regress.hpp"
#include "vqp/synth.hpp"
#include "vqp/trainer.hpp"
#include "vqp/util.hpp"

#include <CLI11.hpp>

namespace fs = std::filesystem;

namespace vqp::pipe {

namespace {

void require_file(const std::string& path) {
  if (!fs::is_regular_file(path)) {
    throw std::invalid_argument("input artifact missing: " + path);
  }
}

void require_dir(const std::string& path) {
  if (!fs::is_directory(path)) {
    throw std::invalid_argument("input directory missing: " + path);
  }
}

std::vector<std::string> provenance(const cfg::Config& config, uint64_t seed) {
  return {"tool=vqproxy", "config_hash=" + config.hash_hex(), "seed=" + std::to_string(seed)};
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt_g(*v) : ""; }

std::vector<double> parse_double_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::istringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    size_t used = 0;
    double v = std::stod(item, &used);
    if (used != item.size()) throw std::invalid_argument(what + ": not a number: " + item);
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument(what + ": empty list");
  return out;
}

train::TrainConfig train_config_from(const cfg::Config& config, uint64_t seed) {
  train::TrainConfig tc;
  tc.batch_size = config.get_int("train.batch_size", tc.batch_size);
  tc.learning_rate = config.get_double("train.learning_rate", tc.learning_rate);
  tc.momentum = config.get_double("train.momentum", tc.momentum);
  tc.epochs = config.get_int("train.epochs", tc.epochs);
  tc.frame_stride = config.get_int("train.frame_stride", tc.frame_stride);
  tc.embed_dim = config.get_int("train.embed_dim", tc.embed_dim);
  tc.tasks = fr::parse_task_list(config.get("train.tasks", "ssim,ms_ssim,psnr_norm"));
  tc.seed = seed;
  return tc;
}

std::string clip_filename(int content_id, int level) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "c%04d_l%d.raw", content_id, level);
  return buf;
}

// ---- CSV table schemas ---------------------------------------------------

// targets.csv: per-frame proxy targets for distorted clips.
struct TargetTable {
  std::vector<std::string> task_names;  // column order
  // (content_id, level) -> [frame][task]
  std::map<std::pair<int, int>, std::vector<std::vector<double>>> per_clip;
};

TargetTable read_targets_csv(const std::string& path) {
  io::Csv csv = io::read_csv(path);
  if (csv.header.size() < 4 || csv.header[0] != "content_id" || csv.header[1] != "level" ||
      csv.header[2] != "frame_index") {
    throw std::invalid_argument("targets csv must start with content_id,level,frame_index: " +
                                path);
  }
  TargetTable table;
  table.task_names.assign(csv.header.begin() + 3, csv.header.end());
  for (const auto& row : csv.rows) {
    int content = std::stoi(row[0]);
    int level = std::stoi(row[1]);
    int frame = std::stoi(row[2]);
    if (frame < 0) continue;  // clip-mean summary row
    auto& frames = table.per_clip[{content, level}];
    if (frame != static_cast<int>(frames.size())) {
      throw std::invalid_argument("targets csv frames out of order for content " +
                                  std::to_string(content));
    }
    std::vector<double> vals;
    for (size_t t = 3; t < row.size(); ++t) vals.push_back(std::stod(row[t]));
    frames.push_back(std::move(vals));
  }
  if (table.per_clip.empty()) throw std::invalid_argument("targets csv holds no rows: " + path);
  return table;
}

// labels.csv: (content_id, level) -> mos surrogate; empty field means missing.
std::map<std::pair<int, int>, double> read_labels_csv(const std::string& path) {
  io::Csv csv = io::read_csv(path);
  if (csv.header.size() != 3 || csv.header[0] != "content_id" || csv.header[1] != "level") {
    throw std::invalid_argument("labels csv must be content_id,level,<label>: " + path);
  }
  std::map<std::pair<int, int>, double> labels;
  for (const auto& row : csv.rows) {
    if (row[2].empty()) continue;
    labels[{std::stoi(row[0]), std::stoi(row[1])}] = std::stod(row[2]);
  }
  return labels;
}

struct FeatureRow {
  int content = 0;
  int level = 0;
  std::vector<double> values;
};

std::vector<FeatureRow> read_features_csv(const std::string& path) {
  io::Csv csv = io::read_csv(path);
  if (csv.header.size() < 3 || csv.header[0] != "content_id" || csv.header[1] != "level") {
    throw std::invalid_argument("features csv must start with content_id,level: " + path);
  }
  std::vector<FeatureRow> rows;
  for (const auto& row : csv.rows) {
    FeatureRow f;
    f.content = std::stoi(row[0]);
    f.level = std::stoi(row[1]);
    for (size_t i = 2; i < row.size(); ++i) f.values.push_back(std::stod(row[i]));
    rows.push_back(std::move(f));
  }
  if (rows.empty()) throw std::invalid_argument("features csv holds no rows: " + path);
  return rows;
}

int clip_key(int content, int level) { return content * 6 + level; }

std::vector<regress::FeatureVector> join_features_labels(const std::string& features_csv,
                                                         const std::string& labels_csv) {
  require_file(features_csv);
  require_file(labels_csv);
  auto features = read_features_csv(features_csv);
  auto labels = read_labels_csv(labels_csv);
  std::vector<regress::FeatureVector> data;
  for (const auto& f : features) {
    auto it = labels.find({f.content, f.level});
    if (it == labels.end()) {
      throw std::invalid_argument("no label for content " + std::to_string(f.content) +
                                  " level " + std::to_string(f.level));
    }
    regress::FeatureVector fv;
    fv.clip_id = clip_key(f.content, f.level);
    fv.content_id = f.content;
    fv.values = f.values;
    fv.label = it->second;
    data.push_back(std::move(fv));
  }
  return data;
}

// Pooled embedding: mean encoder output over sampled frames.
std::vector<double> pooled_embedding(const train::Model& model, const Clip& clip, int stride) {
  std::vector<double> z(static_cast<size_t>(model.encoder.embed_dim), 0.0);
  int used = 0;
  for (size_t f = 0; f < clip.frames.size(); f += static_cast<size_t>(stride)) {
    ad::Var emb = nn::encoder_forward(model.encoder, clip.frames[f]);
    for (size_t j = 0; j < z.size(); ++j) z[j] += emb->val[j];
    ++used;
  }
  for (double& v : z) v /= static_cast<double>(used);
  return z;
}

void write_report_rows(io::Csv& out, const proto::ProtocolSummary& sum, bool per_run_rows,
                       const std::string& median_label) {
  if (per_run_rows) {
    for (const auto& run : sum.runs) {
      out.rows.push_back({"run_" + std::to_string(run.run_id), std::to_string(run.report.n),
                          fmt_opt(run.report.srcc), fmt_opt(run.report.krcc),
                          fmt_opt(run.report.plcc), fmt_opt(run.report.rmse), fmt_g(run.c),
                          fmt_g(run.gamma)});
    }
  }
  out.rows.push_back({median_label, std::to_string(sum.runs.size()), fmt_opt(sum.median.srcc),
                      fmt_opt(sum.median.krcc), fmt_opt(sum.median.plcc),
                      fmt_opt(sum.median.rmse), "", ""});
}

void write_scatter_svg(const std::string& path, const std::vector<double>& pred,
                       const std::vector<double>& truth, const corr::CorrelationReport& rep) {
  if (pred.empty() || pred.size() != truth.size()) {
    throw std::invalid_argument("svg scatter needs matching non-empty predictions and labels");
  }
  const double w = 640, h = 480, m = 50;
  double x_lo = *std::min_element(pred.begin(), pred.end());
  double x_hi = *std::max_element(pred.begin(), pred.end());
  double y_lo = *std::min_element(truth.begin(), truth.end());
  double y_hi = *std::max_element(truth.begin(), truth.end());
  auto pad = [](double& lo, double& hi) {
    double span = hi - lo;
    if (span <= 0.0) span = 1.0;
    lo -= 0.05 * span;
    hi += 0.05 * span;
  };
  pad(x_lo, x_hi);
  pad(y_lo, y_hi);
  auto sx = [&](double v) { return m + (v - x_lo) / (x_hi - x_lo) * (w - 2 * m); };
  auto sy = [&](double v) { return h - m - (v - y_lo) / (y_hi - y_lo) * (h - 2 * m); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
     << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
  os << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
  os << "<line x1=\"" << m << "\" y1=\"" << h - m << "\" x2=\"" << w - m << "\" y2=\"" << h - m
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << m << "\" y1=\"" << m << "\" x2=\"" << m << "\" y2=\"" << h - m
     << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << w / 2 << "\" y=\"" << h - 12 << "\" text-anchor=\"middle\" font-size=\"13\">"
     << "prediction</text>\n";
  os << "<text x=\"14\" y=\"" << h / 2 << "\" text-anchor=\"middle\" font-size=\"13\" transform=\""
     << "rotate(-90 14 " << h / 2 << ")\">label</text>\n";

  if (!rep.logistic_fallback && rep.logistic_params[1] != 0.0) {
    os << "<polyline fill=\"none\" stroke=\"#cc3311\" stroke-width=\"1.5\" points=\"";
    for (int i = 0; i <= 200; ++i) {
      double x = x_lo + (x_hi - x_lo) * i / 200.0;
      double y = corr::logistic_apply(rep.logistic_params, x);
      y = std::clamp(y, y_lo, y_hi);
      os << fmt_g(sx(x)) << ',' << fmt_g(sy(y)) << ' ';
    }
    os << "\"/>\n";
  }
  for (size_t i = 0; i < pred.size(); ++i) {
    os << "<circle cx=\"" << fmt_g(sx(pred[i])) << "\" cy=\"" << fmt_g(sy(truth[i]))
       << "\" r=\"3\" fill=\"#4477aa\" fill-opacity=\"0.7\"/>\n";
  }
  os << "</svg>\n";
  io::write_text_file(path, os.str());
}

// ---- shared ablate/pretrain plumbing -------------------------------------

struct LoadedTrainSet {
  std::vector<Clip> clips;
  // aligned with clips: [frame][csv task column]
  std::vector<std::vector<std::vector<double>>> raw_targets;
  const TargetTable* table = nullptr;
};

// Selects targets columns for the requested tasks, in task order.
std::vector<std::vector<std::vector<double>>> select_task_targets(
    const LoadedTrainSet& set, const std::vector<fr::Task>& tasks) {
  std::vector<size_t> col;
  for (fr::Task t : tasks) {
    auto it = std::find(set.table->task_names.begin(), set.table->task_names.end(),
                        fr::task_name(t));
    if (it == set.table->task_names.end()) {
      throw std::invalid_argument(std::string("targets csv lacks a column for task ") +
                                  fr::task_name(t));
    }
    col.push_back(static_cast<size_t>(it - set.table->task_names.begin()));
  }
  std::vector<std::vector<std::vector<double>>> out(set.clips.size());
  for (size_t c = 0; c < set.clips.size(); ++c) {
    out[c].resize(set.raw_targets[c].size());
    for (size_t f = 0; f < set.raw_targets[c].size(); ++f) {
      for (size_t t : col) out[c][f].push_back(set.raw_targets[c][f][t]);
    }
  }
  return out;
}

LoadedTrainSet load_train_set(const std::string& data_dir, const io::Manifest& manifest,
                              const TargetTable& table, const std::set<int>& content_filter) {
  LoadedTrainSet set;
  set.table = &table;
  std::map<std::pair<int, int>, const io::ManifestEntry*> by_key;
  for (const auto& e : manifest.entries) by_key[{e.content_id, e.level}] = &e;
  for (const auto& [key, frames] : table.per_clip) {
    if (!content_filter.empty() && !content_filter.count(key.first)) continue;
    auto it = by_key.find(key);
    if (it == by_key.end()) {
      throw std::invalid_argument("targets refer to content " + std::to_string(key.first) +
                                  " level " + std::to_string(key.second) +
                                  " which is not in the manifest");
    }
    if (static_cast<int>(frames.size()) != it->second->frames) {
      throw std::invalid_argument("targets frame count mismatch for content " +
                                  std::to_string(key.first));
    }
    set.clips.push_back(io::read_clip_raw(data_dir, *it->second));
    set.raw_targets.push_back(frames);
  }
  if (set.clips.empty()) throw std::invalid_argument("no training clips after filtering");
  return set;
}

void write_log_with_comments(const std::string& path, const std::vector<std::string>& comments,
                             const train::TrainLog& log) {
  std::ostringstream body;
  train::write_train_log(body, log);
  std::ostringstream full;
  for (const auto& c : comments) full << "# " << c << '\n';
  full << body.str();
  io::write_text_file(path, full.str());
}

}  // namespace

cfg::Config resolve_config(const CommonOpts& opts) {
  cfg::Config config;
  if (!opts.config_path.empty()) {
    require_file(opts.config_path);
    config = cfg::load_config_file(opts.config_path);
  }
  for (const auto& o : opts.overrides) cfg::apply_override(config, o);
  return config;
}

uint64_t resolve_seed(const cfg::Config& config, const CommonOpts& opts) {
  return opts.seed_override ? *opts.seed_override : config.get_u64("seed", 0);
}

std::set<int> parse_id_set(const std::string& spec) {
  std::set<int> out;
  if (spec.empty()) return out;
  std::istringstream ss(spec);
  std::string token;
  while (std::getline(ss, token, ',')) {
    size_t dash = token.find('-');
    try {
      if (dash == std::string::npos) {
        out.insert(std::stoi(token));
      } else {
        int lo = std::stoi(token.substr(0, dash));
        int hi = std::stoi(token.substr(dash + 1));
        if (hi < lo) throw std::invalid_argument("range");
        for (int v = lo; v <= hi; ++v) out.insert(v);
      }
    } catch (const std::exception&) {
      throw std::invalid_argument("bad id list entry: " + token);
    }
  }
  return out;
}

void cmd_generate(const CommonOpts& opts, const std::string& out_dir) {
  cfg::Config config = resolve_config(opts);
  uint64_t seed = resolve_seed(config, opts);
  const int contents = config.get_int("data.contents", 8);
  const int frames = config.get_int("data.frames", 8);
  const int width = config.get_int("data.width", 64);
  const int height = config.get_int("data.height", 64);
  const int first_id = config.get_int("data.first_content_id", 0);
  const std::string domain = config.get("data.domain", "source");
  if (contents < 1) throw std::invalid_argument("data.contents must be >= 1");
  synth::GeneratorParams params;
  if (domain == "source") {
    params = synth::GeneratorParams::source_domain();
  } else if (domain == "target") {
    params = synth::GeneratorParams::target_domain();
  } else {
    throw std::invalid_argument("data.domain must be source|target, got " + domain);
  }

  fs::create_directories(out_dir);
  std::vector<Clip> refs = synth::generate_contents(seed, contents, frames, width, height,
                                                    params, first_id);

  io::Manifest manifest;
  for (const auto& p : provenance(config, seed)) {
    auto eq = p.find('=');
    manifest.provenance[p.substr(0, eq)] = p.substr(eq + 1);
  }
  manifest.provenance["domain"] = domain;

  struct Job {
    const Clip* ref;
    int level;
  };
  std::vector<Job> jobs;
  for (const Clip& ref : refs) {
    for (int level = 0; level <= 5; ++level) {
      jobs.push_back({&ref, level});
      manifest.entries.push_back({ref.content_id, level, width, height, frames,
                                  clip_filename(ref.content_id, level)});
    }
  }
  parallel_for(jobs.size(), opts.threads, [&](size_t i) {
    const Job& job = jobs[i];
    const std::string path =
        (fs::path(out_dir) / clip_filename(job.ref->content_id, job.level)).string();
    if (job.level == 0) {
      io::write_clip_raw(path, *job.ref);
    } else {
      io::write_clip_raw(path, synth::distort(*job.ref, job.level, params.ladder, seed));
    }
  });
  io::write_manifest((fs::path(out_dir) / "manifest.txt").string(), manifest);
  std::cout << "generated " << manifest.entries.size() << " clips (" << contents
            << " contents x 6 levels) in " << out_dir << "\n";
}

void cmd_compute_fr(const CommonOpts& opts, const std::string& manifest_path,
                    const std::string& targets_out, const std::string& labels_out) {
  cfg::Config config = resolve_config(opts);
  uint64_t seed = resolve_seed(config, opts);
  require_file(manifest_path);
  const std::string data_dir = fs::path(manifest_path).parent_path().string();
  io::Manifest manifest = io::read_manifest(manifest_path);

  std::vector<fr::Task> tasks =
      fr::parse_task_list(config.get("fr.tasks", "ssim,ms_ssim,psnr_norm"));
  const bool want_labels = !labels_out.empty();
  std::vector<fr::Task> comp_tasks = tasks;
  if (want_labels &&
      std::find(comp_tasks.begin(), comp_tasks.end(), fr::Task::MsSsim) == comp_tasks.end()) {
    comp_tasks.push_back(fr::Task::MsSsim);  // surrogate labels derive from MS-SSIM
  }

  std::map<int, Clip> refs;
  std::vector<const io::ManifestEntry*> distorted;
  for (const auto& e : manifest.entries) {
    if (e.level == 0) {
      refs.emplace(e.content_id, io::read_clip_raw(data_dir, e));
    } else {
      distorted.push_back(&e);
    }
  }
  for (const auto* e : distorted) {
    if (!refs.count(e->content_id)) {
      throw std::invalid_argument("manifest lacks a level-0 reference for content " +
                                  std::to_string(e->content_id));
    }
  }

  std::vector<fr::ProxyScores> scores(distorted.size());
  parallel_for(distorted.size(), opts.threads, [&](size_t i) {
    Clip dist = io::read_clip_raw(data_dir, *distorted[i]);
    scores[i] = fr::compute_proxy_targets(refs.at(distorted[i]->content_id), dist, comp_tasks);
  });

  io::Csv targets;
  targets.comments = provenance(config, seed);
  targets.comments.push_back("clip_mean_rows=frame_index_-1");
  targets.header = {"content_id", "level", "frame_index"};
  for (fr::Task t : tasks) targets.header.push_back(fr::task_name(t));
  for (size_t i = 0; i < distorted.size(); ++i) {
    for (size_t f = 0; f < scores[i].per_frame.size(); ++f) {
      std::vector<std::string> row = {std::to_string(distorted[i]->content_id),
                                      std::to_string(distorted[i]->level), std::to_string(f)};
      for (size_t t = 0; t < tasks.size(); ++t) row.push_back(fmt_g(scores[i].per_frame[f][t]));
      targets.rows.push_back(std::move(row));
    }
    std::vector<std::string> mean_row = {std::to_string(distorted[i]->content_id),
                                         std::to_string(distorted[i]->level), "-1"};
    for (size_t t = 0; t < tasks.size(); ++t) mean_row.push_back(fmt_g(scores[i].clip_mean[t]));
    targets.rows.push_back(std::move(mean_row));
  }
  io::write_csv(targets_out, targets);

  if (want_labels) {
    size_t ms_idx = 0;
    for (size_t t = 0; t < comp_tasks.size(); ++t) {
      if (comp_tasks[t] == fr::Task::MsSsim) ms_idx = t;
    }
    std::map<std::pair<int, int>, double> mos;
    for (size_t i = 0; i < distorted.size(); ++i) {
      mos[{distorted[i]->content_id, distorted[i]->level}] =
          fr::mos_surrogate_from_ms_ssim(scores[i].clip_mean[ms_idx]);
    }
    io::Csv labels;
    labels.comments = provenance(config, seed);
    labels.comments.push_back("labels=mos_surrogate_from_ms_ssim");
    labels.header = {"content_id", "level", "mos_surrogate"};
    for (const auto& e : manifest.entries) {
      double value = e.level == 0 ? 5.0 : mos.at({e.content_id, e.level});
      labels.rows.push_back(
          {std::to_string(e.content_id), std::to_string(e.level), fmt_g(value)});
    }
    io::write_csv(labels_out, labels);
  }
  std::cout << "computed proxy targets for " << distorted.size() << " distorted clips\n";
}

void cmd_pretrain(const CommonOpts& opts, const std::string& manifest_path,
                  const std::string& targets_csv, const std::string& out_dir) {
  cfg::Config config = resolve_config(opts);
  uint64_t seed = resolve_seed(config, opts);
  require_file(manifest_path);
  const std::string data_dir = fs::path(manifest_path).parent_path().string();
  require_file(targets_csv);

  io::Manifest manifest = io::read_manifest(manifest_path);
  TargetTable table = read_targets_csv(targets_csv);
  LoadedTrainSet set = load_train_set(data_dir, manifest, table, {});

  train::TrainConfig tc = train_config_from(config, seed);
  auto targets = select_task_targets(set, tc.tasks);

  fs::create_directories(out_dir);
  auto res = train::pretrain(set.clips, targets, tc, [&](int epoch, const train::Model& model) {
    io::save_model((fs::path(out_dir) / ("ckpt_epoch_" + std::to_string(epoch) + ".bin")).string(),
                   model);
  });
  io::save_model((fs::path(out_dir) / "checkpoint.bin").string(), res.model);
  write_log_with_comments((fs::path(out_dir) / "train_log.csv").string(),
                          provenance(config, seed), res.log);

  double first = res.log.steps.front().joint_loss;
  double last = res.log.steps.back().joint_loss;
  std::cout << "pretrained on " << set.clips.size() << " clips, " << res.log.steps.size()
            << " steps; joint loss " << fmt_g(first) << " -> " << fmt_g(last) << "\n";
}

void cmd_extract_features(const CommonOpts& opts, const std::string& manifest_path,
                          const std::string& checkpoint, const std::string& features_out,
                          const std::string& contents_filter) {
  cfg::Config config = resolve_config(opts);
  uint64_t seed = resolve_seed(config, opts);
  require_file(manifest_path);
  const std::string data_dir = fs::path(manifest_path).parent_path().string();
  require_file(checkpoint);

  io::Manifest manifest = io::read_manifest(manifest_path);
  train::Model model = io::load_model(checkpoint);
  const int stride = config.get_int("features.frame_stride", 2);
  if (stride < 1) throw std::invalid_argument("features.frame_stride must be >= 1");
  std::set<int> filter = parse_id_set(contents_filter);

  std::vector<const io::ManifestEntry*> selected;
  for (const auto& e : manifest.entries) {
    if (filter.empty() || filter.count(e.content_id)) selected.push_back(&e);
  }
  if (selected.empty()) throw std::invalid_argument("contents filter selects no clips");
  for (const auto* e : selected) {
    if (e->width != model.encoder.in_width || e->height != model.encoder.in_height) {
      throw std::invalid_argument("clip geometry does not match the checkpoint encoder input");
    }
  }

  std::vector<std::vector<double>> feats(selected.size());
  parallel_for(selected.size(), opts.threads, [&](size_t i) {
    Clip clip = io::read_clip_raw(data_dir, *selected[i]);
    feats[i] = pooled_embedding(model, clip, stride);
  });

  io::Csv csv;
  csv.comments = provenance(config, seed);
  csv.comments.push_back("frame_stride=" + std::to_string(stride));
  csv.comments.push_back("embed_dim=" + std::to_string(model.encoder.embed_dim));
  csv.header = {"content_id", "level"};
  for (int j = 0; j < model.encoder.embed_dim; ++j) csv.header.push_back("f" + std::to_string(j));
  for (size_t i = 0; i < selected.size(); ++i) {
    std::vector<std::string> row = {std::to_string(selected[i]->content_id),
                                    std::to_string(selected[i]->level)};
    for (double v : feats[i]) row.push_back(fmt_g17(v));
    csv.rows.push_back(std::move(row));
  }
  io::write_csv(features_out, csv);
  std::cout << "extracted features for " << selected.size() << " clips\n";
}

void cmd_fit_head(const CommonOpts& opts, const std::string& features_csv,
                  const std::string& labels_csv, const std::string& model_kind,
                  const std::string& model_out) {
  cfg::Config config = resolve_config(opts);
  uint64_t seed = resolve_seed(config, opts);
  auto data = join_features_labels(features_csv, labels_csv);

  const std::string kind = model_kind.empty() ? config.get("head.model", "svr") : model_kind;
  if (kind == "ridge") {
    std::vector<std::vector<double>> x;
    std::vector<double> y;
    for (const auto& f : data) {
      x.push_back(f.values);
      y.push_back(*f.label);
    }
    double lambda = config.get_double("head.ridge_lambda", 1.0);
    regress::RidgeModel model = regress::ridge_fit(x, y, lambda);
    io::save_ridge(model_out, model);
    std::cout << "ridge fitted on " << data.size() << " clips (lambda=" << fmt_g(lambda) << ")\n";
  } else if (kind == "svr") {
    std::vector<double> c_grid, gamma_grid;
    if (config.has("head.c_grid")) {
      c_grid = parse_double_list(config.get("head.c_grid", ""), "head.c_grid");
    }
    if (config.has("head.gamma_grid")) {
      gamma_grid = parse_double_list(config.get("head.gamma_grid", ""), "head.gamma_grid");
    }
    regress::GridSearchResult gs = regress::grid_search_cv(data, c_grid, gamma_grid, seed);
    io::save_svr(model_out, gs.model);
    std::cout << "svr fitted on " << data.size() << " clips: C=" << fmt_g(gs.c)
              << " gamma=" << fmt_g(gs.gamma) << " epsilon=" << fmt_g(gs.epsilon);
    if (gs.best_mean_srcc) std::cout << " cv_srcc=" << fmt_g(*gs.best_mean_srcc);
    if (gs.reduced_folds) std::cout << " (reduced folds: fewer than 5 contents)";
    std::cout << "\n";
  } else {
    throw std::invalid_argument("model kind must be ridge|svr, got " + kind);
  }
}

void cmd_evaluate(const CommonOpts& opts, const std::string& features_csv,
                  const std::string& labels_csv, const std::string& report_out,
                  const std::string& source_features, const std::string& source_labels,
                  const std::string& svg_out) {
  cfg::Config config = resolve_config(opts);
  uint64_t seed = resolve_seed(config, opts);
  const std::string protocol = config.get("eval.protocol", "standard");
  auto target = join_features_labels(features_csv, labels_csv);

  io::Csv out;
  out.comments = provenance(config, seed);
  out.comments.push_back("protocol=" + protocol);
  out.comments.push_back("labels=mos_surrogate");
  out.header = {"row", "n", "srcc", "krcc", "plcc", "rmse", "c", "gamma"};

  if (protocol == "standard") {
    int runs = config.get_int("eval.runs", 100);
    proto::ProtocolSummary sum = proto::standard_split_protocol(target, runs, seed, opts.threads);
    if (sum.any_reduced_folds) out.comments.push_back("reduced_folds=1");
    write_report_rows(out, sum, true, "median");
    if (!svg_out.empty()) {
      write_scatter_svg(svg_out, sum.runs.front().pred, sum.runs.front().truth,
                        sum.runs.front().report);
    }
  } else if (protocol == "fewshot") {
    std::vector<int> ks = config.get_int_list("eval.fewshot_k", {10, 20, 50, 100});
    int samplings = config.get_int("eval.samplings", 100);
    proto::RegressorKind kind = proto::parse_regressor(config.get("eval.regressor", "ridge"));
    double lambda = config.get_double("head.ridge_lambda", 1.0);
    if (!svg_out.empty()) {
      throw std::invalid_argument("--svg is supported for standard and zeroshot protocols only");
    }
    for (int k : ks) {
      proto::ProtocolSummary sum =
          proto::few_shot_protocol(target, k, kind, samplings, seed, opts.threads, lambda);
      write_report_rows(out, sum, false, "k" + std::to_string(k));
    }
  } else if (protocol == "zeroshot") {
    if (source_features.empty() || source_labels.empty()) {
      throw std::invalid_argument("zeroshot needs --source-features and --source-labels");
    }
    auto source = join_features_labels(source_features, source_labels);
    int epochs = config.get_int("eval.zeroshot_epochs", 30);
    proto::ZeroShotResult res = proto::zero_shot_protocol(source, target, seed, epochs);
    out.rows.push_back({"zeroshot", std::to_string(res.report.n), fmt_opt(res.report.srcc),
                        fmt_opt(res.report.krcc), fmt_opt(res.report.plcc),
                        fmt_opt(res.report.rmse), "", ""});
    if (!svg_out.empty()) {
      std::vector<double> truth;
      for (const auto& f : target) truth.push_back(*f.label);
      write_scatter_svg(svg_out, res.target_pred, truth, res.report);
    }
  } else {
    throw std::invalid_argument("eval.protocol must be standard|fewshot|zeroshot, got " +
                                protocol);
  }
  io::write_csv(report_out, out);
  std::cout << "evaluation report written to " << report_out << "\n";
}

void cmd_report(const std::vector<std::string>& inputs, const std::string& out) {
  if (inputs.empty()) throw std::invalid_argument("report needs at least one input csv");
  io::Csv combined;
  combined.comments = {"tool=vqproxy", "kind=summary"};
  combined.header = {"source", "row", "n", "srcc", "krcc", "plcc", "rmse"};
  for (const auto& path : inputs) {
    require_file(path);
    io::Csv csv = io::read_csv(path);
    std::map<std::string, size_t> col;
    for (size_t i = 0; i < csv.header.size(); ++i) col[csv.header[i]] = i;
    for (const auto& name : {"row", "n", "srcc", "krcc", "plcc", "rmse"}) {
      if (!col.count(name)) {
        throw std::invalid_argument(path + " is not an evaluation report (missing column " +
                                    std::string(name) + ")");
      }
    }
    const std::string base = fs::path(path).filename().string();
    for (const auto& row : csv.rows) {
      const std::string& tag = row[col["row"]];
      bool summary = tag == "median" || tag == "zeroshot" ||
                     (tag.size() > 1 && tag[0] == 'k' &&
                      tag.find_first_not_of("0123456789", 1) == std::string::npos);
      if (!summary) continue;
      combined.rows.push_back({base, tag, row[col["n"]], row[col["srcc"]], row[col["krcc"]],
                               row[col["plcc"]], row[col["rmse"]]});
    }
  }
  io::write_csv(out, combined);
  std::cout << "summary written to " << out << " (" << combined.rows.size() << " rows)\n";
}

void cmd_ablate(const CommonOpts& opts, const std::string& manifest_path,
                const std::string& targets_csv, const std::string& labels_csv,
                const std::string& eval_contents, const std::string& out_dir) {
  cfg::Config config = resolve_config(opts);
  uint64_t seed = resolve_seed(config, opts);
  require_file(manifest_path);
  const std::string data_dir = fs::path(manifest_path).parent_path().string();
  require_file(targets_csv);
  require_file(labels_csv);

  io::Manifest manifest = io::read_manifest(manifest_path);
  TargetTable table = read_targets_csv(targets_csv);
  auto labels = read_labels_csv(labels_csv);

  std::vector<int> all_contents;
  for (const auto& e : manifest.entries) all_contents.push_back(e.content_id);
  std::sort(all_contents.begin(), all_contents.end());
  all_contents.erase(std::unique(all_contents.begin(), all_contents.end()), all_contents.end());

  std::set<int> eval_set = parse_id_set(eval_contents);
  if (eval_set.empty()) {
    // default: last 20% of contents (at least one, never all)
    size_t n_eval = std::max<size_t>(1, all_contents.size() / 5);
    n_eval = std::min(n_eval, all_contents.size() - 1);
    eval_set.insert(all_contents.end() - static_cast<long>(n_eval), all_contents.end());
  }
  std::set<int> train_set;
  for (int c : all_contents) {
    if (!eval_set.count(c)) train_set.insert(c);
  }
  if (train_set.empty()) throw std::invalid_argument("ablate: no training contents left");
  for (int c : eval_set) {
    if (std::find(all_contents.begin(), all_contents.end(), c) == all_contents.end()) {
      throw std::invalid_argument("ablate: eval content " + std::to_string(c) +
                                  " is not in the manifest");
    }
  }

  LoadedTrainSet set = load_train_set(data_dir, manifest, table, train_set);

  // Eval clips (all levels) loaded once; features recomputed per variant.
  std::vector<const io::ManifestEntry*> eval_entries;
  for (const auto& e : manifest.entries) {
    if (eval_set.count(e.content_id)) eval_entries.push_back(&e);
  }
  std::vector<Clip> eval_clips;
  for (const auto* e : eval_entries) eval_clips.push_back(io::read_clip_raw(data_dir, *e));

  const int stride = config.get_int("features.frame_stride", 2);
  const int runs = config.get_int("eval.runs", 100);
  train::TrainConfig base_tc = train_config_from(config, seed);
  fr::Task st_task = fr::parse_task(config.get("ablate.st_task", "psnr_norm"));

  struct Variant {
    std::string name;
    std::vector<fr::Task> tasks;
  };
  std::vector<Variant> variants = {{"ST", {st_task}}, {"MTL", base_tc.tasks}};

  fs::create_directories(out_dir);
  io::Csv out;
  out.comments = provenance(config, seed);
  out.comments.push_back("harness=st_vs_mtl");
  out.comments.push_back("eval_runs=" + std::to_string(runs));
  out.header = {"variant", "tasks", "runs", "srcc", "krcc", "plcc", "rmse"};

  for (const Variant& variant : variants) {
    train::TrainConfig tc = base_tc;
    tc.tasks = variant.tasks;
    auto targets = select_task_targets(set, tc.tasks);
    train::PretrainResult res = train::pretrain(set.clips, targets, tc);

    std::vector<regress::FeatureVector> data(eval_entries.size());
    parallel_for(eval_entries.size(), opts.threads, [&](size_t i) {
      regress::FeatureVector fv;
      fv.content_id = eval_entries[i]->content_id;
      fv.clip_id = clip_key(eval_entries[i]->content_id, eval_entries[i]->level);
      fv.values = pooled_embedding(res.model, eval_clips[i], stride);
      auto it = labels.find({eval_entries[i]->content_id, eval_entries[i]->level});
      if (it == labels.end()) {
        throw std::invalid_argument("ablate: no label for eval content " +
                                    std::to_string(eval_entries[i]->content_id) + " level " +
                                    std::to_string(eval_entries[i]->level));
      }
      fv.label = it->second;
      data[i] = std::move(fv);
    });

    proto::ProtocolSummary sum = proto::standard_split_protocol(data, runs, seed, opts.threads);
    std::string task_list;
    for (size_t t = 0; t < variant.tasks.size(); ++t) {
      task_list += (t ? "+" : "") + std::string(fr::task_name(variant.tasks[t]));
    }
    out.rows.push_back({variant.name, task_list, std::to_string(runs),
                        fmt_opt(sum.median.srcc), fmt_opt(sum.median.krcc),
                        fmt_opt(sum.median.plcc), fmt_opt(sum.median.rmse)});
    write_log_with_comments(
        (fs::path(out_dir) / ("train_log_" + variant.name + ".csv")).string(),
        provenance(config, seed), res.log);
  }
  io::write_csv((fs::path(out_dir) / "ablate.csv").string(), out);
  std::cout << "ablation table written to " << (fs::path(out_dir) / "ablate.csv").string()
            << "\n";
}

int run_cli(int argc, char** argv) {
  CLI::App app{"synthetic-corpus proxy-supervised video quality pipeline"};
  app.require_subcommand(1);

  auto add_common = [](CLI::App* sub, CommonOpts& opts) {
    sub->add_option("--config", opts.config_path, "key=value config file");
    sub->add_option("--set", opts.overrides, "config override key=value (repeatable)");
    sub->add_option("--seed", opts.seed_override, "seed override");
    sub->add_option("--threads", opts.threads, "worker threads (1 = reference path)")
        ->check(CLI::Range(1, 256));
  };

  CommonOpts gen_opts;
  std::string gen_out, gen_size;
  int gen_contents = -1, gen_frames = -1;
  auto* gen = app.add_subcommand("generate", "synthesize reference clips + distortion ladder");
  add_common(gen, gen_opts);
  gen->add_option("--contents", gen_contents, "number of contents")->check(CLI::PositiveNumber);
  gen->add_option("--frames", gen_frames, "frames per clip")->check(CLI::PositiveNumber);
  gen->add_option("--size", gen_size, "frame size WxH, e.g. 96x96");
  gen->add_option("--out", gen_out, "output clip directory")->required();

  CommonOpts fr_opts;
  std::string fr_manifest, fr_tasks, fr_targets, fr_labels;
  auto* frc = app.add_subcommand("compute-fr", "compute proxy targets against references");
  add_common(frc, fr_opts);
  frc->add_option("--manifest", fr_manifest, "clip manifest")->required();
  frc->add_option("--tasks", fr_tasks, "comma list, e.g. ssim,ms_ssim,psnr_norm");
  frc->add_option("--out", fr_targets, "per-frame targets csv")->required();
  frc->add_option("--labels-out", fr_labels, "clip-level mos surrogate csv");

  CommonOpts pre_opts;
  std::string pre_manifest, pre_targets, pre_out;
  auto* pre = app.add_subcommand("pretrain", "train the multi-task encoder");
  add_common(pre, pre_opts);
  pre->add_option("--manifest", pre_manifest, "clip manifest")->required();
  pre->add_option("--targets", pre_targets, "per-frame targets csv")->required();
  pre->add_option("--out", pre_out, "checkpoint output directory")->required();

  CommonOpts ext_opts;
  std::string ext_manifest, ext_ckpt, ext_out, ext_contents;
  auto* ext = app.add_subcommand("extract-features", "pool frozen encoder embeddings per clip");
  add_common(ext, ext_opts);
  ext->add_option("--checkpoint", ext_ckpt, "encoder checkpoint")->required();
  ext->add_option("--manifest", ext_manifest, "clip manifest")->required();
  ext->add_option("--out", ext_out, "features csv")->required();
  ext->add_option("--contents", ext_contents, "content id filter, e.g. 30-39");

  CommonOpts fit_opts;
  std::string fit_features, fit_labels, fit_kind, fit_out;
  auto* fit = app.add_subcommand("fit-head", "fit a ridge or svr quality head");
  add_common(fit, fit_opts);
  fit->add_option("--features", fit_features, "features csv")->required();
  fit->add_option("--labels", fit_labels, "labels csv")->required();
  fit->add_option("--model", fit_kind, "ridge|svr (default from config)")
      ->check(CLI::IsMember({"ridge", "svr"}));
  fit->add_option("--out", fit_out, "model output file")->required();

  CommonOpts eval_opts;
  std::string eval_protocol, eval_features, eval_labels, eval_out;
  std::string eval_src_features, eval_src_labels, eval_svg;
  auto* ev = app.add_subcommand("evaluate", "run an evaluation protocol");
  add_common(ev, eval_opts);
  ev->add_option("--protocol", eval_protocol, "standard|fewshot|zeroshot")
      ->check(CLI::IsMember({"standard", "fewshot", "zeroshot"}));
  ev->add_option("--features", eval_features, "target features csv")->required();
  ev->add_option("--labels", eval_labels, "target labels csv")->required();
  ev->add_option("--out", eval_out, "report csv")->required();
  ev->add_option("--source-features", eval_src_features, "source features (zeroshot)");
  ev->add_option("--source-labels", eval_src_labels, "source labels (zeroshot)");
  ev->add_option("--svg", eval_svg, "scatter plot output (standard/zeroshot)");

  std::vector<std::string> rep_inputs;
  std::string rep_out;
  auto* rep = app.add_subcommand("report", "combine evaluation reports into one summary");
  rep->add_option("--inputs", rep_inputs, "evaluation report csvs")->required();
  rep->add_option("--out", rep_out, "summary csv")->required();

  CommonOpts abl_opts;
  std::string abl_manifest, abl_targets, abl_labels, abl_eval, abl_out;
  auto* abl = app.add_subcommand("ablate", "single-task vs multi-task side-by-side table");
  add_common(abl, abl_opts);
  abl->add_option("--manifest", abl_manifest, "clip manifest")->required();
  abl->add_option("--targets", abl_targets, "per-frame targets csv")->required();
  abl->add_option("--labels", abl_labels, "clip labels csv")->required();
  abl->add_option("--eval-contents", abl_eval, "content ids held out for evaluation");
  abl->add_option("--out", abl_out, "output directory")->required();

  gen->callback([&] {
    if (gen_contents > 0) gen_opts.overrides.push_back("data.contents=" + std::to_string(gen_contents));
    if (gen_frames > 0) gen_opts.overrides.push_back("data.frames=" + std::to_string(gen_frames));
    if (!gen_size.empty()) {
      size_t xpos = gen_size.find('x');
      int w = 0, h = 0;
      if (xpos != std::string::npos) {
        try {
          size_t used = 0;
          w = std::stoi(gen_size.substr(0, xpos), &used);
          if (used != xpos) w = 0;
          h = std::stoi(gen_size.substr(xpos + 1), &used);
          if (used != gen_size.size() - xpos - 1) h = 0;
        } catch (const std::exception&) {
          w = 0;
        }
      }
      if (w <= 0 || h <= 0) throw std::invalid_argument("--size expects WxH, e.g. 96x96");
      gen_opts.overrides.push_back("data.width=" + std::to_string(w));
      gen_opts.overrides.push_back("data.height=" + std::to_string(h));
    }
    cmd_generate(gen_opts, gen_out);
  });
  frc->callback([&] {
    if (!fr_tasks.empty()) fr_opts.overrides.push_back("fr.tasks=" + fr_tasks);
    cmd_compute_fr(fr_opts, fr_manifest, fr_targets, fr_labels);
  });
  pre->callback([&] { cmd_pretrain(pre_opts, pre_manifest, pre_targets, pre_out); });
  ext->callback([&] { cmd_extract_features(ext_opts, ext_manifest, ext_ckpt, ext_out, ext_contents); });
  fit->callback([&] { cmd_fit_head(fit_opts, fit_features, fit_labels, fit_kind, fit_out); });
  ev->callback([&] {
    if (!eval_protocol.empty()) eval_opts.overrides.push_back("eval.protocol=" + eval_protocol);
    cmd_evaluate(eval_opts, eval_features, eval_labels, eval_out, eval_src_features,
                 eval_src_labels, eval_svg);
  });
  rep->callback([&] { cmd_report(rep_inputs, rep_out); });
  abl->callback([&] { cmd_ablate(abl_opts, abl_manifest, abl_targets, abl_labels, abl_eval, abl_out); });

  try {
    app.parse(argc, argv);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace vqp::pipe
