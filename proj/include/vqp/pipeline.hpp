#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "vqp/config.hpp"

namespace vqp::pipe {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;  // bad args/config/inputs
inline constexpr int kExitRuntime = 3;     // IO or computation failure

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> overrides;  // --set key=value
  std::optional<uint64_t> seed_override;
  int threads = 1;
};

// Loads the config (defaults when no path), applies overrides, validates.
cfg::Config resolve_config(const CommonOpts& opts);
uint64_t resolve_seed(const cfg::Config& config, const CommonOpts& opts);

// "3,7,10-19" -> set of ids; empty string -> empty set (meaning: no filter).
std::set<int> parse_id_set(const std::string& spec);

void cmd_generate(const CommonOpts& opts, const std::string& out_dir);
void cmd_compute_fr(const CommonOpts& opts, const std::string& manifest_path,
                    const std::string& targets_out, const std::string& labels_out);
void cmd_pretrain(const CommonOpts& opts, const std::string& manifest_path,
                  const std::string& targets_csv, const std::string& out_dir);
void cmd_extract_features(const CommonOpts& opts, const std::string& manifest_path,
                          const std::string& checkpoint, const std::string& features_out,
                          const std::string& contents_filter);
void cmd_fit_head(const CommonOpts& opts, const std::string& features_csv,
                  const std::string& labels_csv, const std::string& model_kind,
                  const std::string& model_out);
void cmd_evaluate(const CommonOpts& opts, const std::string& features_csv,
                  const std::string& labels_csv, const std::string& report_out,
                  const std::string& source_features, const std::string& source_labels,
                  const std::string& svg_out);
void cmd_report(const std::vector<std::string>& inputs, const std::string& out);
void cmd_ablate(const CommonOpts& opts, const std::string& manifest_path,
                const std::string& targets_csv, const std::string& labels_csv,
                const std::string& eval_contents, const std::string& out_dir);

int run_cli(int argc, char** argv);

}  // namespace vqp::pipe
