#pragma once

#include <map>
#include <string>
#include <vector>

#include "vqp/frame.hpp"
#include "vqp/regress.hpp"
#include "vqp/trainer.hpp"

namespace vqp::io {

// --- clip storage ------------------------------------------------------
// Frames are stored as concatenated row-major float32 little-endian planes;
// geometry lives in the manifest, not in the raw file.

struct ManifestEntry {
  int content_id = 0;
  int level = 0;
  int width = 0;
  int height = 0;
  int frames = 0;
  std::string filename;
};

struct Manifest {
  std::vector<ManifestEntry> entries;
  std::map<std::string, std::string> provenance;  // parsed from "# key=value" lines
};

void write_clip_raw(const std::string& path, const Clip& clip);
Clip read_clip_raw(const std::string& dir, const ManifestEntry& entry);

void write_manifest(const std::string& path, const Manifest& manifest);
Manifest read_manifest(const std::string& path);

// --- tensor container --------------------------------------------------
// "VQPK" v1: u32 tensor count, then per tensor u32 name length, name bytes,
// u32 rank, u32 dims, float64 little-endian payload. Used for both encoder
// checkpoints and fitted regression heads.

struct NamedTensor {
  std::string name;
  std::vector<int> shape;
  std::vector<double> data;
};

void write_tensor_file(const std::string& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> read_tensor_file(const std::string& path);

void save_model(const std::string& path, const train::Model& model);
train::Model load_model(const std::string& path);

// Fitted regression head in the same container.
struct HeadModel {
  enum class Kind { Ridge, Svr } kind = Kind::Ridge;
  regress::RidgeModel ridge;
  regress::SvrModel svr;

  double predict(const std::vector<double>& x) const;
};

void save_ridge(const std::string& path, const regress::RidgeModel& model);
void save_svr(const std::string& path, const regress::SvrModel& model);
HeadModel load_head(const std::string& path);

// --- CSV ----------------------------------------------------------------
// Comment lines ("# ...") carry provenance; fields never contain commas.
// An empty field encodes a missing value.

struct Csv {
  std::vector<std::string> comments;  // stored without the leading "# "
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

void write_csv(const std::string& path, const Csv& csv);
Csv read_csv(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace vqp::io
