#include "vqp/io.hpp"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace vqp::io {

namespace {

constexpr char kMagic[4] = {'V', 'Q', 'P', 'K'};
constexpr uint32_t kVersion = 1;

void put_u32(std::ostream& os, uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
               static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  os.write(b, 4);
}

uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw std::runtime_error("tensor file truncated");
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

void put_f64(std::ostream& os, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  os.write(b, 8);
}

double get_f64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw std::runtime_error("tensor file truncated");
  uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<uint64_t>(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

void put_f32(std::ostream& os, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  os.write(b, 4);
}

float get_f32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw std::runtime_error("clip file truncated");
  uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<uint32_t>(b[i]) << (8 * i);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream os(path, mode);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  return os;
}

std::ifstream open_in(const std::string& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream is(path, mode);
  if (!is) throw std::runtime_error("cannot open for reading: " + path);
  return is;
}

const NamedTensor& find_tensor(const std::vector<NamedTensor>& tensors, const std::string& name) {
  for (const auto& t : tensors)
    if (t.name == name) return t;
  throw std::runtime_error("tensor '" + name + "' missing from container");
}

NamedTensor vec_tensor(const std::string& name, const std::vector<double>& v) {
  return {name, {static_cast<int>(v.size())}, v};
}

}  // namespace

void write_clip_raw(const std::string& path, const Clip& clip) {
  validate_clip(clip);
  std::ofstream os = open_out(path, std::ios::binary);
  for (const Frame& f : clip.frames) {
    for (double v : f.luma) put_f32(os, static_cast<float>(v));
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

Clip read_clip_raw(const std::string& dir, const ManifestEntry& entry) {
  const std::string path = (std::filesystem::path(dir) / entry.filename).string();
  std::ifstream is = open_in(path, std::ios::binary);
  Clip clip;
  clip.content_id = entry.content_id;
  clip.distortion_level = entry.level;
  clip.frames.reserve(entry.frames);
  for (int f = 0; f < entry.frames; ++f) {
    Frame frame(entry.width, entry.height);
    for (double& v : frame.luma) v = static_cast<double>(get_f32(is));
    clip.frames.push_back(std::move(frame));
  }
  char extra;
  if (is.read(&extra, 1)) throw std::runtime_error("clip file larger than manifest geometry: " + path);
  validate_clip(clip);
  return clip;
}

void write_manifest(const std::string& path, const Manifest& manifest) {
  std::ofstream os = open_out(path);
  for (const auto& [k, v] : manifest.provenance) os << "# " << k << '=' << v << '\n';
  os << "# columns: content_id level width height frames filename\n";
  for (const auto& e : manifest.entries) {
    os << e.content_id << ' ' << e.level << ' ' << e.width << ' ' << e.height << ' ' << e.frames
       << ' ' << e.filename << '\n';
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

Manifest read_manifest(const std::string& path) {
  std::ifstream is = open_in(path);
  Manifest m;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ss(line.substr(1));
      std::string token;
      while (ss >> token) {
        auto eq = token.find('=');
        if (eq != std::string::npos) {
          m.provenance[token.substr(0, eq)] = token.substr(eq + 1);
        }
      }
      continue;
    }
    std::istringstream ss(line);
    ManifestEntry e;
    if (!(ss >> e.content_id >> e.level >> e.width >> e.height >> e.frames >> e.filename)) {
      throw std::runtime_error("malformed manifest row in " + path + ": " + line);
    }
    m.entries.push_back(std::move(e));
  }
  if (m.entries.empty()) throw std::runtime_error("manifest holds no clips: " + path);
  return m;
}

void write_tensor_file(const std::string& path, const std::vector<NamedTensor>& tensors) {
  std::ofstream os = open_out(path, std::ios::binary);
  os.write(kMagic, 4);
  put_u32(os, kVersion);
  put_u32(os, static_cast<uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    put_u32(os, static_cast<uint32_t>(t.name.size()));
    os.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    put_u32(os, static_cast<uint32_t>(t.shape.size()));
    size_t count = 1;
    for (int d : t.shape) {
      if (d <= 0) throw std::invalid_argument("tensor dimension must be positive");
      put_u32(os, static_cast<uint32_t>(d));
      count *= static_cast<size_t>(d);
    }
    if (count != t.data.size()) throw std::invalid_argument("tensor shape/data mismatch");
    for (double v : t.data) put_f64(os, v);
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

std::vector<NamedTensor> read_tensor_file(const std::string& path) {
  std::ifstream is = open_in(path, std::ios::binary);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error("not a tensor container: " + path);
  }
  uint32_t version = get_u32(is);
  if (version != kVersion) {
    throw std::runtime_error("unsupported container version " + std::to_string(version));
  }
  uint32_t count = get_u32(is);
  std::vector<NamedTensor> tensors;
  tensors.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    uint32_t name_len = get_u32(is);
    t.name.resize(name_len);
    is.read(t.name.data(), name_len);
    uint32_t rank = get_u32(is);
    size_t n = 1;
    for (uint32_t d = 0; d < rank; ++d) {
      t.shape.push_back(static_cast<int>(get_u32(is)));
      n *= static_cast<size_t>(t.shape.back());
    }
    t.data.resize(n);
    for (double& v : t.data) v = get_f64(is);
    if (!is) throw std::runtime_error("tensor file truncated: " + path);
    tensors.push_back(std::move(t));
  }
  return tensors;
}

void save_model(const std::string& path, const train::Model& model) {
  std::vector<NamedTensor> tensors;
  tensors.push_back({"meta.geometry",
                     {4},
                     {static_cast<double>(model.encoder.in_height),
                      static_cast<double>(model.encoder.in_width),
                      static_cast<double>(model.encoder.embed_dim),
                      static_cast<double>(model.heads.empty() ? 32 : model.heads[0].hidden)}});
  std::vector<double> task_codes;
  for (fr::Task t : model.tasks) task_codes.push_back(static_cast<double>(static_cast<int>(t)));
  tensors.push_back(vec_tensor("meta.tasks", task_codes));
  for (const auto& [name, var] : model.named()) {
    tensors.push_back({name, var->shape, var->val});
  }
  write_tensor_file(path, tensors);
}

train::Model load_model(const std::string& path) {
  std::vector<NamedTensor> tensors = read_tensor_file(path);
  const NamedTensor& geo = find_tensor(tensors, "meta.geometry");
  if (geo.data.size() != 4) throw std::runtime_error("bad meta.geometry in " + path);
  const NamedTensor& task_codes = find_tensor(tensors, "meta.tasks");
  std::vector<fr::Task> tasks;
  for (double code : task_codes.data) tasks.push_back(static_cast<fr::Task>(static_cast<int>(code)));

  train::Model model = train::Model::init(static_cast<int>(geo.data[0]),
                                          static_cast<int>(geo.data[1]),
                                          static_cast<int>(geo.data[2]), tasks, 0);
  for (auto& [name, var] : model.named()) {
    const NamedTensor& t = find_tensor(tensors, name);
    if (t.shape != var->shape) throw std::runtime_error("shape mismatch for tensor " + name);
    var->val = t.data;
  }
  return model;
}

double HeadModel::predict(const std::vector<double>& x) const {
  return kind == Kind::Ridge ? ridge.predict(x) : svr.predict(x);
}

void save_ridge(const std::string& path, const regress::RidgeModel& model) {
  std::vector<NamedTensor> tensors;
  tensors.push_back({"meta.kind", {1}, {0.0}});
  tensors.push_back(vec_tensor("stz.mean", model.stz.mean));
  tensors.push_back(vec_tensor("stz.scale", model.stz.scale));
  tensors.push_back(vec_tensor("weights", model.weights));
  tensors.push_back({"scalars", {2}, {model.intercept, model.lambda}});
  tensors.push_back({"flags", {1}, {model.constant_labels ? 1.0 : 0.0}});
  write_tensor_file(path, tensors);
}

void save_svr(const std::string& path, const regress::SvrModel& model) {
  std::vector<NamedTensor> tensors;
  tensors.push_back({"meta.kind", {1}, {1.0}});
  tensors.push_back(vec_tensor("stz.mean", model.stz.mean));
  tensors.push_back(vec_tensor("stz.scale", model.stz.scale));
  const int n = static_cast<int>(model.support.size());
  const int d = static_cast<int>(model.stz.mean.size());
  NamedTensor sv{"support", {std::max(n, 1), d}, {}};
  sv.data.assign(static_cast<size_t>(std::max(n, 1)) * d, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) sv.data[static_cast<size_t>(i) * d + j] = model.support[i][j];
  }
  tensors.push_back(std::move(sv));
  std::vector<double> coef = model.dual_coef;
  if (coef.empty()) coef.push_back(0.0);  // container needs positive dims
  tensors.push_back(vec_tensor("dual_coef", coef));
  tensors.push_back({"scalars",
                     {6},
                     {model.bias, model.gamma, model.epsilon, model.C, model.kkt_residual,
                      static_cast<double>(n)}});
  tensors.push_back({"flags", {1}, {model.converged ? 1.0 : 0.0}});
  write_tensor_file(path, tensors);
}

HeadModel load_head(const std::string& path) {
  std::vector<NamedTensor> tensors = read_tensor_file(path);
  HeadModel head;
  double kind = find_tensor(tensors, "meta.kind").data.at(0);
  const NamedTensor& mean = find_tensor(tensors, "stz.mean");
  const NamedTensor& scale = find_tensor(tensors, "stz.scale");
  if (kind == 0.0) {
    head.kind = HeadModel::Kind::Ridge;
    head.ridge.stz.mean = mean.data;
    head.ridge.stz.scale = scale.data;
    head.ridge.weights = find_tensor(tensors, "weights").data;
    const auto& sc = find_tensor(tensors, "scalars").data;
    head.ridge.intercept = sc.at(0);
    head.ridge.lambda = sc.at(1);
    head.ridge.constant_labels = find_tensor(tensors, "flags").data.at(0) != 0.0;
  } else {
    head.kind = HeadModel::Kind::Svr;
    head.svr.stz.mean = mean.data;
    head.svr.stz.scale = scale.data;
    const auto& sc = find_tensor(tensors, "scalars").data;
    head.svr.bias = sc.at(0);
    head.svr.gamma = sc.at(1);
    head.svr.epsilon = sc.at(2);
    head.svr.C = sc.at(3);
    head.svr.kkt_residual = sc.at(4);
    const int n = static_cast<int>(sc.at(5));
    const NamedTensor& sv = find_tensor(tensors, "support");
    const int d = sv.shape.at(1);
    const auto& coef = find_tensor(tensors, "dual_coef").data;
    for (int i = 0; i < n; ++i) {
      head.svr.support.emplace_back(sv.data.begin() + static_cast<long>(i) * d,
                                    sv.data.begin() + static_cast<long>(i + 1) * d);
      head.svr.dual_coef.push_back(coef.at(static_cast<size_t>(i)));
    }
    head.svr.converged = find_tensor(tensors, "flags").data.at(0) != 0.0;
  }
  return head;
}

void write_csv(const std::string& path, const Csv& csv) {
  std::ofstream os = open_out(path);
  for (const auto& c : csv.comments) os << "# " << c << '\n';
  for (size_t i = 0; i < csv.header.size(); ++i) {
    os << (i ? "," : "") << csv.header[i];
  }
  os << '\n';
  for (const auto& row : csv.rows) {
    if (row.size() != csv.header.size()) {
      throw std::invalid_argument("csv row width differs from header");
    }
    for (size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
    os << '\n';
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

Csv read_csv(const std::string& path) {
  std::ifstream is = open_in(path);
  Csv csv;
  std::string line;
  bool header_done = false;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::string c = line.substr(1);
      if (!c.empty() && c[0] == ' ') c.erase(0, 1);
      csv.comments.push_back(c);
      continue;
    }
    std::vector<std::string> fields;
    size_t start = 0;
    while (true) {
      size_t comma = line.find(',', start);
      if (comma == std::string::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, comma - start));
      start = comma + 1;
    }
    if (!header_done) {
      csv.header = std::move(fields);
      header_done = true;
    } else {
      csv.rows.push_back(std::move(fields));
    }
  }
  if (!header_done) throw std::runtime_error("csv has no header row: " + path);
  return csv;
}

std::string read_text_file(const std::string& path) {
  std::ifstream is = open_in(path, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream os = open_out(path, std::ios::binary);
  os << content;
  if (!os) throw std::runtime_error("write failed: " + path);
}

}  // namespace vqp::io
