#include "forgerecon/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "forgerecon/errors.hpp"

namespace forgerecon {
namespace {

constexpr char kMagic[8] = {'F', 'R', 'G', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::string& path) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw CheckpointError("truncated checkpoint " + path);
  return v;
}

std::string get_string(std::istream& in, std::uint64_t len, const std::string& path) {
  if (len > (1ull << 30)) throw CheckpointError("corrupt string length in checkpoint " + path);
  std::string s(len, '\0');
  if (len && !in.read(s.data(), static_cast<std::streamsize>(len))) throw CheckpointError("truncated checkpoint " + path);
  return s;
}

}  // namespace

Checkpoint capture_checkpoint(const Model& model, const TrainConfig& config) {
  Checkpoint ck;
  ck.config_text = format_train_config(config);
  for (const auto& [name, var] : model.parameters().entries()) ck.tensors.emplace(name, var.value());
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  // Write to a sibling and rename so a crash never leaves a half-written file.
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot write checkpoint " + tmp.string());
    out.write(kMagic, sizeof kMagic);
    put(out, kVersion);
    put(out, static_cast<std::uint64_t>(ck.config_text.size()));
    out.write(ck.config_text.data(), static_cast<std::streamsize>(ck.config_text.size()));
    put(out, static_cast<std::uint64_t>(ck.tensors.size()));
    for (const auto& [name, t] : ck.tensors) {
      put(out, static_cast<std::uint64_t>(name.size()));
      out.write(name.data(), static_cast<std::streamsize>(name.size()));
      put(out, static_cast<std::uint32_t>(t.rank()));
      for (int d : t.shape()) put(out, static_cast<std::int64_t>(d));
      out.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
    }
    if (!out) throw CheckpointError("failed writing checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  const std::string p = path.string();
  if (!std::filesystem::is_regular_file(path)) throw CheckpointError("checkpoint not found: " + p);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + p);
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw CheckpointError("not a checkpoint file: " + p);
  }
  const auto version = get<std::uint32_t>(in, p);
  if (version != kVersion) throw CheckpointError("unsupported checkpoint version " + std::to_string(version) + " in " + p);
  Checkpoint ck;
  ck.config_text = get_string(in, get<std::uint64_t>(in, p), p);
  const auto count = get<std::uint64_t>(in, p);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string name = get_string(in, get<std::uint64_t>(in, p), p);
    const auto rank = get<std::uint32_t>(in, p);
    if (rank > 8) throw CheckpointError("corrupt tensor rank for " + name + " in " + p);
    Shape shape;
    for (std::uint32_t r = 0; r < rank; ++r) {
      const auto d = get<std::int64_t>(in, p);
      if (d < 0 || d > (1 << 28)) throw CheckpointError("corrupt dimension for " + name + " in " + p);
      shape.push_back(static_cast<int>(d));
    }
    Tensor t(shape);
    if (!in.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double)))) {
      throw CheckpointError("truncated checkpoint " + p);
    }
    ck.tensors.emplace(std::move(name), std::move(t));
  }
  return ck;
}

void restore_parameters(Model& model, const Checkpoint& ck) {
  std::string problems;
  for (const auto& [name, var] : model.parameters().entries()) {
    auto it = ck.tensors.find(name);
    if (it == ck.tensors.end()) {
      problems += "\n  missing " + name + " " + shape_str(var.shape());
    } else if (it->second.shape() != var.shape()) {
      problems += "\n  shape mismatch " + name + ": model " + shape_str(var.shape()) + ", checkpoint " +
                  shape_str(it->second.shape());
    }
  }
  for (const auto& [name, t] : ck.tensors) {
    if (!model.parameters().contains(name)) problems += "\n  unexpected " + name + " " + shape_str(t.shape());
  }
  if (!problems.empty()) throw CheckpointError("checkpoint does not match the model:" + problems);
  for (const auto& [name, var] : model.parameters().entries()) {
    Var v = var;
    v.mutable_value() = ck.tensors.at(name);
  }
}

LoadedModel load_model(const std::filesystem::path& path) {
  Checkpoint ck = read_checkpoint(path);
  LoadedModel out;
  try {
    out.config = parse_train_config(ck.config_text);
  } catch (const ConfigError& e) {
    throw CheckpointError("checkpoint " + path.string() + " has an invalid config echo: " + e.what());
  }
  out.model = std::make_unique<Model>(out.config.model_config(), out.config.seed);
  restore_parameters(*out.model, ck);
  return out;
}

}  // namespace forgerecon
