#include "cyclegan/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <map>
#include <sstream>

#include "cyclegan/errors.hpp"
#include "cyclegan/run_config.hpp"

namespace cyclegan {

namespace {

constexpr std::uint32_t kMaxName = 1u << 16;
constexpr std::uint32_t kMaxRank = 8;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_name(std::string& out, const std::string& name) {
  put_u32(out, static_cast<std::uint32_t>(name.size()));
  out += name;
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }

  std::string_view take(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::string name(const char* what) {
    const auto len = u32(what);
    if (len > kMaxName) throw CorruptionError(std::string("implausible ") + what + " length " + std::to_string(len));
    return std::string(take(len, what));
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::size_t offset() const { return pos_; }

 private:
  void need(std::size_t n, const char* what) const {
    if (remaining() < n) {
      throw CorruptionError("checkpoint truncated while reading " + std::string(what) + " at byte " +
                            std::to_string(pos_));
    }
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::string rng_text(const std::mt19937_64& rng) {
  std::ostringstream out;
  out << rng;
  return out.str();
}

std::mt19937_64 rng_from_text(const std::string& text, const std::string& name) {
  std::istringstream in(text);
  std::mt19937_64 rng;
  in >> rng;
  if (in.fail()) throw CorruptionError("unreadable RNG state '" + name + "'");
  return rng;
}

std::map<std::string, std::string> parse_counters(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw CorruptionError("malformed counter line '" + line + "'");
    out[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return out;
}

std::uint64_t counter(const std::map<std::string, std::string>& counters, const std::string& key) {
  const auto it = counters.find(key);
  if (it == counters.end()) throw CorruptionError("checkpoint lacks counter '" + key + "'");
  try {
    std::size_t used = 0;
    const auto v = std::stoull(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::logic_error&) {
    throw CorruptionError("bad counter '" + key + "' = '" + it->second + "'");
  }
}

struct NetSlot {
  const char* name;
  Network ModelState::*net;
  NetworkRole role;
};

constexpr NetSlot kNets[] = {{"g", &ModelState::g, NetworkRole::generator},
                             {"f", &ModelState::f, NetworkRole::generator},
                             {"d_x", &ModelState::d_x, NetworkRole::discriminator},
                             {"d_y", &ModelState::d_y, NetworkRole::discriminator}};

// Moments follow the parameter order of the networks an optimizer updates.
struct OptSlot {
  const char* name;
  AdamState TrainerState::*opt;
  std::vector<Network ModelState::*> nets;
};

const std::vector<OptSlot>& opt_slots() {
  static const std::vector<OptSlot> slots = {{"generators", &TrainerState::opt_generators, {&ModelState::g, &ModelState::f}},
                                             {"d_x", &TrainerState::opt_d_x, {&ModelState::d_x}},
                                             {"d_y", &TrainerState::opt_d_y, {&ModelState::d_y}}};
  return slots;
}

}  // namespace

const Tensor<float>& CheckpointRecord::tensor(const std::string& name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return t;
  throw CorruptionError("checkpoint lacks tensor '" + name + "'");
}

const std::string& CheckpointRecord::blob(const std::string& name) const {
  for (const auto& [n, b] : blobs)
    if (n == name) return b;
  throw CorruptionError("checkpoint lacks entry '" + name + "'");
}

std::string encode_checkpoint(const CheckpointRecord& record) {
  std::string out(kCheckpointMagic, 4);
  put_u32(out, record.version);
  put_u32(out, static_cast<std::uint32_t>(record.tensors.size()));
  for (const auto& [name, t] : record.tensors) {
    put_name(out, name);
    put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (int d : t.shape()) put_u32(out, static_cast<std::uint32_t>(d));
    for (float v : t.values()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  put_u32(out, static_cast<std::uint32_t>(record.blobs.size()));
  for (const auto& [name, bytes] : record.blobs) {
    put_name(out, name);
    put_name(out, bytes);
  }
  return out;
}

CheckpointRecord decode_checkpoint(std::string_view bytes) {
  Reader in(bytes);
  if (bytes.substr(0, 4) != std::string_view(kCheckpointMagic, 4)) throw CorruptionError("not a checkpoint (bad magic)");
  in.take(4, "magic");
  CheckpointRecord record;
  record.version = in.u32("version");
  if (record.version != kCheckpointVersion) {
    throw CorruptionError("unsupported checkpoint version " + std::to_string(record.version) + " (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  }
  const auto n_tensors = in.u32("tensor count");
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    auto name = in.name("tensor name");
    const auto rank = in.u32("rank");
    if (rank > kMaxRank) throw CorruptionError("tensor '" + name + "' has implausible rank " + std::to_string(rank));
    Shape shape;
    std::uint64_t count = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      const auto dim = in.u32("dims");
      if (dim == 0 || dim > (1u << 30)) throw CorruptionError("tensor '" + name + "' has a bad dimension");
      shape.push_back(static_cast<int>(dim));
      count *= dim;
      if (count * 4 > in.remaining()) {
        throw CorruptionError("checkpoint truncated: tensor '" + name + "' needs more data than remains");
      }
    }
    std::vector<float> values(count);
    const auto raw = in.take(count * 4, "tensor data");
    for (std::size_t k = 0; k < count; ++k) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(raw[4 * k + b])) << (8 * b);
      values[k] = std::bit_cast<float>(bits);
    }
    record.tensors.emplace_back(std::move(name), Tensor<float>::from_values(std::move(shape), std::move(values)));
  }
  const auto n_blobs = in.u32("entry count");
  for (std::uint32_t i = 0; i < n_blobs; ++i) {
    auto name = in.name("entry name");
    const auto len = in.u32("entry length");
    record.blobs.emplace_back(std::move(name), std::string(in.take(len, "entry data")));
  }
  if (in.remaining() != 0) {
    throw CorruptionError(std::to_string(in.remaining()) + " unexpected trailing bytes after offset " +
                          std::to_string(in.offset()));
  }
  return record;
}

CheckpointRecord to_record(const TrainerState& state) {
  CheckpointRecord r;
  for (const auto& slot : kNets) {
    const Network& net = state.model.*slot.net;
    r.blobs.emplace_back(std::string("spec.") + slot.name, net.spec.notation());
    for (const auto& [name, t] : net.params) r.tensors.emplace_back(std::string(slot.name) + "." + name, t);
  }
  std::string counters = "epoch=" + std::to_string(state.epoch) + "\nstep=" + std::to_string(state.step) +
                         "\nmodel_seed=" + std::to_string(state.model.seed) + "\n";
  for (const auto& slot : opt_slots()) {
    const AdamState& opt = state.*slot.opt;
    counters += std::string("adam.") + slot.name + ".t=" + std::to_string(opt.t) + "\n";
    counters += std::string("adam.") + slot.name + ".moments=" + std::to_string(opt.m.size()) + "\n";
    for (std::size_t i = 0; i < opt.m.size(); ++i) {
      r.tensors.emplace_back("adam." + std::string(slot.name) + ".m." + std::to_string(i), opt.m[i]);
      r.tensors.emplace_back("adam." + std::string(slot.name) + ".v." + std::to_string(i), opt.v[i]);
    }
  }
  for (const auto* buffer : {&state.buffer_x, &state.buffer_y}) {
    const std::string prefix = buffer == &state.buffer_x ? "buffer_x" : "buffer_y";
    counters += prefix + ".size=" + std::to_string(buffer->size()) + "\n";
    for (std::size_t i = 0; i < buffer->size(); ++i) {
      r.tensors.emplace_back(prefix + "." + std::to_string(i), buffer->stored()[i]);
    }
    r.blobs.emplace_back("rng." + prefix, rng_text(buffer->rng()));
  }
  r.blobs.emplace_back("rng.data", rng_text(state.data_rng));
  r.blobs.emplace_back("config", format_training_config(state.config));
  r.blobs.emplace_back("counters", counters);
  return r;
}

TrainerState from_record(const CheckpointRecord& record) {
  TrainerState s;
  try {
    s.config = parse_training_config(record.blob("config"));
  } catch (const ConfigError& e) {
    throw CorruptionError(std::string("checkpoint config snapshot is invalid: ") + e.what());
  }
  const auto counters = parse_counters(record.blob("counters"));
  s.epoch = static_cast<int>(counter(counters, "epoch"));
  s.step = counter(counters, "step");
  s.model.seed = counter(counters, "model_seed");
  if (s.epoch > s.config.total_epochs()) throw CorruptionError("checkpoint epoch exceeds the configured total");

  std::size_t used = 0;
  auto tensor = [&](const std::string& name, const Shape& expected) {
    const auto& t = record.tensor(name);
    if (t.shape() != expected) {
      throw CorruptionError("tensor '" + name + "' has shape " + shape_string(t.shape()) + ", expected " +
                            shape_string(expected));
    }
    ++used;
    return t.detach();
  };

  for (const auto& slot : kNets) {
    Network& net = s.model.*slot.net;
    try {
      net.spec = parse_network(record.blob(std::string("spec.") + slot.name), slot.role);
    } catch (const ParseError& e) {
      throw CorruptionError(std::string("bad architecture for ") + slot.name + ": " + e.what());
    }
    net.params = make_parameters<float>(net.spec);
    for (auto& [name, t] : net.params) t = tensor(std::string(slot.name) + "." + name, t.shape());
  }

  for (const auto& slot : opt_slots()) {
    AdamState& opt = s.*slot.opt;
    const std::string prefix = std::string("adam.") + slot.name;
    opt.t = static_cast<std::int64_t>(counter(counters, prefix + ".t"));
    const auto moments = counter(counters, prefix + ".moments");
    std::vector<Shape> shapes;
    for (auto net : slot.nets)
      for (const auto& [name, t] : (s.model.*net).params) shapes.push_back(t.shape());
    if (moments != 0 && moments != shapes.size()) {
      throw CorruptionError(prefix + " has " + std::to_string(moments) + " moments for " +
                            std::to_string(shapes.size()) + " parameters");
    }
    for (std::size_t i = 0; i < moments; ++i) {
      opt.m.push_back(tensor(prefix + ".m." + std::to_string(i), shapes[i]));
      opt.v.push_back(tensor(prefix + ".v." + std::to_string(i), shapes[i]));
    }
  }

  const Shape image{1, 3, s.config.crop > 0 ? s.config.crop : s.config.resolution,
                    s.config.crop > 0 ? s.config.crop : s.config.resolution};
  for (auto* buffer : {&s.buffer_x, &s.buffer_y}) {
    const std::string prefix = buffer == &s.buffer_x ? "buffer_x" : "buffer_y";
    const auto n = counter(counters, prefix + ".size");
    std::vector<Tensor<float>> stored;
    for (std::size_t i = 0; i < n; ++i) stored.push_back(tensor(prefix + "." + std::to_string(i), image));
    *buffer = ReplayBuffer::restore(s.config.buffer_capacity, std::move(stored),
                                    rng_from_text(record.blob("rng." + prefix), prefix));
  }
  s.data_rng = rng_from_text(record.blob("rng.data"), "data");

  if (used != record.tensors.size()) {
    throw CorruptionError("checkpoint holds " + std::to_string(record.tensors.size() - used) + " unexpected tensors");
  }
  return s;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream bytes;
  bytes << in.rdbuf();
  if (in.bad()) throw IoError("error while reading " + path.string());
  return bytes.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw IoError("error while writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move " + tmp.string() + " to " + path.string());
  }
}

void save_checkpoint(const std::filesystem::path& path, const TrainerState& state) {
  write_file_atomic(path, encode_checkpoint(to_record(state)));
}

TrainerState load_checkpoint(const std::filesystem::path& path) {
  try {
    return from_record(decode_checkpoint(read_file(path)));
  } catch (const CorruptionError& e) {
    throw CorruptionError(path.string() + ": " + e.what());
  }
}

}  // namespace cyclegan
