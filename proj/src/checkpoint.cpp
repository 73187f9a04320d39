// Copyright 2026 The NUTS Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "nuts/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace nuts {

namespace {

constexpr char kMagic[8] = {'N', 'U', 'T', 'S', 'C', 'K', 'P', 'T'};

template <typename T>
void put_le(std::string& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename T>
  T get_le(const char* what) {
    need(sizeof(T), what);
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<T>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(T);
    return v;
  }

  std::string get_bytes(std::size_t n, const char* what) {
    need(n, what);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw CheckpointTruncatedError(std::string("checkpoint truncated while reading ") + what);
    }
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

nlohmann::json vocab_json(const Vocab& v) { return {{"tokens", v.regular_tokens()}, {"counts", v.regular_counts()}}; }

Vocab vocab_from(const nlohmann::json& j) {
  return Vocab(j.at("tokens").get<std::vector<std::string>>(), j.at("counts").get<std::vector<std::size_t>>());
}

Checkpoint make(const std::string& kind, const Vocab& vocab, std::uint64_t seed, nlohmann::json hyper,
                const ParamSet& params, const std::string& config_hash) {
  Checkpoint c;
  c.header = {{"kind", kind},           {"hyperparameters", std::move(hyper)}, {"vocab", vocab_json(vocab)},
              {"seed", seed},           {"config_hash", config_hash},          {"tensor_count", params.size()}};
  c.tensors = params;
  return c;
}

/// The loaded tensors must have exactly the names and shapes of a freshly
/// initialised model with the header's hyperparameters.
void check_against(const ParamSet& expected, const ParamSet& loaded) {
  for (const auto& [name, t] : expected) {
    const auto it = loaded.find(name);
    if (it == loaded.end()) throw CheckpointConsistencyError("checkpoint lacks tensor '" + name + "'");
    if (it->second.rows() != t.rows() || it->second.cols() != t.cols()) {
      throw CheckpointConsistencyError("tensor '" + name + "' has shape " + std::to_string(it->second.rows()) + "x" +
                                       std::to_string(it->second.cols()) + ", header implies " +
                                       std::to_string(t.rows()) + "x" + std::to_string(t.cols()));
    }
  }
  for (const auto& [name, t] : loaded) {
    if (!expected.count(name)) throw CheckpointConsistencyError("unexpected tensor '" + name + "'");
  }
}

void expect_kind(const Checkpoint& c, const std::string& kind) {
  if (c.kind() != kind) {
    throw CheckpointConsistencyError("checkpoint holds a '" + c.kind() + "' model, expected '" + kind + "'");
  }
}

template <typename Fn>
auto header_field(Fn&& fn) {
  try {
    return fn();
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointConsistencyError(std::string("malformed checkpoint header: ") + e.what());
  }
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  std::string out(kMagic, sizeof kMagic);
  put_le<std::uint32_t>(out, kCheckpointVersion);
  const std::string header = ckpt.header.dump();
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(header.size()));
  out += header;
  for (const auto& [name, t] : ckpt.tensors) {
    require(name.size() <= std::numeric_limits<std::uint16_t>::max(), "checkpoint: tensor name too long");
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out += name;
    if (t.rows() == 1) {
      out.push_back(1);
      put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.cols()));
    } else {
      out.push_back(2);
      put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.rows()));
      put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.cols()));
    }
    for (Index i = 0; i < t.size(); ++i) {
      put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(t.data()[i])));
    }
  }
  return out;
}

Checkpoint parse_checkpoint(const std::string& bytes) {
  Reader in(bytes);
  const std::size_t head = std::min(bytes.size(), sizeof kMagic);
  if (std::memcmp(bytes.data(), kMagic, head) != 0) {
    throw CheckpointMagicError("not a checkpoint: magic mismatch");
  }
  in.get_bytes(sizeof kMagic, "magic");
  const auto version = in.get_le<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw CheckpointVersionError("unsupported checkpoint version " + std::to_string(version) + " (this build reads " +
                                 std::to_string(kCheckpointVersion) + ")");
  }
  const auto header_len = in.get_le<std::uint32_t>("header length");
  Checkpoint c;
  try {
    c.header = nlohmann::json::parse(in.get_bytes(header_len, "header"));
  } catch (const nlohmann::json::parse_error& e) {
    throw CheckpointConsistencyError(std::string("checkpoint header is not valid JSON: ") + e.what());
  }
  const auto count = header_field([&] { return c.header.at("tensor_count").get<std::size_t>(); });
  for (std::size_t k = 0; k < count; ++k) {
    const auto name_len = in.get_le<std::uint16_t>("tensor name length");
    std::string name = in.get_bytes(name_len, "tensor name");
    const auto rank = static_cast<std::uint8_t>(in.get_bytes(1, "tensor rank")[0]);
    if (rank != 1 && rank != 2) throw CheckpointConsistencyError("tensor '" + name + "' has unsupported rank");
    const Index rows = rank == 1 ? 1 : static_cast<Index>(in.get_le<std::uint32_t>("tensor dims"));
    const auto cols = static_cast<Index>(in.get_le<std::uint32_t>("tensor dims"));
    Tensor t(rows, cols);
    for (Index i = 0; i < t.size(); ++i) {
      t.data()[i] = static_cast<double>(std::bit_cast<float>(in.get_le<std::uint32_t>("tensor data")));
    }
    if (!c.tensors.emplace(std::move(name), std::move(t)).second) {
      throw CheckpointConsistencyError("duplicate tensor name in checkpoint");
    }
  }
  if (!in.done()) throw CheckpointConsistencyError("trailing bytes after the declared tensors");
  return c;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  const std::string bytes = serialize_checkpoint(ckpt);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot read checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_checkpoint(buf.str());
}

Checkpoint to_checkpoint(const ARAEModel& m, const std::string& config_hash) {
  const auto& d = m.dims;
  return make("arae", m.vocab, m.seed,
              {{"noise", d.noise}, {"latent", d.latent}, {"hidden", d.hidden}, {"embed", d.embed},
               {"gen_hidden", d.gen_hidden}, {"critic_hidden", d.critic_hidden}},
              m.params, config_hash);
}

Checkpoint to_checkpoint(const VictimClassifier& m, const std::string& config_hash) {
  return make("classifier", m.vocab, m.seed,
              {{"arch", arch_name(m.arch)}, {"classes", m.classes}, {"embed", m.dims.embed},
               {"hidden", m.dims.hidden}, {"ff_hidden", m.dims.ff_hidden}},
              m.params, config_hash);
}

Checkpoint to_checkpoint(const ScoringLM& m, const std::string& config_hash) {
  return make("lm", m.vocab, m.seed, {{"embed", m.dims.embed}, {"hidden", m.dims.hidden}}, m.params, config_hash);
}

ARAEModel arae_from_checkpoint(const Checkpoint& c) {
  expect_kind(c, "arae");
  ARAEModel m = header_field([&] {
    const auto& h = c.header.at("hyperparameters");
    AraeDims d;
    d.noise = h.at("noise").get<Index>();
    d.latent = h.at("latent").get<Index>();
    d.hidden = h.at("hidden").get<Index>();
    d.embed = h.at("embed").get<Index>();
    d.gen_hidden = h.at("gen_hidden").get<Index>();
    d.critic_hidden = h.at("critic_hidden").get<Index>();
    return init_arae(vocab_from(c.header.at("vocab")), d, c.header.at("seed").get<std::uint64_t>());
  });
  check_against(m.params, c.tensors);
  m.params = c.tensors;
  return m;
}

VictimClassifier victim_from_checkpoint(const Checkpoint& c) {
  expect_kind(c, "classifier");
  VictimClassifier m = header_field([&] {
    const auto& h = c.header.at("hyperparameters");
    VictimDims d;
    d.embed = h.at("embed").get<Index>();
    d.hidden = h.at("hidden").get<Index>();
    d.ff_hidden = h.at("ff_hidden").get<Index>();
    return init_victim(vocab_from(c.header.at("vocab")), parse_arch(h.at("arch").get<std::string>()), d,
                       h.at("classes").get<int>(), c.header.at("seed").get<std::uint64_t>());
  });
  check_against(m.params, c.tensors);
  m.params = c.tensors;
  return m;
}

ScoringLM lm_from_checkpoint(const Checkpoint& c) {
  expect_kind(c, "lm");
  ScoringLM m = header_field([&] {
    const auto& h = c.header.at("hyperparameters");
    LmDims d;
    d.embed = h.at("embed").get<Index>();
    d.hidden = h.at("hidden").get<Index>();
    return init_lm(vocab_from(c.header.at("vocab")), d, c.header.at("seed").get<std::uint64_t>());
  });
  check_against(m.params, c.tensors);
  m.params = c.tensors;
  return m;
}

ARAEModel load_arae(const std::filesystem::path& path) { return arae_from_checkpoint(read_checkpoint(path)); }
VictimClassifier load_victim(const std::filesystem::path& path) { return victim_from_checkpoint(read_checkpoint(path)); }
ScoringLM load_lm(const std::filesystem::path& path) { return lm_from_checkpoint(read_checkpoint(path)); }

}  // namespace nuts
