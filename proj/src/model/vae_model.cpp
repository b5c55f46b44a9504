// Copyright 2026 The ode2vae-cpp Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "o2v/model/vae_model.hpp"

#include <cmath>
#include <numbers>
#include <string_view>

#include "o2v/common.hpp"
#include "o2v/io.hpp"

namespace o2v::model {
namespace {

using nlohmann::json;
using ad::Tensor;
using ad::Var;

constexpr std::string_view kMagic = "O2VC";
constexpr int kStride = 2;
constexpr int kPad = 1;

std::string layer(const std::string& prefix, const char* kind, std::size_t i) {
  return prefix + "." + kind + std::to_string(i);
}

bool starts_with(const std::string& s, const std::string& prefix) {
  return s.compare(0, prefix.size(), prefix) == 0;
}

[[noreturn]] void corrupt(const std::string& what) {
  throw FormatError(FormatError::Kind::kCorrupt, "checkpoint: " + what);
}

void fill_normal(std::vector<double>& v, double stddev, Rng& rng) {
  std::normal_distribution<double> n(0.0, stddev);
  for (double& x : v) x = n(rng);
}

}  // namespace

// --- NetworkConfig -------------------------------------------------------

void NetworkConfig::validate() const {
  if (resolution <= 0) throw ConfigError("resolution must be positive");
  if (channels.empty()) throw ConfigError("at least one conv block is required");
  for (int c : channels)
    if (c <= 0) throw ConfigError("channel counts must be positive");
  if (kernel != 4) throw ConfigError("only kernel size 4 (stride 2, padding 1) is supported");
  const int div = 1 << channels.size();
  if (resolution % div != 0)
    throw ConfigError("resolution " + std::to_string(resolution) + " is not divisible by " +
                      std::to_string(div));
  if (amortized_len < 2) throw ConfigError("amortized_len must be >= 2");
  field().validate();
}

int NetworkConfig::bottleneck_side() const { return resolution >> channels.size(); }

int NetworkConfig::bottleneck_size() const {
  const int b = bottleneck_side();
  return channels.back() * b * b;
}

json to_json(const NetworkConfig& c) {
  return {{"resolution", c.resolution}, {"channels", c.channels},
          {"kernel", c.kernel},         {"latent_dim", c.latent_dim},
          {"amortized_len", c.amortized_len}, {"ode_hidden", c.ode_hidden}};
}

NetworkConfig network_config_from_json(const json& j) {
  NetworkConfig c;
  try {
    c.resolution = j.at("resolution").get<int>();
    c.channels = j.at("channels").get<std::vector<int>>();
    c.kernel = j.at("kernel").get<int>();
    c.latent_dim = j.at("latent_dim").get<int>();
    c.amortized_len = j.at("amortized_len").get<int>();
    c.ode_hidden = j.at("ode_hidden").get<int>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("network config: ") + e.what());
  }
  c.validate();
  return c;
}

// --- ParameterSet --------------------------------------------------------

ParameterSet::Entry& ParameterSet::add(const std::string& name, std::vector<int> shape) {
  if (index_.count(name)) throw ConfigError("duplicate parameter " + name);
  const std::size_t n = ad::shape_size(shape);
  index_[name] = entries_.size();
  entries_.push_back({name, std::move(shape), std::vector<double>(n, 0.0),
                      std::vector<double>(n, 0.0)});
  return entries_.back();
}

ParameterSet::Entry& ParameterSet::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown parameter " + name);
  return entries_[it->second];
}

const ParameterSet::Entry& ParameterSet::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown parameter " + name);
  return entries_[it->second];
}

std::size_t ParameterSet::total_size() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.values.size();
  return n;
}

std::size_t ParameterSet::group_size(const std::string& prefix) const {
  std::size_t n = 0;
  for (const auto& e : entries_)
    if (starts_with(e.name, prefix)) n += e.values.size();
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& e : entries_) std::fill(e.grads.begin(), e.grads.end(), 0.0);
}

void ParameterSet::round_to_float() {
  for (auto& e : entries_)
    for (double& v : e.values) v = static_cast<double>(static_cast<float>(v));
}

// --- Gaussians -----------------------------------------------------------

void DiagonalGaussian::validate() const {
  if (mean.size() != log_std.size())
    throw DimensionError("gaussian: mean has " + std::to_string(mean.size()) +
                         " entries, log_std has " + std::to_string(log_std.size()));
}

double gaussian_log_density(const DiagonalGaussian& g, std::span<const double> x) {
  g.validate();
  if (x.size() != g.dim()) throw DimensionError("gaussian_log_density: dimension mismatch");
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  double lp = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double z = (x[i] - g.mean[i]) * std::exp(-g.log_std[i]);
    lp += -0.5 * z * z - g.log_std[i] - half_log_2pi;
  }
  return lp;
}

std::vector<double> standard_normal(std::size_t n, Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> out(n);
  for (double& v : out) v = dist(rng);
  return out;
}

GaussianSample sample_gaussian(const DiagonalGaussian& g, Rng& rng) {
  g.validate();
  const auto eps = standard_normal(g.dim(), rng);
  GaussianSample s;
  s.value.resize(g.dim());
  for (std::size_t i = 0; i < g.dim(); ++i) s.value[i] = g.mean[i] + std::exp(g.log_std[i]) * eps[i];
  s.log_density = gaussian_log_density(g, s.value);
  return s;
}

// --- VariationalModel ----------------------------------------------------

VariationalModel::VariationalModel(NetworkConfig config) : config_(std::move(config)) {
  config_.validate();
  declare();
}

VariationalModel::VariationalModel(NetworkConfig config, std::uint64_t seed)
    : VariationalModel(std::move(config)) {
  Rng rng(seed);
  const int k = config_.kernel;
  for (auto& e : params_.entries()) {
    const bool bias = e.shape.size() == 1;
    if (e.name == "ode.mean") {
      fill_normal(e.values, 0.1, rng);
    } else if (e.name == "ode.log_std") {
      std::fill(e.values.begin(), e.values.end(), -3.0);
    } else if (bias) {
      continue;
    } else if (e.name.find(".conv") != std::string::npos) {
      fill_normal(e.values, std::sqrt(2.0 / (e.shape[1] * k * k)), rng);
    } else if (e.name.find(".deconv") != std::string::npos) {
      fill_normal(e.values, std::sqrt(2.0 * kStride * kStride / (e.shape[0] * k * k)), rng);
    } else if (e.name.find(".head") != std::string::npos) {
      fill_normal(e.values, std::sqrt(1.0 / e.shape[1]), rng);
    } else {
      fill_normal(e.values, std::sqrt(2.0 / e.shape[1]), rng);
    }
  }
  params_.round_to_float();
}

void VariationalModel::declare() {
  const auto& c = config_;
  const int k = c.kernel, a = c.latent_dim;
  auto encoder = [&](const std::string& prefix, int in_channels) {
    int cin = in_channels;
    for (std::size_t i = 0; i < c.channels.size(); ++i) {
      params_.add(layer(prefix, "conv", i) + ".w", {c.channels[i], cin, k, k});
      params_.add(layer(prefix, "conv", i) + ".b", {c.channels[i]});
      cin = c.channels[i];
    }
    params_.add(prefix + ".head.w", {2 * a, c.bottleneck_size()});
    params_.add(prefix + ".head.b", {2 * a});
  };
  encoder("pos", 1);
  encoder("vel", c.amortized_len);

  params_.add("dec.fc.w", {c.bottleneck_size(), a});
  params_.add("dec.fc.b", {c.bottleneck_size()});
  const std::size_t blocks = c.channels.size();
  for (std::size_t i = 0; i < blocks; ++i) {
    const int cin = c.channels[blocks - 1 - i];
    const int cout = i + 1 < blocks ? c.channels[blocks - 2 - i] : 1;
    params_.add(layer("dec", "deconv", i) + ".w", {cin, cout, k, k});
    params_.add(layer("dec", "deconv", i) + ".b", {cout});
  }

  const int nw = static_cast<int>(c.field().weight_count());
  params_.add("ode.mean", {nw});
  params_.add("ode.log_std", {nw});
}

DiagonalGaussian VariationalModel::weight_posterior() const {
  return {params_.at("ode.mean").values, params_.at("ode.log_std").values};
}

ParameterCounts expected_parameter_counts(const NetworkConfig& c) {
  c.validate();
  const std::size_t k2 = static_cast<std::size_t>(c.kernel) * c.kernel;
  const std::size_t a = c.latent_dim, bott = c.bottleneck_size();
  auto conv_stack = [&](std::size_t cin) {
    std::size_t n = 0;
    for (int cout : c.channels) {
      n += cin * cout * k2 + cout;
      cin = cout;
    }
    return n + bott * 2 * a + 2 * a;
  };
  ParameterCounts p;
  p.position_encoder = conv_stack(1);
  p.velocity_encoder = conv_stack(c.amortized_len);
  std::size_t dec = a * bott + bott;
  for (std::size_t i = c.channels.size(); i-- > 0;) {
    const std::size_t cin = c.channels[i], cout = i > 0 ? c.channels[i - 1] : 1;
    dec += cin * cout * k2 + cout;
  }
  p.decoder = dec;
  const std::size_t h = c.ode_hidden;
  p.weight_posterior = 2 * ((2 * a * h + h) + (h * h + h) + (h * a + a));
  return p;
}

// --- BoundModel ----------------------------------------------------------

BoundModel::BoundModel(VariationalModel& model, ad::Tape& tape, bool with_grad)
    : config_(&model.config()), tape_(&tape) {
  for (auto& e : model.params().entries()) {
    Tensor t(e.shape, e.values);
    vars_[e.name] = with_grad ? tape.param(std::move(t), e.grads) : tape.constant(std::move(t));
  }
}

BoundModel::BoundModel(const VariationalModel& model, ad::Tape& tape)
    : config_(&model.config()), tape_(&tape) {
  for (const auto& e : model.params().entries())
    vars_[e.name] = tape.constant(Tensor(e.shape, e.values));
}

Var BoundModel::operator[](const std::string& name) const {
  auto it = vars_.find(name);
  if (it == vars_.end()) throw ConfigError("unknown parameter " + name);
  return it->second;
}

// --- Graph route ---------------------------------------------------------

Var frames_tensor(ad::Tape& tape, std::span<const data::Frame> frames) {
  if (frames.empty()) throw DimensionError("frames_tensor: no frames");
  const int r = frames.front().resolution;
  Tensor t({static_cast<int>(frames.size()), r, r});
  std::size_t off = 0;
  for (const auto& f : frames) {
    if (f.resolution != r) throw DimensionError("frames_tensor: mixed resolutions");
    std::copy(f.pixels.begin(), f.pixels.end(), t.data.begin() + static_cast<std::ptrdiff_t>(off));
    off += f.pixels.size();
  }
  return tape.constant(std::move(t));
}

namespace {

GaussianVars run_encoder(const BoundModel& m, const std::string& prefix, Var x) {
  const auto& c = m.config();
  if (x.shape()[1] != c.resolution || x.shape()[2] != c.resolution)
    throw DimensionError("encoder expects " + std::to_string(c.resolution) + "x" +
                         std::to_string(c.resolution) + " frames, got " +
                         ad::shape_string(x.shape()));
  Var h = x;
  for (std::size_t i = 0; i < c.channels.size(); ++i) {
    const auto name = layer(prefix, "conv", i);
    h = ad::relu(ad::conv2d(h, m[name + ".w"], m[name + ".b"], kStride, kPad));
  }
  h = ad::reshape(h, {c.bottleneck_size()});
  Var out = ad::matmul(m[prefix + ".head.w"], h) + m[prefix + ".head.b"];
  const int a = c.latent_dim;
  return {ad::slice(out, 0, {a}), ad::slice(out, static_cast<std::size_t>(a), {a})};
}

}  // namespace

GaussianVars encode_position(const BoundModel& m, const data::Frame& x0) {
  return run_encoder(m, "pos", frames_tensor(m.tape(), std::span(&x0, 1)));
}

GaussianVars encode_velocity(const BoundModel& m, std::span<const data::Frame> frames) {
  const int len = m.config().amortized_len;
  if (static_cast<int>(frames.size()) != len)
    throw DimensionError("velocity encoder expects " + std::to_string(len) + " frames, got " +
                         std::to_string(frames.size()));
  return run_encoder(m, "vel", frames_tensor(m.tape(), frames));
}

Var decode_logits(const BoundModel& m, Var s) {
  const auto& c = m.config();
  if (static_cast<int>(s.size()) != c.latent_dim)
    throw DimensionError("decoder expects a position of dimension " +
                         std::to_string(c.latent_dim) + ", got " + std::to_string(s.size()));
  const int b = c.bottleneck_side();
  Var h = ad::relu(ad::matmul(m["dec.fc.w"], ad::reshape(s, {c.latent_dim})) + m["dec.fc.b"]);
  h = ad::reshape(h, {c.channels.back(), b, b});
  const std::size_t blocks = c.channels.size();
  for (std::size_t i = 0; i < blocks; ++i) {
    const auto name = layer("dec", "deconv", i);
    h = ad::conv_transpose2d(h, m[name + ".w"], m[name + ".b"], kStride, kPad);
    if (i + 1 < blocks) h = ad::relu(h);
  }
  return h;
}

Var sample_weights(const BoundModel& m, std::span<const double> eps) {
  Var mean = m["ode.mean"];
  if (eps.size() != mean.size()) throw DimensionError("sample_weights: eps size mismatch");
  Var noise = m.tape().constant(Tensor::vector({eps.begin(), eps.end()}));
  return mean + ad::exp(m["ode.log_std"]) * noise;
}

// --- Value route ---------------------------------------------------------

namespace {

DiagonalGaussian to_gaussian(const GaussianVars& g) {
  return {g.mean.value().data, g.log_std.value().data};
}

}  // namespace

DiagonalGaussian encode_position(const VariationalModel& m, const data::Frame& x0) {
  ad::Tape tape;
  return to_gaussian(encode_position(BoundModel(m, tape), x0));
}

DiagonalGaussian encode_velocity(const VariationalModel& m, std::span<const data::Frame> frames) {
  ad::Tape tape;
  return to_gaussian(encode_velocity(BoundModel(m, tape), frames));
}

DiagonalGaussian initial_posterior(const VariationalModel& m,
                                   std::span<const data::Frame> sequence) {
  const int len = m.config().amortized_len;
  if (static_cast<int>(sequence.size()) < len)
    throw DimensionError("initial_posterior needs at least " + std::to_string(len) + " frames");
  auto pos = encode_position(m, sequence.front());
  auto vel = encode_velocity(m, sequence.first(static_cast<std::size_t>(len)));
  pos.mean.insert(pos.mean.end(), vel.mean.begin(), vel.mean.end());
  pos.log_std.insert(pos.log_std.end(), vel.log_std.begin(), vel.log_std.end());
  return pos;
}

data::Frame decode(const VariationalModel& m, std::span<const double> s) {
  ad::Tape tape;
  BoundModel bm(m, tape);
  Var logits = decode_logits(bm, tape.constant(Tensor::vector({s.begin(), s.end()})));
  data::Frame f(m.config().resolution);
  const auto& l = logits.value().data;
  for (std::size_t i = 0; i < l.size(); ++i) f.pixels[i] = 1.0 / (1.0 + std::exp(-l[i]));
  return f;
}

double bernoulli_log_likelihood(const data::Frame& x, const data::Frame& p) {
  if (x.resolution != p.resolution)
    throw DimensionError("bernoulli_log_likelihood: resolution mismatch");
  double ll = 0.0;
  for (std::size_t i = 0; i < x.pixels.size(); ++i) {
    const double pi = p.pixels[i], xi = x.pixels[i];
    if (xi > 0.0) ll += xi * std::log(pi);
    if (xi < 1.0) ll += (1.0 - xi) * std::log1p(-pi);
  }
  return ll;
}

// --- Checkpoint ----------------------------------------------------------

std::string serialize_checkpoint(const VariationalModel& model, const json& extra) {
  const json manifest = {{"library_version", kVersion},
                         {"network", to_json(model.config())},
                         {"extra", extra}};
  const std::string mtext = manifest.dump();
  std::string out(kMagic);
  io::put_u32(out, kCheckpointVersion);
  io::put_u32(out, static_cast<std::uint32_t>(mtext.size()));
  out += mtext;
  const auto& entries = model.params().entries();
  io::put_u32(out, static_cast<std::uint32_t>(entries.size()));
  for (const auto& e : entries) {
    io::put_u32(out, static_cast<std::uint32_t>(e.name.size()));
    out += e.name;
    io::put_u32(out, static_cast<std::uint32_t>(e.shape.size()));
    for (int d : e.shape) io::put_u32(out, static_cast<std::uint32_t>(d));
    io::put_u64(out, e.values.size());
    for (double v : e.values) io::put_f32(out, static_cast<float>(v));
  }
  io::put_u32(out, io::crc32(out));
  return out;
}

void save_checkpoint(const VariationalModel& model, const std::filesystem::path& path,
                     const json& extra) {
  io::write_file_atomic(path, serialize_checkpoint(model, extra));
}

namespace {

struct Reader {
  std::string_view bytes;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (n > bytes.size() || pos > bytes.size() - n) corrupt("length field runs past the payload");
  }
  std::uint32_t u32() {
    need(4);
    const auto v = io::get_u32(bytes, pos);
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    const auto v = io::get_u64(bytes, pos);
    pos += 8;
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(bytes.substr(pos, n));
    pos += n;
    return s;
  }
};

// Validates framing and returns the manifest and payload reader position.
std::pair<json, Reader> open_checkpoint(const std::string& bytes) {
  if (bytes.size() < 4 || std::string_view(bytes).substr(0, 4) != kMagic)
    throw FormatError(FormatError::Kind::kUnrecognized, "checkpoint: bad magic");
  if (bytes.size() < 8) corrupt("truncated header");
  const std::uint32_t version = io::get_u32(bytes, 4);
  if (version != kCheckpointVersion)
    throw FormatError(FormatError::Kind::kVersionMismatch,
                      "checkpoint: format version " + std::to_string(version) + ", expected " +
                          std::to_string(kCheckpointVersion));
  if (bytes.size() < 16) corrupt("truncated header");
  const std::string_view body = std::string_view(bytes).substr(0, bytes.size() - 4);
  if (io::crc32(body) != io::get_u32(bytes, bytes.size() - 4)) corrupt("checksum mismatch");
  Reader r{body, 8};
  const std::uint32_t mlen = r.u32();
  json manifest;
  try {
    manifest = json::parse(r.str(mlen));
  } catch (const json::exception& e) {
    corrupt(std::string("manifest: ") + e.what());
  }
  return {std::move(manifest), r};
}

}  // namespace

VariationalModel parse_checkpoint(const std::string& bytes) {
  auto [manifest, r] = open_checkpoint(bytes);
  NetworkConfig config;
  try {
    config = network_config_from_json(manifest.at("network"));
  } catch (const std::exception& e) {
    corrupt(std::string("manifest network: ") + e.what());
  }
  VariationalModel model(config);
  auto& entries = model.params().entries();
  const std::uint32_t n = r.u32();
  if (n != entries.size()) corrupt("array count does not match the stored architecture");
  for (auto& e : entries) {
    const std::string name = r.str(r.u32());
    if (name != e.name) corrupt("unexpected array " + name + ", expected " + e.name);
    const std::uint32_t rank = r.u32();
    if (rank != e.shape.size()) corrupt("rank mismatch for " + name);
    for (int d : e.shape)
      if (r.u32() != static_cast<std::uint32_t>(d)) corrupt("shape mismatch for " + name);
    const std::uint64_t count = r.u64();
    if (count != e.values.size()) corrupt("element count mismatch for " + name);
    r.need(count * 4);
    for (double& v : e.values) {
      v = io::get_f32(r.bytes, r.pos);
      r.pos += 4;
    }
  }
  if (r.pos != r.bytes.size()) corrupt("trailing bytes after the last array");
  return model;
}

VariationalModel load_checkpoint(const std::filesystem::path& path) {
  return parse_checkpoint(io::read_file(path));
}

VariationalModel load_checkpoint(const std::filesystem::path& path,
                                 const NetworkConfig& expected) {
  const std::string bytes = io::read_file(path);
  auto [manifest, r] = open_checkpoint(bytes);
  NetworkConfig stored;
  try {
    stored = network_config_from_json(manifest.at("network"));
  } catch (const std::exception& e) {
    corrupt(std::string("manifest network: ") + e.what());
  }
  if (!(stored == expected))
    throw FormatError(FormatError::Kind::kArchitectureMismatch,
                      "checkpoint architecture " + to_json(stored).dump() +
                          " does not match requested " + to_json(expected).dump());
  return parse_checkpoint(bytes);
}

json checkpoint_manifest(const std::filesystem::path& path) {
  return open_checkpoint(io::read_file(path)).first;
}

}  // namespace o2v::model
