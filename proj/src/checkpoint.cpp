#include "dwt/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace dwt {

namespace {

constexpr char kMagic[8] = {'D', 'W', 'T', 'C', 'K', 'P', '0', '1'};
constexpr std::uint32_t kVersion = 1;

// Explicit little-endian encoding keeps the format host-independent.
void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<char*>(b), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<char*>(b), 8);
}

void put_f64(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

void put_u8(std::ostream& out, std::uint8_t v) {
  out.write(reinterpret_cast<char*>(&v), 1);
}

struct Reader {
  std::vector<unsigned char> buf;
  std::size_t pos = 0;
  std::string path;

  void need(std::size_t n) const {
    if (pos + n > buf.size())
      throw FormatError(path + ": truncated checkpoint at offset " + std::to_string(pos));
  }
  std::uint8_t u8() {
    need(1);
    return buf[pos++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | buf[pos + static_cast<std::size_t>(i)];
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | buf[pos + static_cast<std::size_t>(i)];
    pos += 8;
    return v;
  }
  double f64() {
    const std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
};

void put_spec(std::ostream& out, const LayerSpec& s) {
  put_u8(out, static_cast<std::uint8_t>(s.kind));
  put_u64(out, s.in);
  put_u64(out, s.out);
  put_u64(out, s.kernel);
  put_u64(out, s.stride);
  put_u8(out, s.padding == Padding::Same ? 1 : 0);
  put_u64(out, s.window);
  put_u64(out, s.features);
  put_u64(out, s.group);
  put_f64(out, s.epsilon);
  put_f64(out, s.rho);
  put_u8(out, s.use_bias ? 1 : 0);
}

LayerSpec get_spec(Reader& r) {
  LayerSpec s;
  const std::uint8_t kind = r.u8();
  if (kind > static_cast<std::uint8_t>(LayerSpec::Kind::Flatten))
    throw FormatError(r.path + ": unknown layer kind " + std::to_string(kind));
  s.kind = static_cast<LayerSpec::Kind>(kind);
  s.in = r.u64();
  s.out = r.u64();
  s.kernel = r.u64();
  s.stride = r.u64();
  s.padding = r.u8() ? Padding::Same : Padding::Valid;
  s.window = r.u64();
  s.features = r.u64();
  s.group = r.u64();
  s.epsilon = r.f64();
  s.rho = r.f64();
  s.use_bias = r.u8() != 0;
  return s;
}

}  // namespace

void save_checkpoint(const std::string& path, Network& net) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(path + ": cannot open for writing");
  out.write(kMagic, 8);
  put_u32(out, kVersion);

  const auto& specs = net.specs();
  put_u32(out, static_cast<std::uint32_t>(specs.size()));
  for (const LayerSpec& s : specs) put_spec(out, s);

  auto params = net.parameters();
  put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (Parameter* p : params) {
    put_u8(out, static_cast<std::uint8_t>(p->value.rank()));
    for (std::size_t d : p->value.shape()) put_u64(out, d);
    for (std::size_t i = 0; i < p->value.size(); ++i) put_f64(out, p->value[i]);
  }

  auto whitening = net.whitening_layers();
  put_u32(out, static_cast<std::uint32_t>(whitening.size()));
  for (DwtSpatial* layer : whitening) {
    for (DomainTag dom : {DomainTag::Source, DomainTag::Target}) {
      const bool has = layer->inner().has_running_stats(dom);
      put_u8(out, has ? 1 : 0);
      if (!has) continue;
      const auto& stats = layer->inner().running_stats(dom);
      for (const BatchStats& st : stats) {
        put_u64(out, st.count);
        for (std::size_t i = 0; i < st.mu.size(); ++i) put_f64(out, st.mu[i]);
        for (std::size_t i = 0; i < st.sigma.size(); ++i) put_f64(out, st.sigma[i]);
      }
    }
  }
  if (!out) throw FormatError(path + ": write failed");
}

Network load_checkpoint(const std::string& path) {
  Reader r;
  r.path = path;
  {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(path + ": cannot open");
    r.buf.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  r.need(8);
  if (std::memcmp(r.buf.data(), kMagic, 8) != 0)
    throw FormatError(path + ": bad checkpoint magic at offset 0");
  r.pos = 8;
  const std::uint32_t version = r.u32();
  if (version != kVersion)
    throw FormatError(path + ": unsupported checkpoint version " + std::to_string(version));

  const std::uint32_t n_specs = r.u32();
  std::vector<LayerSpec> specs;
  specs.reserve(n_specs);
  for (std::uint32_t i = 0; i < n_specs; ++i) specs.push_back(get_spec(r));

  Network net(std::move(specs), /*init_seed=*/0);

  auto params = net.parameters();
  const std::uint32_t n_params = r.u32();
  if (n_params != params.size())
    throw FormatError(path + ": parameter count mismatch (" + std::to_string(n_params) +
                      " stored, " + std::to_string(params.size()) + " expected)");
  for (Parameter* p : params) {
    const std::uint8_t rank = r.u8();
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = r.u64();
    if (shape != p->value.shape())
      throw FormatError(path + ": parameter shape mismatch at offset " + std::to_string(r.pos));
    for (std::size_t i = 0; i < p->value.size(); ++i) p->value[i] = r.f64();
  }

  auto whitening = net.whitening_layers();
  const std::uint32_t n_whiten = r.u32();
  if (n_whiten != whitening.size())
    throw FormatError(path + ": whitening layer count mismatch");
  for (DwtSpatial* layer : whitening) {
    DwtLayer& inner = layer->inner();
    for (DomainTag dom : {DomainTag::Source, DomainTag::Target}) {
      if (!r.u8()) continue;
      std::vector<BatchStats> stats(inner.groups());
      const std::size_t g = inner.group_size();
      for (BatchStats& st : stats) {
        st.count = r.u64();
        st.mu = Tensor({g});
        for (std::size_t i = 0; i < g; ++i) st.mu[i] = r.f64();
        st.sigma = Tensor({g, g});
        for (std::size_t i = 0; i < g * g; ++i) st.sigma[i] = r.f64();
      }
      inner.set_running_stats(dom, std::move(stats));
    }
  }
  if (r.pos != r.buf.size())
    throw FormatError(path + ": trailing bytes at offset " + std::to_string(r.pos));
  return net;
}

}  // namespace dwt
