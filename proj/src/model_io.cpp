#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "geomae/errors.hpp"
#include "geomae/nn.hpp"

namespace geomae {

namespace {

static_assert(std::endian::native == std::endian::little,
              "model container I/O assumes a little-endian host");

constexpr char kMagic[4] = {'G', 'A', 'E', '1'};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u32(std::uint32_t v) { bytes(&v, sizeof v); }
  void f64s(std::span<const double> v) { bytes(v.data(), v.size() * sizeof(double)); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  void bytes(void* p, std::size_t n) {
    if (n > in_.size() - pos_) throw FormatError("model container truncated at byte " + std::to_string(pos_));
    std::memcpy(p, in_.data() + pos_, n);
    pos_ += n;
  }
  std::uint32_t u32() {
    std::uint32_t v;
    bytes(&v, sizeof v);
    return v;
  }
  void f64s(std::span<double> v) { bytes(v.data(), v.size() * sizeof(double)); }
  bool done() const { return pos_ == in_.size(); }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

void write_network(Writer& w, const MLPParams& net) {
  w.u32(static_cast<std::uint32_t>(net.layers.size()));
  for (const Layer& layer : net.layers) {
    w.u32(static_cast<std::uint32_t>(layer.weight.rows()));
    w.u32(static_cast<std::uint32_t>(layer.weight.cols()));
    w.f64s(layer.weight.data());
    w.f64s(layer.bias.data());
  }
}

MLPParams read_network(Reader& r) {
  MLPParams net;
  const std::uint32_t count = r.u32();
  if (count == 0 || count > 1024) throw FormatError("implausible layer count " + std::to_string(count));
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::size_t out = r.u32();
    const std::size_t in = r.u32();
    if (out == 0 || in == 0 || out * in > (std::size_t{1} << 28)) {
      throw FormatError("implausible layer shape " + std::to_string(out) + "x" + std::to_string(in));
    }
    Layer layer{Tensor({out, in}), Tensor({out})};
    r.f64s(layer.weight.data());
    r.f64s(layer.bias.data());
    net.layers.push_back(std::move(layer));
  }
  net.validate();
  return net;
}

}  // namespace

std::vector<std::uint8_t> encode_model(const Autoencoder& model) {
  model.validate();
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.u32(2);
  write_network(w, model.encoder);
  write_network(w, model.decoder);
  return w.take();
}

Autoencoder decode_model(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  char magic[4];
  r.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof magic) != 0) throw FormatError("not a GAE1 model container");
  if (r.u32() != 2) throw FormatError("expected encoder and decoder networks");
  Autoencoder model;
  model.encoder = read_network(r);
  model.decoder = read_network(r);
  if (!r.done()) throw FormatError("trailing bytes after model container");
  model.validate();
  return model;
}

void save_model(const std::filesystem::path& path, const Autoencoder& model) {
  const auto bytes = encode_model(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

Autoencoder load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_model(bytes);
}

}  // namespace geomae
