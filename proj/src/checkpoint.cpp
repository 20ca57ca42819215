#include "socrec/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

#include "socrec/errors.hpp"

namespace socrec {

namespace {

constexpr char kMagic[4] = {'S', 'O', 'C', 'M'};
// Guards against absurd allocations from a corrupt header.
constexpr std::uint32_t kMaxDim = 1u << 24;

template <class T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof(T));
  }
  return v;
}

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void u8(std::uint8_t v) { out_.put(static_cast<char>(v)); }
  void u32(std::uint32_t v) { raw(to_little(v)); }
  void f64(double v) { raw(to_little(std::bit_cast<std::uint64_t>(v))); }
  void str(const std::string& s) {
    u32(checked(s.size()));
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void matrix(const std::string& name, const Matrix& m) {
    str(name);
    u32(checked(m.rows()));
    u32(checked(m.cols()));
    for (double x : m.data()) f64(x);
  }
  static std::uint32_t checked(std::size_t n) {
    if (n > 0xffffffffu) throw ShapeError("checkpoint: size exceeds u32");
    return static_cast<std::uint32_t>(n);
  }

 private:
  template <class T>
  void raw(T v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::uint8_t u8() {
    char c;
    read(&c, 1);
    return static_cast<std::uint8_t>(c);
  }
  std::uint32_t u32() {
    std::uint32_t v;
    read(reinterpret_cast<char*>(&v), sizeof v);
    return to_little(v);
  }
  double f64() {
    std::uint64_t v;
    read(reinterpret_cast<char*>(&v), sizeof v);
    return std::bit_cast<double>(to_little(v));
  }
  std::string str() {
    const std::uint32_t n = u32();
    if (n > kMaxDim) throw ParseError("checkpoint: string length " + std::to_string(n) + " too large");
    std::string s(n, '\0');
    read(s.data(), n);
    return s;
  }
  void read(char* dst, std::size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) throw ParseError("checkpoint: truncated file");
  }

 private:
  std::istream& in_;
};

std::vector<std::pair<std::string, const Matrix*>> named_matrices(const ScaaModel& model) {
  std::vector<std::pair<std::string, const Matrix*>> out;
  std::size_t i = 0;
  model.soc.for_each([&](const Matrix& w) { out.emplace_back(soc_matrix_names()[i++], &w); });
  out.emplace_back("head.w1", &model.head.w1);
  out.emplace_back("head.b1", &model.head.b1);
  out.emplace_back("head.w2", &model.head.w2);
  out.emplace_back("head.b2", &model.head.b2);
  out.emplace_back("items.embeddings", &model.items.embeddings);
  return out;
}

std::uint8_t variant_code(SocVariant v) {
  switch (v) {
    case SocVariant::kFull:
      return 0;
    case SocVariant::kCoOnly:
      return 1;
    case SocVariant::kNone:
      return 2;
  }
  return 0;
}

}  // namespace

void write_checkpoint(const Checkpoint& ckpt, std::ostream& out) {
  const ScaaModel& model = ckpt.model;
  if (ckpt.item_ids.size() != model.items.count()) {
    throw ShapeError("checkpoint: " + std::to_string(ckpt.item_ids.size()) + " item ids for " +
                     std::to_string(model.items.count()) + " item rows");
  }
  Writer w(out);
  out.write(kMagic, 4);
  w.u32(kCheckpointVersion);
  w.u32(Writer::checked(model.dim()));
  w.u32(Writer::checked(model.head.hidden()));
  w.u8(variant_code(model.variant));
  w.u8(model.use_soc ? 1 : 0);
  w.u8(model.soc_options.scale_logits ? 1 : 0);
  w.u8(model.soc_options.literal_self ? 1 : 0);
  w.u8(model.items.trainable ? 1 : 0);
  w.u8(0);
  w.u8(0);
  w.u8(0);
  const auto mats = named_matrices(model);
  w.u32(Writer::checked(ckpt.item_ids.size()));
  w.u32(Writer::checked(mats.size()));
  for (const auto& id : ckpt.item_ids) w.str(id);
  for (const auto& [name, m] : mats) w.matrix(name, *m);
  if (!out) throw std::runtime_error("checkpoint: write failed");
}

Checkpoint read_checkpoint(std::istream& in) {
  Reader r(in);
  char magic[4];
  r.read(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw ParseError("checkpoint: bad magic");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw ParseError("checkpoint: unsupported version " + std::to_string(version));
  }
  Checkpoint ckpt;
  ScaaModel& model = ckpt.model;
  const std::uint32_t d = r.u32();
  const std::uint32_t hidden = r.u32();
  const std::uint8_t variant = r.u8();
  if (variant > 2) throw ParseError("checkpoint: bad variant code");
  model.variant = variant == 0 ? SocVariant::kFull : variant == 1 ? SocVariant::kCoOnly : SocVariant::kNone;
  model.use_soc = r.u8() != 0;
  model.soc_options.scale_logits = r.u8() != 0;
  model.soc_options.literal_self = r.u8() != 0;
  model.items.trainable = r.u8() != 0;
  r.u8();
  r.u8();
  r.u8();
  const std::uint32_t item_count = r.u32();
  const std::uint32_t matrix_count = r.u32();
  if (d == 0 || d > kMaxDim || hidden > kMaxDim || item_count > kMaxDim) {
    throw ParseError("checkpoint: implausible manifest");
  }
  ckpt.item_ids.reserve(item_count);
  for (std::uint32_t i = 0; i < item_count; ++i) ckpt.item_ids.push_back(r.str());

  std::map<std::string, Matrix> found;
  for (std::uint32_t i = 0; i < matrix_count; ++i) {
    std::string name = r.str();
    const std::uint32_t rows = r.u32();
    const std::uint32_t cols = r.u32();
    if (rows > kMaxDim || cols > kMaxDim ||
        static_cast<std::uint64_t>(rows) * cols > (std::uint64_t{1} << 32)) {
      throw ParseError("checkpoint: implausible shape for " + name);
    }
    Matrix m(rows, cols);
    for (double& x : m.data()) x = r.f64();
    found.emplace(std::move(name), std::move(m));
  }

  auto take = [&](const std::string& name, std::size_t rows, std::size_t cols) {
    auto it = found.find(name);
    if (it == found.end()) throw ParseError("checkpoint: missing matrix " + name);
    if (it->second.rows() != rows || it->second.cols() != cols) {
      throw ParseError("checkpoint: " + name + " is " + it->second.shape_string() + ", expected " +
                       std::to_string(rows) + "x" + std::to_string(cols));
    }
    return std::move(it->second);
  };
  std::size_t i = 0;
  model.soc.for_each([&](Matrix& w) { w = take(soc_matrix_names()[i++], d, d); });
  model.head.w1 = take("head.w1", 3 * std::size_t{d}, hidden);
  model.head.b1 = take("head.b1", 1, hidden);
  model.head.w2 = take("head.w2", hidden, 1);
  model.head.b2 = take("head.b2", 1, 1);
  model.items.embeddings = take("items.embeddings", item_count, d);
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_checkpoint(ckpt, out);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  return read_checkpoint(in);
}

}  // namespace socrec
