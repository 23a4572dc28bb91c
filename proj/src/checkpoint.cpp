#include "trajkit/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "trajkit/error.hpp"

namespace trajkit {
namespace {

constexpr char kMagic[8] = {'T', 'R', 'A', 'J', 'K', 'I', 'T', '\0'};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    buf.insert(buf.end(), c, c + n);
  }
  template <class T>
  void le(T v) {
    static_assert(std::is_integral_v<T>);
    for (std::size_t i = 0; i < sizeof(T); ++i) buf.push_back(static_cast<unsigned char>(static_cast<std::uint64_t>(v) >> (8 * i)));
  }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    le<std::uint64_t>(s.size());
    bytes(s.data(), s.size());
  }
  std::vector<unsigned char> buf;
};

class Reader {
 public:
  Reader(const std::vector<unsigned char>& b, std::size_t end) : buf(b), end_(end) {}
  void need(std::size_t n) {
    if (end_ - pos < n) fail(ErrorKind::Checkpoint, "checkpoint: truncated file");
  }
  template <class T>
  T le() {
    need(sizeof(T));
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(buf[pos + i]) << (8 * i);
    pos += sizeof(T);
    return static_cast<T>(v);
  }
  double f64() { return std::bit_cast<double>(le<std::uint64_t>()); }
  std::size_t count(std::size_t max) {
    const auto n = le<std::uint64_t>();
    if (n > max) fail(ErrorKind::Checkpoint, "checkpoint: implausible length field");
    return static_cast<std::size_t>(n);
  }
  std::string str() {
    const std::size_t n = count(end_ - pos);
    std::string s(reinterpret_cast<const char*>(buf.data() + pos), n);
    pos += n;
    return s;
  }
  const std::vector<unsigned char>& buf;
  std::size_t pos = 0;
  std::size_t end_;
};

void write_net(Writer& w, const std::optional<MicroNet>& net) {
  w.le<std::uint32_t>(net ? 1 : 0);
  if (!net) return;
  const auto& s = net->spec();
  w.le<std::uint64_t>(s.x_dim);
  w.le<std::uint64_t>(s.cond_dim);
  w.le<std::uint64_t>(s.out_dim);
  w.le<std::uint64_t>(s.n_freq);
  w.le<std::uint64_t>(s.hidden.size());
  for (auto h : s.hidden) w.le<std::uint64_t>(h);
  const auto p = net->params();
  w.le<std::uint64_t>(p.size());
  for (double v : p) w.f64(v);
}

std::optional<MicroNet> read_net(Reader& r) {
  const auto present = r.le<std::uint32_t>();
  if (present > 1) fail(ErrorKind::Checkpoint, "checkpoint: bad network presence flag");
  if (!present) return std::nullopt;
  constexpr std::size_t kMaxWidth = 1 << 16;
  MicroNetSpec s;
  s.x_dim = r.count(kMaxWidth);
  s.cond_dim = r.count(kMaxWidth);
  s.out_dim = r.count(kMaxWidth);
  s.n_freq = r.count(64);
  s.hidden.resize(r.count(64));
  for (auto& h : s.hidden) h = r.count(kMaxWidth);
  const std::size_t n = r.count((r.end_ - r.pos) / 8);
  std::vector<double> p(n);
  for (double& v : p) v = r.f64();
  MicroNet net;
  try {
    net = MicroNet(s, 0);
    net.set_params(p);
  } catch (const Error& e) {
    fail(ErrorKind::Checkpoint, std::string("checkpoint: inconsistent network block: ") + e.what());
  }
  return net;
}

}  // namespace

std::uint64_t fnv1a64(const unsigned char* data, std::size_t n) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<unsigned char> encode_checkpoint(const Checkpoint& c) {
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.le<std::uint32_t>(c.version);
  w.le<std::uint32_t>(0);
  w.le<std::uint64_t>(c.step);
  w.str(c.config_text);
  w.le<std::uint32_t>(static_cast<std::uint32_t>(c.schedule.kind));
  w.le<std::uint32_t>(0);
  for (double v : {c.schedule.t_min, c.schedule.t_max, c.schedule.lambda_max, c.schedule.lambda_min,
                   c.schedule.sigma_min, c.schedule.sigma_max}) {
    w.f64(v);
  }
  write_net(w, c.oracle);
  write_net(w, c.modulator);
  w.le<std::uint64_t>(c.tags.size());
  for (const auto& [k, v] : c.tags) {
    w.str(k);
    w.f64(v);
  }
  w.le<std::uint64_t>(fnv1a64(w.buf.data(), w.buf.size()));
  return w.buf;
}

Checkpoint decode_checkpoint(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < sizeof kMagic + 16 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    fail(ErrorKind::Checkpoint, "checkpoint: not a trajkit checkpoint");
  }
  Reader head(bytes, bytes.size());
  head.pos = sizeof kMagic;
  Checkpoint c;
  c.version = head.le<std::uint32_t>();
  if (c.version > kCheckpointVersion) {
    fail(ErrorKind::Checkpoint, "checkpoint: format version " + std::to_string(c.version) +
                                    " is newer than supported version " + std::to_string(kCheckpointVersion));
  }
  if (c.version == 0) fail(ErrorKind::Checkpoint, "checkpoint: invalid format version 0");
  const std::size_t body = bytes.size() - 8;
  Reader tail(bytes, bytes.size());
  tail.pos = body;
  if (tail.le<std::uint64_t>() != fnv1a64(bytes.data(), body)) {
    fail(ErrorKind::Checkpoint, "checkpoint: checksum mismatch (truncated or corrupt file)");
  }
  Reader r(bytes, body);
  r.pos = head.pos;
  r.le<std::uint32_t>();
  c.step = r.le<std::uint64_t>();
  c.config_text = r.str();
  const auto kind = r.le<std::uint32_t>();
  if (kind > static_cast<std::uint32_t>(ScheduleKind::RectFlow)) fail(ErrorKind::Checkpoint, "checkpoint: unknown schedule kind");
  c.schedule.kind = static_cast<ScheduleKind>(kind);
  r.le<std::uint32_t>();
  c.schedule.t_min = r.f64();
  c.schedule.t_max = r.f64();
  c.schedule.lambda_max = r.f64();
  c.schedule.lambda_min = r.f64();
  c.schedule.sigma_min = r.f64();
  c.schedule.sigma_max = r.f64();
  c.oracle = read_net(r);
  c.modulator = read_net(r);
  const std::size_t ntags = r.count(1 << 16);
  for (std::size_t i = 0; i < ntags; ++i) {
    std::string k = r.str();
    c.tags[k] = r.f64();
  }
  if (r.pos != body) fail(ErrorKind::Checkpoint, "checkpoint: trailing bytes before checksum");
  return c;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  const auto bytes = encode_checkpoint(ckpt);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) fail(ErrorKind::Artifact, "checkpoint: cannot write " + tmp);
    os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!os) fail(ErrorKind::Artifact, "checkpoint: write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::Artifact, "checkpoint: cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace trajkit
