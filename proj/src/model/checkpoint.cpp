#include "tabnet/model/checkpoint.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include "tabnet/error.hpp"

namespace tabnet::model {
namespace {

constexpr char kMagic[8] = {'T', 'A', 'B', 'N', 'E', 'T', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  template <typename T>
  void put(const T& v) {
    const auto* p = reinterpret_cast<const char*>(&v);
    buf_.insert(buf_.end(), p, p + sizeof(T));
  }
  void put_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const char*>(data);
    buf_.insert(buf_.end(), p, p + n);
  }
  void put_string(const std::string& s) {
    put(static_cast<std::uint32_t>(s.size()));
    put_bytes(s.data(), s.size());
  }
  void put_floats(const std::vector<float>& v) {
    put(static_cast<std::uint64_t>(v.size()));
    put_bytes(v.data(), v.size() * sizeof(float));
  }
  std::vector<char>& buffer() { return buf_; }

 private:
  std::vector<char> buf_;
};

class Reader {
 public:
  Reader(const std::vector<char>& buf, std::size_t end) : buf_(buf), end_(end) {}
  template <typename T>
  T get() {
    T v;
    get_bytes(&v, sizeof(T));
    return v;
  }
  void get_bytes(void* dst, std::size_t n) {
    if (n > end_ - pos_) throw ParseError("checkpoint: truncated");
    std::memcpy(dst, buf_.data() + pos_, n);
    pos_ += n;
  }
  std::string get_string() {
    const auto n = get<std::uint32_t>();
    std::string s(n, '\0');
    get_bytes(s.data(), n);
    return s;
  }
  std::vector<float> get_floats(std::size_t expected) {
    const auto n = get<std::uint64_t>();
    if (n != expected) throw ParseError("checkpoint: tensor size mismatch");
    std::vector<float> v(n);
    get_bytes(v.data(), n * sizeof(float));
    return v;
  }
  bool done() const { return pos_ == end_; }

 private:
  const std::vector<char>& buf_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

std::uint32_t crc(const char* data, std::size_t n) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(data), static_cast<uInt>(n)));
}

void put_info(Writer& w, const CheckpointInfo& info) {
  w.put(static_cast<std::int32_t>(info.spec.in_channels));
  w.put(static_cast<std::int32_t>(info.spec.num_classes));
  w.put(static_cast<std::int32_t>(info.spec.base_width));
  w.put(static_cast<std::int32_t>(info.spec.depth));
  w.put(info.config_hash);
  w.put_string(info.config_text);
  w.put(static_cast<std::int32_t>(info.epoch));
  w.put(info.best_metric);
  w.put(static_cast<std::int32_t>(info.best_epoch));
}

CheckpointInfo get_info(Reader& r) {
  CheckpointInfo info;
  info.spec.in_channels = r.get<std::int32_t>();
  info.spec.num_classes = r.get<std::int32_t>();
  info.spec.base_width = r.get<std::int32_t>();
  info.spec.depth = r.get<std::int32_t>();
  info.config_hash = r.get<std::uint64_t>();
  info.config_text = r.get_string();
  info.epoch = r.get<std::int32_t>();
  info.best_metric = r.get<double>();
  info.best_epoch = r.get<std::int32_t>();
  return info;
}

// Reads the file, checks magic/version/CRC and returns a reader over the payload.
std::vector<char> read_verified(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("checkpoint: cannot open '" + path.string() + "'");
  std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < sizeof(kMagic) + 8 || std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0)
    throw ParseError("checkpoint: '" + path.string() + "' is not a tabnet checkpoint");
  std::uint32_t stored = 0;
  std::memcpy(&stored, buf.data() + buf.size() - 4, 4);
  if (stored != crc(buf.data(), buf.size() - 4))
    throw ParseError("checkpoint: checksum mismatch in '" + path.string() + "' (file corrupted)");
  std::uint32_t version = 0;
  std::memcpy(&version, buf.data() + sizeof(kMagic), 4);
  if (version != kVersion)
    throw ParseError("checkpoint: unsupported format version " + std::to_string(version));
  buf.resize(buf.size() - 4);
  buf.erase(buf.begin(), buf.begin() + sizeof(kMagic) + 4);
  return buf;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const UNet& net, const Adam* optimizer,
                     const CheckpointInfo& info) {
  Writer w;
  w.put_bytes(kMagic, sizeof(kMagic));
  w.put(kVersion);
  CheckpointInfo stored = info;
  stored.spec = net.spec();
  put_info(w, stored);
  const auto params = net.parameters();
  w.put(static_cast<std::uint32_t>(params.size()));
  w.put(static_cast<std::uint8_t>(optimizer != nullptr));
  w.put(optimizer ? optimizer->steps() : std::uint64_t{0});
  for (std::size_t i = 0; i < params.size(); ++i) {
    w.put_string(params[i]->name);
    w.put_floats(params[i]->value);
    if (optimizer) {
      w.put_floats(optimizer->first_moments()[i]);
      w.put_floats(optimizer->second_moments()[i]);
    }
  }
  auto& buf = w.buffer();
  const std::uint32_t sum = crc(buf.data(), buf.size());
  w.put(sum);

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("checkpoint: cannot write '" + tmp.string() + "'");
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw Error("checkpoint: write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

CheckpointInfo read_checkpoint_info(const std::filesystem::path& path) {
  const auto buf = read_verified(path);
  Reader r(buf, buf.size());
  return get_info(r);
}

CheckpointInfo load_checkpoint(const std::filesystem::path& path, UNet& net, Adam* optimizer) {
  const auto buf = read_verified(path);
  Reader r(buf, buf.size());
  const auto info = get_info(r);
  if (!(info.spec == net.spec()))
    throw ConfigError("checkpoint: network spec mismatch (stored K=" +
                      std::to_string(info.spec.num_classes) + ", width=" +
                      std::to_string(info.spec.base_width) + ", depth=" +
                      std::to_string(info.spec.depth) + "; expected K=" +
                      std::to_string(net.spec().num_classes) + ", width=" +
                      std::to_string(net.spec().base_width) + ", depth=" +
                      std::to_string(net.spec().depth) + ")");
  auto params = net.parameters();
  if (r.get<std::uint32_t>() != params.size()) throw ParseError("checkpoint: parameter count");
  const bool has_moments = r.get<std::uint8_t>() != 0;
  const auto steps = r.get<std::uint64_t>();
  std::vector<std::vector<float>> values, m, v;
  for (auto* p : params) {
    if (r.get_string() != p->name) throw ParseError("checkpoint: parameter name mismatch at " + p->name);
    values.push_back(r.get_floats(p->value.size()));
    if (has_moments) {
      m.push_back(r.get_floats(p->value.size()));
      v.push_back(r.get_floats(p->value.size()));
    }
  }
  if (!r.done()) throw ParseError("checkpoint: trailing bytes");
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = std::move(values[i]);
  if (optimizer) {
    if (has_moments) optimizer->restore(steps, std::move(m), std::move(v));
    else {
      std::vector<std::vector<float>> zeros;
      for (const auto* p : params) zeros.emplace_back(p->value.size(), 0.0f);
      optimizer->restore(0, zeros, zeros);
    }
  }
  return info;
}

}  // namespace tabnet::model
