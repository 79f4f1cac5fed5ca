#pragma once

// Versioned little-endian model file:
//
//   magic "TOPOEEGM" | u32 version | u32 kind | u64 seed | i32 classes |
//   u64 features | kind-specific body
//
// Forest bodies carry the hyperparameters followed by every tree's nodes;
// kNN bodies carry k and the training rows; GNB bodies carry priors, means
// and variances.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "topoeeg/errors.hpp"
#include "topoeeg/learn/classifier.hpp"

namespace topoeeg {

inline constexpr std::array<char, 8> kModelMagic{'T', 'O', 'P', 'O', 'E', 'E', 'G', 'M'};
inline constexpr std::uint32_t kModelVersion = 1;

namespace detail {

class ByteWriter {
 public:
  template <typename T>
  void put(T v) {
    static_assert(std::is_arithmetic_v<T>);
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
    static_assert(sizeof(T) == sizeof(U));
    U bits = std::bit_cast<U>(v);
    for (std::size_t i = 0; i < sizeof(U); ++i) buf_.push_back(char((bits >> (8 * i)) & 0xff));
  }
  void put_bytes(const char* p, std::size_t n) { buf_.append(p, n); }
  void put_doubles(const std::vector<double>& v) {
    put<std::uint64_t>(v.size());
    for (double x : v) put(x);
  }
  const std::string& bytes() const { return buf_; }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string bytes) : buf_(std::move(bytes)) {}

  template <typename T>
  T get() {
    static_assert(std::is_arithmetic_v<T>);
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
    need(sizeof(U));
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) bits |= U(std::uint8_t(buf_[pos_ + i])) << (8 * i);
    pos_ += sizeof(U);
    return std::bit_cast<T>(bits);
  }
  void get_bytes(char* p, std::size_t n) {
    need(n);
    std::memcpy(p, buf_.data() + pos_, n);
    pos_ += n;
  }
  std::size_t count(std::size_t elem_size) {
    const auto n = get<std::uint64_t>();
    if (elem_size && n > (buf_.size() - pos_) / elem_size) throw DataError("model file: implausible element count");
    return std::size_t(n);
  }
  std::vector<double> get_doubles() {
    std::vector<double> v(count(8));
    for (auto& x : v) x = get<double>();
    return v;
  }
  bool done() const { return pos_ == buf_.size(); }

 private:
  void need(std::size_t n) const {
    if (buf_.size() - pos_ < n) throw DataError("model file: truncated");
  }
  std::string buf_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string serialize_model(const AnyModel& model) {
  detail::ByteWriter w;
  w.put_bytes(kModelMagic.data(), kModelMagic.size());
  w.put(kModelVersion);
  w.put(std::uint32_t(model_kind(model)));
  std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, ForestModel>) {
          w.put<std::uint64_t>(m.seed);
          w.put<std::int32_t>(m.num_classes);
          w.put<std::uint64_t>(m.num_features);
          w.put<std::uint64_t>(m.params.trees);
          w.put<std::uint64_t>(m.params.max_depth);
          w.put<std::uint64_t>(m.params.min_leaf);
          w.put<std::uint64_t>(m.params.max_features);
          w.put<std::uint8_t>(m.params.bootstrap ? 1 : 0);
          w.put<std::uint64_t>(m.trees.size());
          for (const auto& t : m.trees) {
            w.put<std::uint64_t>(t.nodes.size());
            for (const auto& n : t.nodes) {
              w.put<std::int32_t>(n.feature);
              w.put(n.threshold);
              w.put<std::int32_t>(n.left);
              w.put<std::int32_t>(n.right);
              w.put_doubles(n.histogram);
            }
          }
        } else if constexpr (std::is_same_v<M, KnnModel>) {
          w.put<std::uint64_t>(0);
          w.put<std::int32_t>(m.num_classes);
          w.put<std::uint64_t>(m.train.empty() ? 0 : m.train.front().features.size());
          w.put<std::uint64_t>(m.k);
          w.put<std::uint64_t>(m.train.size());
          for (const auto& e : m.train) {
            w.put<std::int32_t>(e.label);
            for (double x : e.features) w.put(x);
          }
        } else {
          w.put<std::uint64_t>(0);
          w.put<std::int32_t>(m.num_classes);
          w.put<std::uint64_t>(m.num_features);
          w.put_doubles(m.log_prior);
          w.put_doubles(m.mean);
          w.put_doubles(m.var);
        }
      },
      model);
  return w.bytes();
}

inline AnyModel deserialize_model(std::string bytes) {
  detail::ByteReader r(std::move(bytes));
  std::array<char, 8> magic{};
  r.get_bytes(magic.data(), magic.size());
  if (magic != kModelMagic) throw DataError("model file: bad magic");
  const auto version = r.get<std::uint32_t>();
  if (version != kModelVersion) throw DataError("model file: unsupported version " + std::to_string(version));
  const auto kind = r.get<std::uint32_t>();
  const auto seed = r.get<std::uint64_t>();
  const auto classes = r.get<std::int32_t>();
  const auto width = std::size_t(r.get<std::uint64_t>());
  if (classes < 1) throw DataError("model file: bad class count");

  AnyModel out;
  switch (kind) {
    case std::uint32_t(ClassifierKind::rf): {
      ForestModel m;
      m.seed = seed;
      m.num_classes = classes;
      m.num_features = width;
      m.params.trees = r.get<std::uint64_t>();
      m.params.max_depth = r.get<std::uint64_t>();
      m.params.min_leaf = r.get<std::uint64_t>();
      m.params.max_features = r.get<std::uint64_t>();
      m.params.bootstrap = r.get<std::uint8_t>() != 0;
      m.trees.resize(r.count(8));
      for (auto& t : m.trees) {
        t.nodes.resize(r.count(28));
        for (auto& n : t.nodes) {
          n.feature = r.get<std::int32_t>();
          n.threshold = r.get<double>();
          n.left = r.get<std::int32_t>();
          n.right = r.get<std::int32_t>();
          n.histogram = r.get_doubles();
        }
        const auto N = std::int32_t(t.nodes.size());
        if (N == 0) throw DataError("model file: empty tree");
        for (const auto& n : t.nodes) {
          if (n.feature < 0) {
            if (n.histogram.size() != std::size_t(classes)) throw DataError("model file: leaf histogram size");
          } else if (std::size_t(n.feature) >= width || n.left <= 0 || n.right <= 0 || n.left >= N || n.right >= N) {
            throw DataError("model file: malformed tree node");
          }
        }
      }
      out = std::move(m);
      break;
    }
    case std::uint32_t(ClassifierKind::knn): {
      KnnModel m;
      m.num_classes = classes;
      m.k = r.get<std::uint64_t>();
      m.train.resize(r.count(4 + 8 * width));
      for (auto& e : m.train) {
        e.label = r.get<std::int32_t>();
        if (e.label < 0 || e.label >= classes) throw DataError("model file: label out of range");
        e.features.resize(width);
        for (auto& x : e.features) x = r.get<double>();
      }
      out = std::move(m);
      break;
    }
    case std::uint32_t(ClassifierKind::gnb): {
      GnbModel m;
      m.num_classes = classes;
      m.num_features = width;
      m.log_prior = r.get_doubles();
      m.mean = r.get_doubles();
      m.var = r.get_doubles();
      const auto C = std::size_t(classes);
      if (m.log_prior.size() != C || m.mean.size() != C * width || m.var.size() != C * width)
        throw DataError("model file: GNB table sizes");
      out = std::move(m);
      break;
    }
    default:
      throw DataError("model file: unknown classifier kind " + std::to_string(kind));
  }
  if (!r.done()) throw DataError("model file: trailing bytes");
  return out;
}

inline void save_model(const std::filesystem::path& path, const AnyModel& model) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  const auto bytes = serialize_model(model);
  out.write(bytes.data(), std::streamsize(bytes.size()));
  if (!out) throw DataError("write failed: " + path.string());
}

inline AnyModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_model(ss.str());
}

}  // namespace topoeeg
