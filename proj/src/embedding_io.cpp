#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "medsel/errors.hpp"
#include "medsel/tasks.hpp"

namespace medsel {
namespace {

constexpr char kMagic[5] = {'S', 'E', 'L', 'X', '1'};
constexpr std::size_t kHeaderBytes = 5 + 3 * 4;

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  template <typename T>
  void le(T v) {
    using U = std::make_unsigned_t<T>;
    auto u = static_cast<U>(v);
    for (std::size_t i = 0; i < sizeof(T); ++i) buf_.push_back(static_cast<char>((u >> (8 * i)) & 0xFF));
  }
  void f32(double v) { le<std::uint32_t>(std::bit_cast<std::uint32_t>(static_cast<float>(v))); }
  const std::string& str() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string data) : data_(std::move(data)) {}
  bool has(std::size_t n) const { return pos_ + n <= data_.size(); }
  std::size_t remaining() const { return data_.size() - pos_; }
  template <typename T>
  T le() {
    using U = std::make_unsigned_t<T>;
    U u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      u |= static_cast<U>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += sizeof(T);
    return static_cast<T>(u);
  }
  float f32() { return std::bit_cast<float>(le<std::uint32_t>()); }
  std::string_view take(std::size_t n) {
    std::string_view v(data_.data() + pos_, n);
    pos_ += n;
    return v;
  }

 private:
  std::string data_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_embedding_file(const ItemStore& store, const std::filesystem::path& path) {
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.le<std::uint32_t>(static_cast<std::uint32_t>(store.dim()));
  w.le<std::uint32_t>(static_cast<std::uint32_t>(store.size()));
  w.le<std::uint32_t>(store.n_conditions());
  for (const LabeledEmbedding& it : store.items()) {
    w.le<std::uint64_t>(it.item_id);
    w.le<std::uint8_t>(it.label);
    w.f32(it.clinical.age);
    w.le<std::uint8_t>(it.clinical.sex);
    w.le<std::uint8_t>(it.clinical.laterality);
    w.le<std::uint32_t>(it.condition_id);
    for (double v : it.embedding) w.f32(v);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out.write(w.str().data(), static_cast<std::streamsize>(w.str().size()));
  if (!out) throw DataError("write to " + path.string() + " failed");
}

ItemStore load_embedding_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open embedding file " + path.string());
  Reader r(std::string(std::istreambuf_iterator<char>(in), {}));
  const std::string where = path.string() + ": ";
  if (!r.has(kHeaderBytes)) throw DataError(where + "file too short for the SELX1 header");
  if (r.take(5) != std::string_view(kMagic, 5)) throw DataError(where + "bad magic, expected SELX1");
  const auto d = r.le<std::uint32_t>();
  const auto n_items = r.le<std::uint32_t>();
  const auto n_conditions = r.le<std::uint32_t>();
  if (d == 0) throw DataError(where + "embedding dimension is zero");
  const std::size_t record = 8 + 1 + 4 + 1 + 1 + 4 + 4 * static_cast<std::size_t>(d);

  std::vector<LabeledEmbedding> items;
  items.reserve(n_items);
  for (std::uint32_t i = 0; i < n_items; ++i) {
    if (!r.has(record))
      throw DataError(where + "truncated at item " + std::to_string(i) + ": " + std::to_string(r.remaining()) +
                      " bytes left, record needs " + std::to_string(record) + " (d=" + std::to_string(d) + ")");
    LabeledEmbedding it;
    it.item_id = r.le<std::uint64_t>();
    it.label = r.le<std::uint8_t>();
    it.clinical.age = r.f32();
    it.clinical.sex = r.le<std::uint8_t>();
    it.clinical.laterality = r.le<std::uint8_t>();
    it.condition_id = r.le<std::uint32_t>();
    it.embedding.resize(d);
    for (std::uint32_t j = 0; j < d; ++j) {
      const float v = r.f32();
      if (!std::isfinite(v))
        throw DataError(where + "item " + std::to_string(i) + " has a non-finite embedding value at coordinate " +
                        std::to_string(j));
      it.embedding[j] = v;
    }
    items.push_back(std::move(it));
  }
  if (r.remaining() != 0)
    throw DataError(where + std::to_string(r.remaining()) + " trailing bytes after " + std::to_string(n_items) +
                    " items; records disagree with header d=" + std::to_string(d));
  try {
    return ItemStore(d, n_conditions, std::move(items));
  } catch (const DataError& e) {
    throw DataError(where + e.what());
  }
}

}  // namespace medsel
