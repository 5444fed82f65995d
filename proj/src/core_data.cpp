#include "lcx/core_data.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "lcx/error.hpp"

namespace lcx {

static_assert(std::endian::native == std::endian::little, "LCEB/LCLB I/O assumes a little-endian host");

namespace {

constexpr char kEmbeddingMagic[4] = {'L', 'C', 'E', 'B'};
constexpr char kLabelMagic[4] = {'L', 'C', 'L', 'B'};
constexpr std::uint32_t kFormatVersion = 1;

class ByteWriter {
 public:
  template <class T>
  void put(T value) {
    const auto* p = reinterpret_cast<const std::byte*>(&value);
    out_.insert(out_.end(), p, p + sizeof(T));
  }
  void put_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::byte*>(data);
    out_.insert(out_.end(), p, p + n);
  }
  std::vector<std::byte> take() { return std::move(out_); }

 private:
  std::vector<std::byte> out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::byte> bytes) : bytes_(bytes) {}

  std::size_t offset() const noexcept { return pos_; }

  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw FormatError("truncated " + std::string(what) + " at offset " + std::to_string(pos_) +
                        ": need " + std::to_string(n) + " bytes, have " +
                        std::to_string(bytes_.size() - pos_));
    }
  }

  template <class T>
  T get(const char* what) {
    need(sizeof(T), what);
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  void get_bytes(void* dst, std::size_t n, const char* what) {
    need(n, what);
    if (n > 0) std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }

  void expect_magic(const char (&magic)[4]) {
    if (bytes_.size() < 4 || std::memcmp(bytes_.data(), magic, 4) != 0) {
      throw FormatError("bad magic at offset 0: expected \"" + std::string(magic, 4) + "\"");
    }
    pos_ = 4;
  }

  void expect_end() const {
    if (pos_ != bytes_.size()) {
      throw FormatError("trailing bytes at offset " + std::to_string(pos_));
    }
  }

 private:
  std::span<const std::byte> bytes_;
  std::size_t pos_ = 0;
};

std::vector<std::byte> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<std::byte> bytes(raw.size());
  std::memcpy(bytes.data(), raw.data(), raw.size());
  return bytes;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const void* data, std::size_t n) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  out.flush();
  if (!out) throw Error("write failed: " + path.string());
}

bool is_csv(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".csv";
}

// RFC-4180 record splitter: quoted fields may contain commas, doubled quotes
// and line breaks.
std::vector<std::vector<std::string>> split_csv(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        quoted = true;
        any = true;
        break;
      case ',':
        record.push_back(std::move(field));
        field.clear();
        any = true;
        break;
      case '\r':
        break;
      case '\n':
        if (any || !field.empty()) {
          record.push_back(std::move(field));
          records.push_back(std::move(record));
        }
        record.clear();
        field.clear();
        any = false;
        break;
      default:
        field.push_back(c);
        any = true;
    }
  }
  if (quoted) throw FormatError("unterminated quoted field at row " + std::to_string(records.size() + 1));
  if (any || !field.empty()) {
    record.push_back(std::move(field));
    records.push_back(std::move(record));
  }
  return records;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

template <class T>
bool parse_number(std::string_view s, T& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool row_is_numeric(const std::vector<std::string>& record) {
  for (const auto& f : record) {
    double v;
    if (!parse_number(f, v)) return false;
  }
  return true;
}

std::string format_float(float v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

const char* to_string(LabelKind kind) noexcept { return kind == LabelKind::model ? "model" : "data"; }

EmbeddingMatrix::EmbeddingMatrix(std::size_t n, std::size_t d, std::vector<float> v, std::uint32_t layer,
                                 std::string label)
    : n_points(n), dim(d), values(std::move(v)), layer_id(layer), name(std::move(label)) {
  if (values.size() != n_points * dim) {
    throw InputError("embedding values length " + std::to_string(values.size()) + " != " +
                     std::to_string(n_points) + " x " + std::to_string(dim));
  }
}

EmbeddingMatrix EmbeddingMatrix::select_rows(std::span<const NodeId> rows) const {
  EmbeddingMatrix out;
  out.n_points = rows.size();
  out.dim = dim;
  out.layer_id = layer_id;
  out.name = name;
  out.values.reserve(rows.size() * dim);
  for (NodeId r : rows) {
    if (r >= n_points) throw InputError("row index " + std::to_string(r) + " out of range");
    const auto src = row(r);
    out.values.insert(out.values.end(), src.begin(), src.end());
  }
  return out;
}

std::vector<NodeId> LabelVector::members(ClassId cls) const {
  std::vector<NodeId> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == cls) out.push_back(static_cast<NodeId>(i));
  }
  return out;
}

std::vector<std::size_t> LabelVector::class_sizes() const {
  std::vector<std::size_t> sizes(n_classes, 0);
  for (ClassId c : labels) {
    if (c < n_classes) ++sizes[c];
  }
  return sizes;
}

LabelVector LabelVector::select(std::span<const NodeId> rows) const {
  LabelVector out;
  out.n_classes = n_classes;
  out.kind = kind;
  out.labels.reserve(rows.size());
  for (NodeId r : rows) out.labels.push_back(labels.at(r));
  return out;
}

LabelVector LabelVector::from_labels(std::vector<ClassId> labels, LabelKind kind) {
  LabelVector out;
  out.n_classes = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  out.labels = std::move(labels);
  out.kind = kind;
  return out;
}

std::vector<Finding> validate(const EmbeddingMatrix& m) {
  std::vector<Finding> findings;
  if (m.n_points < 1) findings.push_back({"n_points must be >= 1"});
  if (m.dim < 1) findings.push_back({"dim must be >= 1"});
  if (m.values.size() != m.n_points * m.dim) {
    findings.push_back({"values length " + std::to_string(m.values.size()) + " != n_points x dim (" +
                        std::to_string(m.n_points) + " x " + std::to_string(m.dim) + ")"});
    return findings;
  }
  for (std::size_t i = 0; i < m.n_points; ++i) {
    for (std::size_t j = 0; j < m.dim; ++j) {
      if (!std::isfinite(m.at(i, j))) {
        findings.push_back({"non-finite value at (row " + std::to_string(i) + ", col " + std::to_string(j) + ")",
                            std::nullopt, i, j});
      }
    }
  }
  return findings;
}

std::vector<Finding> validate(const LabelVector& labels) {
  std::vector<Finding> findings;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= labels.n_classes) {
      findings.push_back({"label " + std::to_string(labels[i]) + " at row " + std::to_string(i) +
                              " >= n_classes " + std::to_string(labels.n_classes),
                          std::nullopt, i});
    }
  }
  return findings;
}

std::vector<Finding> validate_stack(const LayerStack& stack) {
  std::vector<Finding> findings;
  for (const auto& f : validate(stack.labels)) findings.push_back(f);
  for (std::size_t l = 0; l < stack.layers.size(); ++l) {
    const auto& layer = stack.layers[l];
    if (layer.n_points != stack.labels.size()) {
      findings.push_back({"layer " + std::to_string(l) + " has n_points " + std::to_string(layer.n_points) +
                              ", labels have " + std::to_string(stack.labels.size()),
                          l});
    }
    if (l > 0 && layer.layer_id <= stack.layers[l - 1].layer_id) {
      findings.push_back({"layer " + std::to_string(l) + " layer_id " + std::to_string(layer.layer_id) +
                              " not greater than previous " + std::to_string(stack.layers[l - 1].layer_id),
                          l});
    }
    for (auto f : validate(layer)) {
      f.layer = l;
      f.message = "layer " + std::to_string(l) + ": " + f.message;
      findings.push_back(std::move(f));
    }
  }
  return findings;
}

std::vector<std::byte> encode_embeddings(const EmbeddingMatrix& m) {
  ByteWriter w;
  w.put_bytes(kEmbeddingMagic, 4);
  w.put<std::uint32_t>(kFormatVersion);
  w.put<std::uint64_t>(m.n_points);
  w.put<std::uint64_t>(m.dim);
  w.put<std::uint32_t>(m.layer_id);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(m.name.size()));
  w.put_bytes(m.name.data(), m.name.size());
  w.put_bytes(m.values.data(), m.values.size() * sizeof(float));
  return w.take();
}

EmbeddingMatrix decode_embeddings(std::span<const std::byte> bytes) {
  ByteReader r(bytes);
  r.expect_magic(kEmbeddingMagic);
  const std::size_t version_offset = r.offset();
  if (const auto version = r.get<std::uint32_t>("header"); version != kFormatVersion) {
    throw FormatError("unsupported version " + std::to_string(version) + " at offset " +
                      std::to_string(version_offset));
  }
  EmbeddingMatrix m;
  m.n_points = r.get<std::uint64_t>("header");
  m.dim = r.get<std::uint64_t>("header");
  m.layer_id = r.get<std::uint32_t>("header");
  const auto name_len = r.get<std::uint32_t>("header");
  m.name.resize(name_len);
  r.get_bytes(m.name.data(), name_len, "name");
  if (m.n_points < 1 || m.dim < 1) {
    throw FormatError("dimension mismatch at offset 4: n_points and dim must be >= 1");
  }
  const std::size_t payload_offset = r.offset();
  if (m.n_points > SIZE_MAX / sizeof(float) / m.dim) {
    throw FormatError("truncated payload at offset " + std::to_string(payload_offset));
  }
  r.need(m.n_points * m.dim * sizeof(float), "payload");
  m.values.resize(m.n_points * m.dim);
  r.get_bytes(m.values.data(), m.values.size() * sizeof(float), "payload");
  r.expect_end();
  for (std::size_t k = 0; k < m.values.size(); ++k) {
    if (!std::isfinite(m.values[k])) {
      throw FormatError("non-finite value at offset " + std::to_string(payload_offset + k * sizeof(float)) +
                        " (row " + std::to_string(k / m.dim) + ", col " + std::to_string(k % m.dim) + ")");
    }
  }
  return m;
}

std::vector<std::byte> encode_labels(const LabelVector& labels) {
  ByteWriter w;
  w.put_bytes(kLabelMagic, 4);
  w.put<std::uint32_t>(kFormatVersion);
  w.put<std::uint64_t>(labels.size());
  w.put<std::uint32_t>(labels.n_classes);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(labels.kind));
  w.put_bytes(labels.labels.data(), labels.labels.size() * sizeof(ClassId));
  return w.take();
}

LabelVector decode_labels(std::span<const std::byte> bytes) {
  ByteReader r(bytes);
  r.expect_magic(kLabelMagic);
  const std::size_t version_offset = r.offset();
  if (const auto version = r.get<std::uint32_t>("header"); version != kFormatVersion) {
    throw FormatError("unsupported version " + std::to_string(version) + " at offset " +
                      std::to_string(version_offset));
  }
  LabelVector out;
  const auto n = r.get<std::uint64_t>("header");
  out.n_classes = r.get<std::uint32_t>("header");
  const std::size_t kind_offset = r.offset();
  const auto kind = r.get<std::uint8_t>("header");
  if (kind > 1) throw FormatError("bad label kind " + std::to_string(kind) + " at offset " + std::to_string(kind_offset));
  out.kind = static_cast<LabelKind>(kind);
  const std::size_t payload_offset = r.offset();
  if (n > bytes.size() / sizeof(ClassId)) {
    throw FormatError("truncated payload at offset " + std::to_string(payload_offset));
  }
  out.labels.resize(n);
  r.get_bytes(out.labels.data(), n * sizeof(ClassId), "payload");
  r.expect_end();
  for (std::size_t i = 0; i < n; ++i) {
    if (out.labels[i] >= out.n_classes) {
      throw FormatError("label " + std::to_string(out.labels[i]) + " >= declared n_classes " +
                        std::to_string(out.n_classes) + " at offset " +
                        std::to_string(payload_offset + i * sizeof(ClassId)));
    }
  }
  return out;
}

EmbeddingMatrix parse_embeddings_csv(const std::string& text) {
  auto records = split_csv(text);
  std::size_t first = 0;
  if (!records.empty() && !row_is_numeric(records[0])) first = 1;
  if (records.size() <= first) throw FormatError("empty CSV: no data rows");

  EmbeddingMatrix m;
  m.dim = records[first].size();
  m.n_points = records.size() - first;
  if (m.n_points * m.dim > kCsvCellLimit) {
    throw InputError("CSV has " + std::to_string(m.n_points * m.dim) + " cells, limit is " +
                     std::to_string(kCsvCellLimit) + "; convert to LCEB");
  }
  m.values.reserve(m.n_points * m.dim);
  for (std::size_t r = first; r < records.size(); ++r) {
    const std::size_t row_no = r + 1;
    if (records[r].size() != m.dim) {
      throw FormatError("dimension mismatch at row " + std::to_string(row_no) + ": expected " +
                        std::to_string(m.dim) + " columns, found " + std::to_string(records[r].size()));
    }
    for (std::size_t c = 0; c < m.dim; ++c) {
      float v;
      if (!parse_number(records[r][c], v)) {
        throw FormatError("not a number at row " + std::to_string(row_no) + ", column " + std::to_string(c + 1) +
                          ": \"" + records[r][c] + "\"");
      }
      if (!std::isfinite(v)) {
        throw FormatError("non-finite value at row " + std::to_string(row_no) + ", column " +
                          std::to_string(c + 1));
      }
      m.values.push_back(v);
    }
  }
  return m;
}

std::string format_embeddings_csv(const EmbeddingMatrix& m) {
  std::string out;
  for (std::size_t j = 0; j < m.dim; ++j) {
    if (j) out += ',';
    out += "x" + std::to_string(j);
  }
  out += '\n';
  for (std::size_t i = 0; i < m.n_points; ++i) {
    for (std::size_t j = 0; j < m.dim; ++j) {
      if (j) out += ',';
      out += format_float(m.at(i, j));
    }
    out += '\n';
  }
  return out;
}

LabelVector parse_labels_csv(const std::string& text) {
  auto records = split_csv(text);
  std::size_t first = 0;
  if (!records.empty() && !row_is_numeric(records[0])) first = 1;
  std::vector<ClassId> labels;
  labels.reserve(records.size());
  for (std::size_t r = first; r < records.size(); ++r) {
    const std::size_t row_no = r + 1;
    if (records[r].size() != 1) {
      throw FormatError("expected a single column at row " + std::to_string(row_no));
    }
    long long v;
    if (!parse_number(records[r][0], v)) {
      throw FormatError("not an integer label at row " + std::to_string(row_no) + ": \"" + records[r][0] + "\"");
    }
    if (v < 0) throw FormatError("negative label at row " + std::to_string(row_no));
    if (v > static_cast<long long>(UINT32_MAX - 1)) throw FormatError("label too large at row " + std::to_string(row_no));
    labels.push_back(static_cast<ClassId>(v));
  }
  return LabelVector::from_labels(std::move(labels));
}

std::string format_labels_csv(const LabelVector& labels) {
  std::string out = "label\n";
  for (ClassId c : labels.labels) out += std::to_string(c) + '\n';
  return out;
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw InputError("file not found: " + path.string());
  EmbeddingMatrix m;
  try {
    if (is_csv(path)) {
      m = parse_embeddings_csv(read_text(path));
    } else {
      const auto bytes = read_file(path);
      m = decode_embeddings(bytes);
    }
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return m;
}

void save_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path) {
  if (auto findings = validate(m); !findings.empty()) throw InputError("invalid embeddings: " + findings[0].message);
  if (is_csv(path)) {
    const auto text = format_embeddings_csv(m);
    write_file(path, text.data(), text.size());
  } else {
    const auto bytes = encode_embeddings(m);
    write_file(path, bytes.data(), bytes.size());
  }
}

LabelVector load_labels(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw InputError("file not found: " + path.string());
  try {
    if (is_csv(path)) return parse_labels_csv(read_text(path));
    const auto bytes = read_file(path);
    return decode_labels(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void save_labels(const LabelVector& labels, const std::filesystem::path& path) {
  if (auto findings = validate(labels); !findings.empty()) throw InputError("invalid labels: " + findings[0].message);
  if (is_csv(path)) {
    const auto text = format_labels_csv(labels);
    write_file(path, text.data(), text.size());
  } else {
    const auto bytes = encode_labels(labels);
    write_file(path, bytes.data(), bytes.size());
  }
}

}  // namespace lcx
