#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lcx {

using NodeId = std::uint32_t;
using ClassId = std::uint32_t;

enum class LabelKind : std::uint8_t { data = 0, model = 1 };

const char* to_string(LabelKind kind) noexcept;

/// N x D latent points of one layer, row-major f32.
struct EmbeddingMatrix {
  std::size_t n_points = 0;
  std::size_t dim = 0;
  std::vector<float> values;
  std::uint32_t layer_id = 0;
  std::string name;

  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::size_t n, std::size_t d, std::vector<float> v, std::uint32_t layer = 0,
                  std::string label = {});

  std::span<const float> row(std::size_t i) const { return {values.data() + i * dim, dim}; }
  std::span<float> row(std::size_t i) { return {values.data() + i * dim, dim}; }
  float at(std::size_t i, std::size_t j) const { return values[i * dim + j]; }

  EmbeddingMatrix select_rows(std::span<const NodeId> rows) const;

  friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;
};

/// Per-point class ids. n_classes is stored, not inferred: a decision region
/// may be empty.
struct LabelVector {
  std::vector<ClassId> labels;
  std::uint32_t n_classes = 0;
  LabelKind kind = LabelKind::data;

  std::size_t size() const noexcept { return labels.size(); }
  ClassId operator[](std::size_t i) const { return labels[i]; }

  /// Node ids carrying `cls`, ascending.
  std::vector<NodeId> members(ClassId cls) const;
  std::vector<std::size_t> class_sizes() const;
  LabelVector select(std::span<const NodeId> rows) const;

  /// Labels with n_classes = 1 + max(label) (or 0 when empty).
  static LabelVector from_labels(std::vector<ClassId> labels, LabelKind kind = LabelKind::data);

  friend bool operator==(const LabelVector&, const LabelVector&) = default;
};

/// Layers observed on the same points, ordered by layer id.
struct LayerStack {
  std::vector<EmbeddingMatrix> layers;
  LabelVector labels;
};

/// One invariant violation. Coordinates are filled in when they apply.
struct Finding {
  std::string message;
  std::optional<std::size_t> layer{};
  std::optional<std::size_t> row{};
  std::optional<std::size_t> col{};
};

std::vector<Finding> validate(const EmbeddingMatrix& m);
std::vector<Finding> validate(const LabelVector& labels);
std::vector<Finding> validate_stack(const LayerStack& stack);

// Binary (LCEB/LCLB) is canonical; files ending in .csv are read and written
// as CSV.
EmbeddingMatrix load_embeddings(const std::filesystem::path& path);
void save_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path);
LabelVector load_labels(const std::filesystem::path& path);
void save_labels(const LabelVector& labels, const std::filesystem::path& path);

EmbeddingMatrix decode_embeddings(std::span<const std::byte> bytes);
std::vector<std::byte> encode_embeddings(const EmbeddingMatrix& m);
LabelVector decode_labels(std::span<const std::byte> bytes);
std::vector<std::byte> encode_labels(const LabelVector& labels);

EmbeddingMatrix parse_embeddings_csv(const std::string& text);
std::string format_embeddings_csv(const EmbeddingMatrix& m);
LabelVector parse_labels_csv(const std::string& text);
std::string format_labels_csv(const LabelVector& labels);

inline constexpr std::size_t kCsvCellLimit = 100'000;

}  // namespace lcx
