#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "lcx/core_data.hpp"

namespace lcx {

/// B x D points in f64, row-major.
struct PointBatch {
  std::size_t n = 0;
  std::size_t dim = 0;
  std::vector<double> values;

  PointBatch() = default;
  PointBatch(std::size_t rows, std::size_t cols) : n(rows), dim(cols), values(rows * cols, 0.0) {}
  PointBatch(std::size_t rows, std::size_t cols, std::vector<double> v);

  std::span<const double> row(std::size_t i) const { return {values.data() + i * dim, dim}; }
  std::span<double> row(std::size_t i) { return {values.data() + i * dim, dim}; }

  static PointBatch from_embeddings(const EmbeddingMatrix& m);
};

/// Index of the largest entry; the smallest index wins a tie.
ClassId argmax(std::span<const double> scores);

/// Maps points to class labels. Implementations must be pure: the same batch
/// always yields the same labels.
class ClassifierOracle {
 public:
  virtual ~ClassifierOracle() = default;
  virtual std::size_t input_dim() const = 0;
  /// Label count, or 0 when the oracle cannot tell in advance.
  virtual std::size_t n_classes() const = 0;
  virtual std::vector<ClassId> classify(const PointBatch& points) = 0;
  /// Concurrent classify calls the oracle tolerates; 0 means unlimited.
  virtual std::size_t max_concurrency() const { return 0; }
  /// Echoed in reports.
  virtual nlohmann::ordered_json describe() const = 0;
};

/// Scores a_k(z) = sum_j w_kj z_j + b_k.
struct LinearHead {
  std::size_t n_classes = 0;
  std::size_t dim = 0;
  std::vector<double> weights;  // n_classes x dim, row-major
  std::vector<double> bias;     // n_classes, zeros when omitted

  LinearHead() = default;
  LinearHead(std::size_t classes, std::size_t d, std::vector<double> w, std::vector<double> b = {});

  void validate() const;
  /// B x C scores, accumulated in f64 in column order.
  PointBatch scores(const PointBatch& points) const;
  std::vector<ClassId> classify(const PointBatch& points) const;

  friend bool operator==(const LinearHead&, const LinearHead&) = default;
};

struct AffineLayer {
  std::size_t rows = 0;  // output width
  std::size_t cols = 0;  // input width
  std::vector<double> weight;  // rows x cols, row-major: y = W x + b
  std::vector<double> bias;
  friend bool operator==(const AffineLayer&, const AffineLayer&) = default;
};

struct ReluLayer {
  friend bool operator==(const ReluLayer&, const ReluLayer&) = default;
};

/// y = (x - mean) / sqrt(var + eps) * gain + shift, biased variance.
struct LayerNormLayer {
  std::vector<double> gain;
  std::vector<double> shift;
  double eps = 1e-5;
  friend bool operator==(const LayerNormLayer&, const LayerNormLayer&) = default;
};

using Layer = std::variant<AffineLayer, ReluLayer, LayerNormLayer>;

/// Layer stack followed by a linear head. Boundary b is the point after the
/// first b layers; boundary == layers.size() is the head input.
struct FeedforwardSpec {
  std::vector<Layer> layers;
  LinearHead head;
  std::vector<std::size_t> boundaries;

  /// Checks shapes between consecutive layers and the boundary list.
  void validate() const;
  /// Point width at boundary b.
  std::size_t width_at(std::size_t boundary) const;

  friend bool operator==(const FeedforwardSpec&, const FeedforwardSpec&) = default;
};

/// Applies every layer after `boundary`, then the head: B x C scores.
PointBatch forward_from(const FeedforwardSpec& spec, std::size_t boundary, const PointBatch& points);
/// Activations at `boundary` for network inputs (boundary 0 returns them unchanged).
PointBatch forward_to(const FeedforwardSpec& spec, std::size_t boundary, const PointBatch& inputs);

FeedforwardSpec parse_model_spec(const nlohmann::json& doc);
nlohmann::ordered_json model_spec_json(const FeedforwardSpec& spec);
FeedforwardSpec load_model_spec(const std::filesystem::path& path);
void save_model_spec(const FeedforwardSpec& spec, const std::filesystem::path& path);

/// A LinearHead on its own: {"weight":[...],"bias":[...],"n_classes":C} or a
/// full model spec without layers.
LinearHead load_linear_head(const std::filesystem::path& path);
void save_linear_head(const LinearHead& head, const std::filesystem::path& path);

class LinearOracle final : public ClassifierOracle {
 public:
  explicit LinearOracle(LinearHead head);
  std::size_t input_dim() const override { return head_.dim; }
  std::size_t n_classes() const override { return head_.n_classes; }
  std::vector<ClassId> classify(const PointBatch& points) override;
  nlohmann::ordered_json describe() const override;
  const LinearHead& head() const { return head_; }

 private:
  LinearHead head_;
};

/// Rest of a feedforward network from a fixed boundary.
class FeedforwardOracle final : public ClassifierOracle {
 public:
  FeedforwardOracle(FeedforwardSpec spec, std::size_t boundary);
  std::size_t input_dim() const override;
  std::size_t n_classes() const override { return spec_.head.n_classes; }
  std::vector<ClassId> classify(const PointBatch& points) override;
  nlohmann::ordered_json describe() const override;

 private:
  FeedforwardSpec spec_;
  std::size_t boundary_;
};

/// Wraps a callable, e.g. a Python function. Calls are serialized.
class FunctionOracle final : public ClassifierOracle {
 public:
  using Fn = std::function<std::vector<ClassId>(const PointBatch&)>;
  FunctionOracle(std::size_t input_dim, std::size_t n_classes, Fn fn, std::string name = "function");
  std::size_t input_dim() const override { return dim_; }
  std::size_t n_classes() const override { return n_classes_; }
  std::vector<ClassId> classify(const PointBatch& points) override;
  std::size_t max_concurrency() const override { return 1; }
  nlohmann::ordered_json describe() const override;

 private:
  std::size_t dim_;
  std::size_t n_classes_;
  Fn fn_;
  std::string name_;
  std::mutex mutex_;
};

inline constexpr std::chrono::milliseconds kDefaultOracleTimeout{60'000};

/// External process speaking newline-delimited JSON on stdin/stdout:
///   request  {"id":k,"points":[[x,...],...]}
///   reply    {"id":k,"labels":[c,...]}
/// The command runs under /bin/sh -c and is reused across batches.
class SubprocessOracle final : public ClassifierOracle {
 public:
  SubprocessOracle(std::string command, std::size_t input_dim,
                   std::chrono::milliseconds timeout = kDefaultOracleTimeout);
  ~SubprocessOracle() override;
  SubprocessOracle(const SubprocessOracle&) = delete;
  SubprocessOracle& operator=(const SubprocessOracle&) = delete;

  std::size_t input_dim() const override { return dim_; }
  std::size_t n_classes() const override { return 0; }
  std::vector<ClassId> classify(const PointBatch& points) override;
  std::size_t max_concurrency() const override { return 1; }
  nlohmann::ordered_json describe() const override;

  /// Requests sent so far; also the index of the next batch.
  std::size_t batches_sent() const { return next_id_; }

 private:
  void start();
  void stop() noexcept;
  void write_all(const std::string& data, std::chrono::steady_clock::time_point deadline);
  std::string read_line(std::chrono::steady_clock::time_point deadline);

  std::string command_;
  std::size_t dim_;
  std::chrono::milliseconds timeout_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  std::size_t next_id_ = 0;
  bool dead_ = false;
  std::mutex mutex_;
};

/// Request line for batch `id` (no trailing newline). Doubles are written in
/// shortest round-trip form.
std::string encode_oracle_request(std::size_t id, const PointBatch& points);
/// Validates a reply line against the request id and batch size.
std::vector<ClassId> decode_oracle_reply(const std::string& line, std::size_t id, std::size_t n_points);

}  // namespace lcx
