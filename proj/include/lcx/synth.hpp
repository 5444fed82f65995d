#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lcx/core_data.hpp"
#include "lcx/oracle.hpp"

namespace lcx {

struct Dataset {
  EmbeddingMatrix embeddings;
  LabelVector labels;
};

/// C isotropic clusters of n points each. Class c is centred at
/// separation * (1 + c / dim) on axis c % dim.
Dataset gaussian_blobs(std::size_t n_classes, std::size_t n_per_class, std::size_t dim, double separation,
                       double sigma, std::uint64_t seed);

/// Class 0: a unit-radius arc covering 270 degrees, open towards +x, with
/// isotropic noise sigma. Class 1: a tight blob (sigma 0.1) centred at
/// (gap, 0). At gap 0 the long chords of the arc run through the blob.
/// n points per class.
Dataset crescent_pair(std::size_t n, double gap, double sigma, std::uint64_t seed);

inline constexpr double kCrescentBlobSigma = 0.1;

/// Class 0 lives in the strip |y| <= 1 (points kept inside |y| <= 0.95) as
/// `lobes` (1 or 2) rectangles of length 3 along x, separated by a gap of
/// bridge_width. Class 1 fills the rest of [-x_max, x_max] x [-2.5, 2.5] at
/// the same density, including the gap. n points in class 0.
Dataset split_lobes(std::size_t n, double bridge_width, std::uint64_t seed, std::size_t lobes = 2);

inline constexpr double kStripHalfWidth = 1.0;
inline constexpr double kLobeHalfHeight = 0.95;

/// Two-class network on 2-D points: class 0 iff |y| <= half_width (ties go to
/// class 0). Built as affine(y - h, -y - h), relu, head [[0,0],[1,1]].
FeedforwardSpec strip_oracle_spec(double half_width = kStripHalfWidth);

/// 1-nearest-neighbor classifier over a labelled reference set; the lower
/// reference index wins a distance tie.
class NearestNeighborOracle final : public ClassifierOracle {
 public:
  NearestNeighborOracle(EmbeddingMatrix reference, LabelVector labels);
  std::size_t input_dim() const override { return reference_.dim; }
  std::size_t n_classes() const override { return labels_.n_classes; }
  std::vector<ClassId> classify(const PointBatch& points) override;
  nlohmann::ordered_json describe() const override;

 private:
  EmbeddingMatrix reference_;
  LabelVector labels_;
};

struct MarkedPair {
  NodeId a;
  NodeId b;
  double geodesic;  // arc length between the two marked points
};

struct AnnulusFixture {
  EmbeddingMatrix embeddings;
  double radius = 1.0;
  std::vector<MarkedPair> marked;
};

/// n points on a circle of radius r, angle uniform, radius jittered by
/// N(0, sigma). Points 0, 1 and 2 are placed exactly on the circle at
/// angles 0, pi and pi / n; marked pairs are (0, 1) and (0, 2).
AnnulusFixture annulus_geodesic_fixture(std::size_t n, double r, double sigma, std::uint64_t seed);

struct SynthConfig {
  std::string generator = "blobs";  // blobs | crescent | split-lobes | annulus
  std::size_t n = 500;              // per class (blobs, crescent), class 0 (split-lobes), total (annulus)
  std::size_t dim = 2;              // blobs only
  std::size_t n_classes = 4;        // blobs only
  double separation = 10.0;         // blobs
  double sigma = 1.0;               // blobs, crescent, annulus
  double gap = 0.0;                 // crescent
  double bridge_width = 2.0;        // split-lobes
  std::size_t lobes = 2;            // split-lobes
  double radius = 1.0;              // annulus
  std::uint64_t seed = 0;
};

/// Dispatches on config.generator. Annulus points all get label 0.
Dataset generate(const SynthConfig& config);
nlohmann::ordered_json synth_config_json(const SynthConfig& config);

struct SweepRow {
  std::size_t n = 0;
  std::size_t k = 0;
  double convexity = 0.0;                 // headline overall mean
  double existing_only = 0.0;             // overall existing-only mean (0 when nothing connected)
  double path_exists = 0.0;               // mean over classes of the connected-pair share
  std::size_t n_components = 0;
};

/// Graph convexity of `base` regenerated at every n in ns, for every k in ks.
std::vector<SweepRow> regime_sweep(const SynthConfig& base, std::span<const std::size_t> ns,
                                   std::span<const std::size_t> ks, std::size_t n_pairs, std::uint64_t seed,
                                   std::size_t workers = 0);

}  // namespace lcx
