#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dnmfc/types.hpp"

namespace dnmfc::metrics {

// Mean over points of (b - a) / max(a, b) with Euclidean distances; singleton
// clusters contribute 0, as do points with a = b = 0.
double silhouette(const MatrixXd& points, const std::vector<int>& labels);

// 2|A ∩ B| / (|A| + |B|) over the voxel sets labeled k. Both sets empty -> 1,
// exactly one empty -> 0.
double dice_pair(const LabelMap& a, const LabelMap& b, int k);

struct DiceSummary {
  std::vector<double> per_parcel;
  double mean = 0;
  long both_empty_pairs = 0;  // empty-set convention uses, for diagnostics
  long one_empty_pairs = 0;
};

// Dice_k = mean of dice_pair over all unordered subject pairs; mean over k.
DiceSummary dice_summary(const std::vector<LabelMap>& maps, int k);

// K with the highest dice_mean; ties to the smaller K.
int select_k(const std::map<int, double>& dice_mean_by_k);

double adjusted_rand(const std::vector<int>& labels, const std::vector<int>& truth);

struct MetricsReport {
  std::string method;
  int k = 0;
  std::optional<double> silhouette;  // mean over subjects with a defined score
  int silhouette_subjects = 0;
  std::vector<double> dice_per_parcel;
  double dice_mean = 0;
  std::optional<double> adjusted_rand;  // mean over subjects, when truths given
  std::vector<double> ari_per_subject;
  std::vector<std::string> subject_ids;
  std::uint64_t seed = 0;
};

// Silhouette per subject (undefined scores skipped), Dice over subject pairs,
// and, when truths are given, the mean adjusted Rand index against them.
MetricsReport build_report(const std::string& method, int k,
                           const std::vector<LabelMap>& maps,
                           const std::vector<const FeatureTable*>& features,
                           const std::vector<const LabelMap*>& truths,
                           const std::vector<std::string>& subject_ids,
                           std::uint64_t seed);

}  // namespace dnmfc::metrics
