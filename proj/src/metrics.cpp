#include "dnmfc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace dnmfc::metrics {

double silhouette(const MatrixXd& points, const std::vector<int>& labels) {
  const Eigen::Index n = points.rows();
  if (n < 2) throw InvalidInputError("silhouette: need at least 2 points");
  if (static_cast<Eigen::Index>(labels.size()) != n)
    throw InvalidInputError("silhouette: one label per point required");

  // compact cluster ids
  std::map<int, int> cluster_of;
  for (int l : labels) cluster_of.emplace(l, static_cast<int>(cluster_of.size()));
  const int k = static_cast<int>(cluster_of.size());
  if (k < 2) throw UndefinedMetricError("silhouette undefined for a single cluster");

  std::vector<int> cid(labels.size());
  std::vector<long> sizes(k, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    cid[i] = cluster_of[labels[i]];
    ++sizes[cid[i]];
  }

  double total = 0.0;
  std::vector<double> sum_to(k);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::fill(sum_to.begin(), sum_to.end(), 0.0);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      sum_to[cid[j]] += (points.row(i) - points.row(j)).norm();
    }
    int own = cid[i];
    if (sizes[own] == 1) continue;  // singleton contributes 0
    double a = sum_to[own] / static_cast<double>(sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c)
      if (c != own) b = std::min(b, sum_to[c] / static_cast<double>(sizes[c]));
    double denom = std::max(a, b);
    if (denom > 0.0) total += (b - a) / denom;  // a = b = 0 contributes 0
  }
  return total / static_cast<double>(n);
}

double dice_pair(const LabelMap& a, const LabelMap& b, int k) {
  int k_max = std::max(a.k_count, b.k_count);
  if (k < 1 || k > k_max) throw InvalidInputError("dice_pair: parcel outside 1..K");

  std::set<Voxel> sa, sb;
  for (std::size_t r = 0; r < a.size(); ++r)
    if (a.labels[r] == k) sa.insert(a.voxels[r]);
  for (std::size_t r = 0; r < b.size(); ++r)
    if (b.labels[r] == k) sb.insert(b.voxels[r]);

  if (sa.empty() && sb.empty()) return 1.0;
  if (sa.empty() || sb.empty()) return 0.0;
  long both = 0;
  for (const Voxel& v : sa) both += sb.count(v);
  return 2.0 * static_cast<double>(both) / static_cast<double>(sa.size() + sb.size());
}

DiceSummary dice_summary(const std::vector<LabelMap>& maps, int k) {
  if (maps.size() < 2) throw InvalidInputError("dice_summary: need at least 2 maps");
  if (k < 1) throw InvalidInputError("dice_summary: K must be >= 1");

  DiceSummary out;
  const double pairs = static_cast<double>(maps.size() * (maps.size() - 1) / 2);
  for (int parcel = 1; parcel <= k; ++parcel) {
    double sum = 0.0;
    for (std::size_t i = 0; i < maps.size(); ++i)
      for (std::size_t j = i + 1; j < maps.size(); ++j) {
        bool ea = std::none_of(maps[i].labels.begin(), maps[i].labels.end(),
                               [parcel](int l) { return l == parcel; });
        bool eb = std::none_of(maps[j].labels.begin(), maps[j].labels.end(),
                               [parcel](int l) { return l == parcel; });
        if (ea && eb)
          ++out.both_empty_pairs;
        else if (ea || eb)
          ++out.one_empty_pairs;
        sum += dice_pair(maps[i], maps[j], parcel);
      }
    out.per_parcel.push_back(sum / pairs);
  }
  out.mean = 0.0;
  for (double d : out.per_parcel) out.mean += d;
  out.mean /= static_cast<double>(k);
  return out;
}

int select_k(const std::map<int, double>& dice_mean_by_k) {
  if (dice_mean_by_k.empty()) throw InvalidInputError("select_k: empty candidate range");
  int best_k = dice_mean_by_k.begin()->first;
  double best = dice_mean_by_k.begin()->second;
  for (const auto& [k, dice] : dice_mean_by_k)
    if (dice > best) {  // ascending key order makes ties go to the smaller K
      best = dice;
      best_k = k;
    }
  return best_k;
}

namespace {

double comb2(double x) { return x * (x - 1.0) / 2.0; }

}  // namespace

double adjusted_rand(const std::vector<int>& labels, const std::vector<int>& truth) {
  if (labels.size() != truth.size())
    throw InvalidInputError("adjusted_rand: label vectors differ in length");
  if (labels.empty()) throw InvalidInputError("adjusted_rand: empty label vectors");

  std::map<std::pair<int, int>, long> cells;
  std::map<int, long> rows, cols;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    ++cells[{labels[i], truth[i]}];
    ++rows[labels[i]];
    ++cols[truth[i]];
  }
  double sum_cells = 0.0, sum_rows = 0.0, sum_cols = 0.0;
  for (const auto& [_, c] : cells) sum_cells += comb2(static_cast<double>(c));
  for (const auto& [_, c] : rows) sum_rows += comb2(static_cast<double>(c));
  for (const auto& [_, c] : cols) sum_cols += comb2(static_cast<double>(c));
  double total = comb2(static_cast<double>(labels.size()));
  if (total == 0.0) return 1.0;
  double expected = sum_rows * sum_cols / total;
  double max_index = 0.5 * (sum_rows + sum_cols);
  if (max_index == expected) return 1.0;  // both partitions trivial
  return (sum_cells - expected) / (max_index - expected);
}

MetricsReport build_report(const std::string& method, int k,
                           const std::vector<LabelMap>& maps,
                           const std::vector<const FeatureTable*>& features,
                           const std::vector<const LabelMap*>& truths,
                           const std::vector<std::string>& subject_ids,
                           std::uint64_t seed) {
  if (maps.size() != features.size() || maps.size() != subject_ids.size())
    throw InvalidInputError("build_report: one feature table and id per label map");
  if (!truths.empty() && truths.size() != maps.size())
    throw InvalidInputError("build_report: one truth per label map when truths are given");

  MetricsReport report;
  report.method = method;
  report.k = k;
  report.subject_ids = subject_ids;
  report.seed = seed;

  // silhouette on raw per-subject features; subjects with a single predicted
  // parcel have no defined score and are skipped
  double sil_sum = 0.0;
  for (std::size_t s = 0; s < maps.size(); ++s) {
    if (maps[s].voxels != features[s]->voxels)
      throw InvalidInputError("build_report: label map voxels do not match features");
    try {
      sil_sum += silhouette(feature_matrix(*features[s]), maps[s].labels);
      ++report.silhouette_subjects;
    } catch (const UndefinedMetricError&) {
    }
  }
  if (report.silhouette_subjects > 0)
    report.silhouette = sil_sum / report.silhouette_subjects;

  DiceSummary dice = dice_summary(maps, k);
  report.dice_per_parcel = dice.per_parcel;
  report.dice_mean = dice.mean;

  if (!truths.empty()) {
    double ari_sum = 0.0;
    for (std::size_t s = 0; s < maps.size(); ++s) {
      if (truths[s]->voxels != maps[s].voxels)
        throw InvalidInputError("build_report: truth voxels do not match the label map");
      double ari = adjusted_rand(maps[s].labels, truths[s]->labels);
      report.ari_per_subject.push_back(ari);
      ari_sum += ari;
    }
    report.adjusted_rand = ari_sum / static_cast<double>(maps.size());
  }
  return report;
}

}  // namespace dnmfc::metrics
