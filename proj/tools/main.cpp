// Command-line front end: synth / annotate / pretrain / train / parcellate /
// evaluate / select-k / compare. Every run writes a manifest next to its
// outputs recording the resolved configuration, paths, and seed.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dnmfc/baselines.hpp"
#include "dnmfc/dnmfc.hpp"
#include "dnmfc/grid.hpp"
#include "dnmfc/io.hpp"
#include "dnmfc/metrics.hpp"
#include "dnmfc/synthcohort.hpp"

namespace fs = std::filesystem;
using dnmfc::io::json;

namespace {

constexpr const char* kToolVersion = "0.1.0";

std::string file_id(const std::string& path) { return fs::path(path).filename().string(); }

struct ManifestClock {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

void write_manifest(const std::string& subcommand, const json& config,
                    const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs, std::uint64_t seed,
                    const ManifestClock& clock, const std::string& path) {
  json m;
  m["subcommand"] = subcommand;
  m["config"] = config;
  m["inputs"] = inputs;
  m["outputs"] = outputs;
  m["seed"] = seed;
  m["tool_version"] = kToolVersion;
  m["duration_seconds"] = clock.seconds();
  dnmfc::io::write_text_file(path, dnmfc::io::dump_json_canonical(m));
}

std::string manifest_for_file(const std::string& out) { return out + ".manifest.json"; }
std::string manifest_for_dir(const std::string& dir, const std::string& sub) {
  return (fs::path(dir) / (sub + ".manifest.json")).string();
}

struct LoadedFeatures {
  std::vector<dnmfc::FeatureTable> tables;
  dnmfc::PooledFeatures pooled;
};

LoadedFeatures load_and_pool(const std::vector<std::string>& paths) {
  LoadedFeatures out;
  out.tables.reserve(paths.size());
  std::vector<std::string> ids;
  for (const auto& p : paths) {
    out.tables.push_back(dnmfc::io::read_feature_table(p));
    ids.push_back(file_id(p));
  }
  std::vector<const dnmfc::FeatureTable*> ptrs;
  ptrs.reserve(out.tables.size());
  for (const auto& t : out.tables) ptrs.push_back(&t);
  out.pooled = dnmfc::pool_features(ptrs, ids);
  return out;
}

// A cohort directory read back into memory, features recomputed from the
// streamlines so the full pipeline is exercised.
struct CohortData {
  dnmfc::synth::CohortSpec spec;
  std::vector<dnmfc::VoxelGrid> grids;
  std::vector<dnmfc::FeatureTable> features;
  std::vector<dnmfc::LabelMap> truths;
  std::vector<std::string> ids;

  std::size_t size() const { return features.size(); }
};

CohortData load_cohort(const std::string& manifest_path) {
  CohortData data;
  auto subjects = dnmfc::io::read_cohort_manifest(manifest_path, &data.spec);
  if (subjects.empty()) throw dnmfc::InvalidInputError("cohort has no subjects");
  for (const auto& s : subjects) {
    data.grids.push_back(dnmfc::io::read_mask(s.mask));
    auto bundles = dnmfc::io::read_streamlines(s.streamlines);
    data.features.push_back(dnmfc::annotate(bundles, data.grids.back()));
    data.truths.push_back(dnmfc::io::read_label_map(s.truth));
    data.ids.push_back(s.subject_id);
  }
  return data;
}

dnmfc::PooledFeatures pool_range(const CohortData& d, std::size_t begin, std::size_t end) {
  std::vector<const dnmfc::FeatureTable*> ptrs;
  std::vector<std::string> ids;
  for (std::size_t i = begin; i < end; ++i) {
    ptrs.push_back(&d.features[i]);
    ids.push_back(d.ids[i]);
  }
  return dnmfc::pool_features(ptrs, ids);
}

void check_split(std::size_t total, int train_subjects) {
  if (train_subjects < 1 || static_cast<std::size_t>(train_subjects) >= total)
    throw dnmfc::InvalidInputError("train split must leave at least one test subject");
  if (total - static_cast<std::size_t>(train_subjects) < 2)
    throw dnmfc::InvalidInputError("need at least two test subjects for Dice pairs");
}

// ---- synth ----------------------------------------------------------------

struct SynthOpts {
  int subjects = 12;
  std::uint64_t seed = 7;
  int parcels = 3;
  double jitter = 1.0;
  double dropout = 0.1;
  double point_noise = 0.2;
  std::string out;
};

void run_synth(const SynthOpts& o) {
  ManifestClock clock;
  dnmfc::synth::CohortSpec spec;
  spec.subjects = o.subjects;
  spec.seed = o.seed;
  spec.true_parcel_count = o.parcels;
  spec.jitter = o.jitter;
  spec.dropout = o.dropout;
  spec.point_noise = o.point_noise;
  auto subjects = dnmfc::synth::generate_cohort(spec);
  dnmfc::io::write_cohort(spec, subjects, o.out);
  write_manifest("synth", dnmfc::io::cohort_spec_to_json(spec), {},
                 {(fs::path(o.out) / "cohort.json").string()}, spec.seed, clock,
                 manifest_for_dir(o.out, "synth"));
  std::cout << "wrote " << subjects.size() << " subjects to " << o.out << "\n";
}

// ---- annotate -------------------------------------------------------------

struct AnnotateOpts {
  std::string streamlines, mask, out;
};

void run_annotate(const AnnotateOpts& o) {
  ManifestClock clock;
  auto grid = dnmfc::io::read_mask(o.mask);
  auto bundles = dnmfc::io::read_streamlines(o.streamlines);
  auto table = dnmfc::annotate(bundles, grid);
  dnmfc::io::write_feature_table(table, o.out);
  json config{{"streamlines", o.streamlines}, {"mask", o.mask}, {"out", o.out}};
  write_manifest("annotate", config, {o.streamlines, o.mask}, {o.out}, 0, clock,
                 manifest_for_file(o.out));
  std::cout << "annotated " << table.size() << " voxels\n";
}

// ---- pretrain -------------------------------------------------------------

struct PretrainOpts {
  std::vector<std::string> features;
  int epochs = 200;
  std::uint64_t seed = 0;
  int batch_size = 256;
  double learning_rate = 1e-3;
  std::string out;
};

void run_pretrain(const PretrainOpts& o) {
  ManifestClock clock;
  auto loaded = load_and_pool(o.features);
  dnmfc::PretrainOptions po;
  po.epochs = o.epochs;
  po.seed = o.seed;
  po.batch_size = o.batch_size;
  po.learning_rate = o.learning_rate;
  auto model = dnmfc::pretrain(loaded.pooled.x, po);
  dnmfc::io::write_cae_checkpoint(model, o.out);
  json config{{"epochs", o.epochs},
              {"batch_size", o.batch_size},
              {"learning_rate", o.learning_rate},
              {"voxels", loaded.pooled.size()}};
  write_manifest("pretrain", config, o.features, {o.out}, o.seed, clock,
                 manifest_for_file(o.out));
  std::cout << "pretrained on " << loaded.pooled.size() << " voxels, final loss "
            << model.reconstruction_loss(loaded.pooled.x) << "\n";
}

// ---- train ----------------------------------------------------------------

struct TrainOpts {
  std::string cae;
  std::vector<std::string> features;
  std::string method = "dnmfc";
  int k = 3;
  double gamma = 0.1;
  double delta = 0.001;
  int update_interval = 140;
  long max_steps = 20000;
  int batch_size = 256;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  std::string out;
};

dnmfc::TrainConfig train_config(const TrainOpts& o, int pretrain_epochs) {
  dnmfc::TrainConfig cfg;
  cfg.k = o.k;
  cfg.gamma = o.gamma;
  cfg.delta = o.delta;
  cfg.pretrain_epochs = pretrain_epochs;
  cfg.update_interval = o.update_interval;
  cfg.max_steps = o.max_steps;
  cfg.batch_size = o.batch_size;
  cfg.learning_rate = o.learning_rate;
  cfg.seed = o.seed;
  return cfg;
}

json train_config_json(const dnmfc::TrainConfig& cfg, const std::string& method) {
  return json{{"method", method},
              {"k", cfg.k},
              {"gamma", cfg.gamma},
              {"delta", cfg.delta},
              {"update_interval", cfg.update_interval},
              {"max_steps", cfg.max_steps},
              {"batch_size", cfg.batch_size},
              {"learning_rate", cfg.learning_rate}};
}

void run_train(const TrainOpts& o) {
  ManifestClock clock;
  auto cae = dnmfc::io::read_cae_checkpoint(o.cae);
  auto loaded = load_and_pool(o.features);
  auto cfg = train_config(o, cae.config.epochs_trained);
  long steps = 0;
  double final_change = 0;
  if (o.method == "dnmfc") {
    auto model = dnmfc::train(cae, loaded.pooled, cfg);
    dnmfc::io::write_model_checkpoint(model, o.out);
    steps = model.trace.steps_run;
    if (!model.trace.refreshes.empty())
      final_change = model.trace.refreshes.back().label_change_fraction;
  } else {
    auto model = dnmfc::dcec_train(cae, loaded.pooled, cfg);
    dnmfc::io::write_model_checkpoint(model, o.out);
    steps = model.trace.steps_run;
    if (!model.trace.refreshes.empty())
      final_change = model.trace.refreshes.back().label_change_fraction;
  }
  std::vector<std::string> inputs = o.features;
  inputs.insert(inputs.begin(), o.cae);
  write_manifest("train", train_config_json(cfg, o.method), inputs, {o.out}, o.seed, clock,
                 manifest_for_file(o.out));
  std::cout << o.method << " trained for " << steps << " steps, final label change "
            << final_change << "\n";
}

// ---- parcellate -----------------------------------------------------------

struct ParcellateOpts {
  std::string model, features, mask, out;
  std::string method = "auto";
  bool no_median_filter = false;
  int k = 3;
  std::uint64_t seed = 0;
};

void run_parcellate(const ParcellateOpts& o) {
  ManifestClock clock;
  auto table = dnmfc::io::read_feature_table(o.features);
  dnmfc::LabelMap labels;
  std::vector<std::string> inputs{o.features};
  json config{{"method", o.method}, {"median_filter", !o.no_median_filter}};

  if (o.method == "nmf") {
    labels = dnmfc::flat_nmf_parcellate(table, o.k, o.seed);
    config["k"] = o.k;
  } else {
    if (o.model.empty())
      throw dnmfc::InvalidInputError("--model is required unless --method nmf");
    if (o.mask.empty())
      throw dnmfc::InvalidInputError("--mask is required unless --method nmf");
    auto kind = dnmfc::io::peek_checkpoint_kind(o.model);
    if (kind == dnmfc::io::ModelKind::Cae)
      throw dnmfc::InvalidInputError("checkpoint is a bare autoencoder, not a trained model");
    std::string name = kind == dnmfc::io::ModelKind::Dnmfc ? "dnmfc" : "dcec";
    if (o.method != "auto" && o.method != name)
      throw dnmfc::InvalidInputError("checkpoint holds a " + name + " model, not " + o.method);
    auto grid = dnmfc::io::read_mask(o.mask);
    if (kind == dnmfc::io::ModelKind::Dnmfc) {
      auto model = dnmfc::io::read_dnmfc_checkpoint(o.model);
      labels = dnmfc::parcellate(model, table, grid, !o.no_median_filter);
    } else {
      auto model = dnmfc::io::read_dcec_checkpoint(o.model);
      labels = dnmfc::parcellate(model, table, grid, !o.no_median_filter);
    }
    config["model"] = o.model;
    inputs.push_back(o.model);
    inputs.push_back(o.mask);
  }
  dnmfc::io::write_label_map(labels, o.out);
  write_manifest("parcellate", config, inputs, {o.out}, o.seed, clock, manifest_for_file(o.out));
  std::cout << "labeled " << labels.size() << " voxels into " << labels.k_count << " parcels\n";
}

// ---- evaluate -------------------------------------------------------------

struct EvaluateOpts {
  std::vector<std::string> labels, features, truths;
  std::string method = "dnmfc";
  int k = 0;  // 0: infer from the label maps
  std::uint64_t seed = 0;
  std::string out;
};

void run_evaluate(const EvaluateOpts& o) {
  ManifestClock clock;
  if (o.labels.size() != o.features.size())
    throw dnmfc::InvalidInputError("--labels and --features counts differ");
  if (!o.truths.empty() && o.truths.size() != o.labels.size())
    throw dnmfc::InvalidInputError("--truth count must match --labels");

  std::vector<dnmfc::LabelMap> maps;
  std::vector<dnmfc::FeatureTable> tables;
  std::vector<dnmfc::LabelMap> truth_maps;
  std::vector<std::string> ids;
  for (const auto& p : o.labels) {
    maps.push_back(dnmfc::io::read_label_map(p));
    ids.push_back(file_id(p));
  }
  for (const auto& p : o.features) tables.push_back(dnmfc::io::read_feature_table(p));
  for (const auto& p : o.truths) truth_maps.push_back(dnmfc::io::read_label_map(p));

  int k = o.k;
  if (k == 0)
    for (const auto& m : maps) k = std::max(k, m.k_count);
  std::vector<const dnmfc::FeatureTable*> feature_ptrs;
  for (const auto& t : tables) feature_ptrs.push_back(&t);
  std::vector<const dnmfc::LabelMap*> truth_ptrs;
  for (const auto& t : truth_maps) truth_ptrs.push_back(&t);

  auto report =
      dnmfc::metrics::build_report(o.method, k, maps, feature_ptrs, truth_ptrs, ids, o.seed);
  dnmfc::io::write_report(report, o.out);

  std::vector<std::string> inputs = o.labels;
  inputs.insert(inputs.end(), o.features.begin(), o.features.end());
  inputs.insert(inputs.end(), o.truths.begin(), o.truths.end());
  json config{{"method", o.method}, {"k", k}, {"subjects", maps.size()}};
  write_manifest("evaluate", config, inputs, {o.out}, o.seed, clock, manifest_for_file(o.out));
  std::cout << "dice_mean " << report.dice_mean;
  if (report.adjusted_rand) std::cout << ", adjusted_rand " << *report.adjusted_rand;
  std::cout << "\n";
}

// ---- select-k / compare ---------------------------------------------------

struct CohortRunOpts {
  std::string cohort;
  int train_subjects = 8;
  int kmin = 3, kmax = 6;  // select-k only
  int k = 3;               // compare only
  int epochs = 200;
  double gamma = 0.1;
  double delta = 0.001;
  int update_interval = 140;
  long max_steps = 20000;
  int batch_size = 256;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  std::string out;
};

dnmfc::TrainConfig cohort_train_config(const CohortRunOpts& o, int k) {
  dnmfc::TrainConfig cfg;
  cfg.k = k;
  cfg.gamma = o.gamma;
  cfg.delta = o.delta;
  cfg.pretrain_epochs = o.epochs;
  cfg.update_interval = o.update_interval;
  cfg.max_steps = o.max_steps;
  cfg.batch_size = o.batch_size;
  cfg.learning_rate = o.learning_rate;
  cfg.seed = o.seed;
  return cfg;
}

dnmfc::CaeModel pretrain_on_cohort(const CohortData& data, const CohortRunOpts& o,
                                   std::size_t n_train) {
  auto pooled = pool_range(data, 0, n_train);
  dnmfc::PretrainOptions po;
  po.epochs = o.epochs;
  po.seed = o.seed;
  po.batch_size = o.batch_size;
  po.learning_rate = o.learning_rate;
  return dnmfc::pretrain(pooled.x, po);
}

void run_select_k(const CohortRunOpts& o) {
  ManifestClock clock;
  if (o.kmin > o.kmax) throw dnmfc::InvalidInputError("--kmin must be <= --kmax");
  auto data = load_cohort(o.cohort);
  check_split(data.size(), o.train_subjects);
  auto n_train = static_cast<std::size_t>(o.train_subjects);
  auto pooled_train = pool_range(data, 0, n_train);
  auto cae = pretrain_on_cohort(data, o, n_train);

  std::map<int, double> dice_by_k;
  for (int k = o.kmin; k <= o.kmax; ++k) {
    auto model = dnmfc::train(cae, pooled_train, cohort_train_config(o, k));
    std::vector<dnmfc::LabelMap> maps;
    for (std::size_t i = n_train; i < data.size(); ++i)
      maps.push_back(dnmfc::parcellate(model, data.features[i], data.grids[i]));
    dice_by_k[k] = dnmfc::metrics::dice_summary(maps, k).mean;
  }
  int best = dnmfc::metrics::select_k(dice_by_k);

  json rep;
  rep["method"] = "dnmfc";
  rep["best_k"] = best;
  json by_k = json::object();
  for (const auto& [k, d] : dice_by_k) by_k[std::to_string(k)] = d;
  rep["dice_mean_by_k"] = by_k;
  rep["train_subjects"] = o.train_subjects;
  rep["test_subjects"] = data.size() - n_train;
  dnmfc::io::write_text_file(o.out, dnmfc::io::dump_json_canonical(rep));

  json config{{"kmin", o.kmin},       {"kmax", o.kmax},
              {"train_subjects", o.train_subjects}, {"epochs", o.epochs},
              {"gamma", o.gamma},     {"delta", o.delta},
              {"update_interval", o.update_interval}, {"max_steps", o.max_steps},
              {"batch_size", o.batch_size}, {"learning_rate", o.learning_rate}};
  write_manifest("select-k", config, {o.cohort}, {o.out}, o.seed, clock,
                 manifest_for_file(o.out));
  std::cout << "best K = " << best << "\n";
}

json table_row(const dnmfc::metrics::MetricsReport& r) {
  json row;
  row["method"] = r.method;
  row["S"] = r.silhouette ? json(*r.silhouette) : json(nullptr);
  for (std::size_t k = 0; k < r.dice_per_parcel.size(); ++k)
    row["Dice_" + std::to_string(k + 1)] = r.dice_per_parcel[k];
  row["Dice_mean"] = r.dice_mean;
  if (r.adjusted_rand) row["ARI"] = *r.adjusted_rand;
  return row;
}

void run_compare(const CohortRunOpts& o) {
  ManifestClock clock;
  auto data = load_cohort(o.cohort);
  check_split(data.size(), o.train_subjects);
  auto n_train = static_cast<std::size_t>(o.train_subjects);
  auto pooled_train = pool_range(data, 0, n_train);
  auto cae = pretrain_on_cohort(data, o, n_train);
  auto cfg = cohort_train_config(o, o.k);

  std::vector<const dnmfc::FeatureTable*> test_features;
  std::vector<const dnmfc::LabelMap*> test_truths;
  std::vector<std::string> test_ids;
  for (std::size_t i = n_train; i < data.size(); ++i) {
    test_features.push_back(&data.features[i]);
    test_truths.push_back(&data.truths[i]);
    test_ids.push_back(data.ids[i]);
  }

  auto evaluate = [&](const std::string& method, const std::vector<dnmfc::LabelMap>& maps) {
    return dnmfc::metrics::build_report(method, o.k, maps, test_features, test_truths, test_ids,
                                        o.seed);
  };

  auto dmodel = dnmfc::train(cae, pooled_train, cfg);
  std::vector<dnmfc::LabelMap> dnmfc_maps;
  for (std::size_t i = n_train; i < data.size(); ++i)
    dnmfc_maps.push_back(dnmfc::parcellate(dmodel, data.features[i], data.grids[i]));
  auto rep_dnmfc = evaluate("dnmfc", dnmfc_maps);

  auto cmodel = dnmfc::dcec_train(cae, pooled_train, cfg);
  std::vector<dnmfc::LabelMap> dcec_maps;
  for (std::size_t i = n_train; i < data.size(); ++i)
    dcec_maps.push_back(dnmfc::parcellate(cmodel, data.features[i], data.grids[i]));
  auto rep_dcec = evaluate("dcec", dcec_maps);

  // the flat baseline factorizes each test subject's raw features directly
  std::vector<dnmfc::LabelMap> nmf_maps;
  for (std::size_t i = n_train; i < data.size(); ++i)
    nmf_maps.push_back(dnmfc::flat_nmf_parcellate(data.features[i], o.k, o.seed));
  auto rep_nmf = evaluate("nmf", nmf_maps);

  json rep;
  rep["k"] = o.k;
  json columns = json::array({"S"});
  for (int k = 1; k <= o.k; ++k) columns.push_back("Dice_" + std::to_string(k));
  columns.push_back("Dice_mean");
  rep["columns"] = columns;
  rep["rows"] = json::array({table_row(rep_dnmfc), table_row(rep_dcec), table_row(rep_nmf)});
  rep["reports"] = json{{"dnmfc", dnmfc::io::report_to_json(rep_dnmfc)},
                        {"dcec", dnmfc::io::report_to_json(rep_dcec)},
                        {"nmf", dnmfc::io::report_to_json(rep_nmf)}};
  dnmfc::io::write_text_file(o.out, dnmfc::io::dump_json_canonical(rep));

  json config{{"k", o.k},
              {"train_subjects", o.train_subjects},
              {"epochs", o.epochs},
              {"gamma", o.gamma},
              {"delta", o.delta},
              {"update_interval", o.update_interval},
              {"max_steps", o.max_steps},
              {"batch_size", o.batch_size},
              {"learning_rate", o.learning_rate}};
  write_manifest("compare", config, {o.cohort}, {o.out}, o.seed, clock, manifest_for_file(o.out));
  for (const auto& r : {rep_dnmfc, rep_dcec, rep_nmf})
    std::cout << r.method << ": dice_mean " << r.dice_mean << "\n";
}

void add_training_flags(CLI::App* cmd, CohortRunOpts& o) {
  cmd->add_option("--train-subjects", o.train_subjects, "Leading subjects used for training")
      ->capture_default_str();
  cmd->add_option("--epochs", o.epochs, "Autoencoder pretraining epochs")->capture_default_str();
  cmd->add_option("--gamma", o.gamma, "Clustering loss weight")->capture_default_str();
  cmd->add_option("--delta", o.delta, "Label-change stopping threshold")->capture_default_str();
  cmd->add_option("--update-interval", o.update_interval, "Steps between target refreshes")
      ->capture_default_str();
  cmd->add_option("--max-steps", o.max_steps, "Hard cap on joint training steps")
      ->capture_default_str();
  cmd->add_option("--batch-size", o.batch_size, "Mini-batch size")->capture_default_str();
  cmd->add_option("--lr", o.learning_rate, "Adam learning rate")->capture_default_str();
  cmd->add_option("--seed", o.seed, "Random seed")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Connectivity-based parcellation: deep NMF clustering with baselines"};
  app.require_subcommand(1);

  SynthOpts synth_opts;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic cohort directory");
  synth->add_option("--subjects", synth_opts.subjects, "Number of subjects")
      ->capture_default_str();
  synth->add_option("--seed", synth_opts.seed, "Cohort seed")->capture_default_str();
  synth->add_option("--parcels", synth_opts.parcels, "True parcel count (2..7)")
      ->capture_default_str();
  synth->add_option("--jitter", synth_opts.jitter, "Per-subject rigid shift radius, voxels")
      ->capture_default_str();
  synth->add_option("--dropout", synth_opts.dropout, "Per-polyline drop probability")
      ->capture_default_str();
  synth->add_option("--point-noise", synth_opts.point_noise, "Per-coordinate Gaussian sigma")
      ->capture_default_str();
  synth->add_option("--out", synth_opts.out, "Output directory")->required();
  synth->callback([&] { run_synth(synth_opts); });

  AnnotateOpts annotate_opts;
  auto* annotate = app.add_subcommand("annotate", "Streamlines + mask -> voxel feature table");
  annotate->add_option("--streamlines", annotate_opts.streamlines, "Streamline JSONL file")
      ->required();
  annotate->add_option("--mask", annotate_opts.mask, "Mask JSON header")->required();
  annotate->add_option("--out", annotate_opts.out, "Feature table TSV")->required();
  annotate->callback([&] { run_annotate(annotate_opts); });

  PretrainOpts pretrain_opts;
  auto* pretrain = app.add_subcommand("pretrain", "Train the autoencoder on pooled features");
  pretrain->add_option("--features", pretrain_opts.features, "Feature table TSV (repeatable)")
      ->required();
  pretrain->add_option("--epochs", pretrain_opts.epochs, "Training epochs")
      ->capture_default_str();
  pretrain->add_option("--seed", pretrain_opts.seed, "Random seed")->capture_default_str();
  pretrain->add_option("--batch-size", pretrain_opts.batch_size, "Mini-batch size")
      ->capture_default_str();
  pretrain->add_option("--lr", pretrain_opts.learning_rate, "Adam learning rate")
      ->capture_default_str();
  pretrain->add_option("--out", pretrain_opts.out, "Checkpoint path")->required();
  pretrain->callback([&] { run_pretrain(pretrain_opts); });

  TrainOpts train_opts;
  auto* train = app.add_subcommand("train", "Joint clustering training from a pretrained CAE");
  train->add_option("--cae", train_opts.cae, "Pretrained autoencoder checkpoint")->required();
  train->add_option("--features", train_opts.features, "Feature table TSV (repeatable)")
      ->required();
  train->add_option("--method", train_opts.method, "Clustering layer")
      ->check(CLI::IsMember({"dnmfc", "dcec"}))
      ->capture_default_str();
  train->add_option("--k", train_opts.k, "Parcel count")->capture_default_str();
  train->add_option("--gamma", train_opts.gamma, "Clustering loss weight")
      ->capture_default_str();
  train->add_option("--delta", train_opts.delta, "Label-change stopping threshold")
      ->capture_default_str();
  train->add_option("--update-interval", train_opts.update_interval,
                    "Steps between target refreshes")
      ->capture_default_str();
  train->add_option("--max-steps", train_opts.max_steps, "Hard cap on training steps")
      ->capture_default_str();
  train->add_option("--batch-size", train_opts.batch_size, "Mini-batch size")
      ->capture_default_str();
  train->add_option("--lr", train_opts.learning_rate, "Adam learning rate")
      ->capture_default_str();
  train->add_option("--seed", train_opts.seed, "Random seed")->capture_default_str();
  train->add_option("--out", train_opts.out, "Model checkpoint path")->required();
  train->callback([&] { run_train(train_opts); });

  ParcellateOpts parcellate_opts;
  auto* parcellate = app.add_subcommand("parcellate", "Label a subject's voxels with a model");
  parcellate->add_option("--model", parcellate_opts.model, "Trained model checkpoint");
  parcellate->add_option("--features", parcellate_opts.features, "Subject feature table")
      ->required();
  parcellate->add_option("--mask", parcellate_opts.mask, "Mask JSON header");
  parcellate->add_option("--method", parcellate_opts.method,
                         "auto (from checkpoint), dnmfc, dcec, or nmf (flat baseline)")
      ->check(CLI::IsMember({"auto", "dnmfc", "dcec", "nmf"}))
      ->capture_default_str();
  parcellate->add_flag("--no-median-filter", parcellate_opts.no_median_filter,
                       "Skip the label cleanup pass");
  parcellate->add_option("--k", parcellate_opts.k, "Parcel count (nmf only)")
      ->capture_default_str();
  parcellate->add_option("--seed", parcellate_opts.seed, "Random seed (nmf only)")
      ->capture_default_str();
  parcellate->add_option("--out", parcellate_opts.out, "Label map TSV")->required();
  parcellate->callback([&] { run_parcellate(parcellate_opts); });

  EvaluateOpts evaluate_opts;
  auto* evaluate = app.add_subcommand("evaluate", "Metrics report over subject label maps");
  evaluate->add_option("--labels", evaluate_opts.labels, "Label map TSV (repeatable)")
      ->required();
  evaluate->add_option("--features", evaluate_opts.features, "Feature table TSV (repeatable)")
      ->required();
  evaluate->add_option("--truth", evaluate_opts.truths, "Truth label map TSV (repeatable)");
  evaluate->add_option("--method", evaluate_opts.method, "Method name for the report")
      ->capture_default_str();
  evaluate->add_option("--k", evaluate_opts.k, "Parcel count (0: infer)")
      ->capture_default_str();
  evaluate->add_option("--seed", evaluate_opts.seed, "Seed recorded in the report")
      ->capture_default_str();
  evaluate->add_option("--out", evaluate_opts.out, "Report JSON path")->required();
  evaluate->callback([&] { run_evaluate(evaluate_opts); });

  CohortRunOpts selectk_opts;
  auto* selectk = app.add_subcommand("select-k", "Pick K by held-out Dice over a cohort");
  selectk->add_option("--cohort", selectk_opts.cohort, "cohort.json manifest")->required();
  selectk->add_option("--kmin", selectk_opts.kmin, "Smallest K")->required();
  selectk->add_option("--kmax", selectk_opts.kmax, "Largest K")->required();
  add_training_flags(selectk, selectk_opts);
  selectk->add_option("--out", selectk_opts.out, "Report JSON path")->required();
  selectk->callback([&] { run_select_k(selectk_opts); });

  CohortRunOpts compare_opts;
  auto* compare = app.add_subcommand("compare", "Run all three methods on one cohort");
  compare->add_option("--cohort", compare_opts.cohort, "cohort.json manifest")->required();
  compare->add_option("--k", compare_opts.k, "Parcel count")->capture_default_str();
  add_training_flags(compare, compare_opts);
  compare->add_option("--out", compare_opts.out, "Combined report JSON path")->required();
  compare->callback([&] { run_compare(compare_opts); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
