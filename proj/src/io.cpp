#include "dnmfc/io.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

namespace dnmfc::io {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Canonical JSON

namespace {

// 17 significant digits round-trips every double exactly; the ".0" suffix keeps
// integral values typed as floating-point across a reparse.
std::string format_double(double v) {
  if (!std::isfinite(v)) throw InvalidInputError("non-finite number in JSON output");
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s(buf);
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

void dump_canonical(const json& j, std::string& out) {
  switch (j.type()) {
    case json::value_t::object: {
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {  // nlohmann keeps keys sorted
        if (!first) out += ',';
        first = false;
        out += json(it.key()).dump();
        out += ':';
        dump_canonical(it.value(), out);
      }
      out += '}';
      break;
    }
    case json::value_t::array: {
      out += '[';
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ',';
        dump_canonical(j[i], out);
      }
      out += ']';
      break;
    }
    case json::value_t::number_float:
      out += format_double(j.get<double>());
      break;
    case json::value_t::number_integer:
      out += std::to_string(j.get<std::int64_t>());
      break;
    case json::value_t::number_unsigned:
      out += std::to_string(j.get<std::uint64_t>());
      break;
    case json::value_t::string:
      out += j.dump();  // nlohmann's escaping is deterministic
      break;
    case json::value_t::boolean:
      out += j.get<bool>() ? "true" : "false";
      break;
    case json::value_t::null:
      out += "null";
      break;
    default:
      throw InvalidInputError("unsupported JSON value type");
  }
}

json parse_json(const std::string& text, const std::string& what) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw InvalidInputError("malformed JSON in " + what);
  return j;
}

json matrix_to_json(const MatrixXd& m) {  // row-major nesting
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

MatrixXd matrix_from_json(const json& rows, const std::string& what) {
  if (!rows.is_array() || rows.empty() || !rows[0].is_array())
    throw InvalidInputError("expected a nested array for " + what);
  MatrixXd m(rows.size(), rows[0].size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows[0].size())
      throw InvalidInputError("ragged rows in " + what);
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          rows[r][c].get<double>();
  }
  return m;
}

}  // namespace

std::string dump_json_canonical(const json& j) {
  std::string out;
  dump_canonical(j, out);
  out += '\n';
  return out;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInputError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidInputError("cannot write " + path);
  out << content;
  if (!out) throw InvalidInputError("short write to " + path);
}

// ---------------------------------------------------------------------------
// Mask

std::string mask_raw_path(const std::string& json_path) {
  const std::string suffix = ".json";
  if (json_path.size() > suffix.size() &&
      json_path.compare(json_path.size() - suffix.size(), suffix.size(), suffix) == 0)
    return json_path.substr(0, json_path.size() - suffix.size()) + ".raw";
  return json_path + ".raw";
}

void write_mask(const VoxelGrid& grid, const std::string& json_path) {
  grid.validate();
  json header;
  header["dims"] = {grid.dims[0], grid.dims[1], grid.dims[2]};
  write_text_file(json_path, dump_json_canonical(header));
  write_text_file(mask_raw_path(json_path),
                  std::string(grid.mask.begin(), grid.mask.end()));
}

VoxelGrid read_mask(const std::string& json_path) {
  json header = parse_json(read_text_file(json_path), json_path);
  if (!header.contains("dims") || !header["dims"].is_array() || header["dims"].size() != 3)
    throw InvalidInputError("mask header needs \"dims\":[nx,ny,nz]");
  VoxelGrid grid;
  for (int a = 0; a < 3; ++a) grid.dims[a] = header["dims"][a].get<int>();
  std::string raw = read_text_file(mask_raw_path(json_path));
  if (raw.size() != grid.cell_count())
    throw InvalidInputError("mask raw size does not match dims in " + json_path);
  grid.mask.assign(raw.begin(), raw.end());
  grid.validate();
  return grid;
}

// ---------------------------------------------------------------------------
// Streamlines

void write_streamlines(const std::vector<StreamlineBundle>& bundles, const std::string& path) {
  std::string out;
  for (const auto& bundle : bundles)
    for (const auto& line : bundle.polylines) {
      json rec;
      rec["cluster"] = bundle.cluster_id;
      json pts = json::array();
      for (const auto& p : line.points) pts.push_back(json::array({p[0], p[1], p[2]}));
      rec["points"] = pts;
      out += dump_json_canonical(rec);
    }
  write_text_file(path, out);
}

std::vector<StreamlineBundle> read_streamlines(const std::string& path) {
  std::string text = read_text_file(path);
  std::map<int, StreamlineBundle> by_id;
  std::istringstream lines(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    if (line.empty()) continue;
    json rec = parse_json(line, path + ":" + std::to_string(lineno));
    if (!rec.contains("cluster") || !rec.contains("points"))
      throw InvalidInputError("streamline record needs cluster and points fields");
    int id = rec["cluster"].get<int>();
    Polyline poly;
    for (const auto& p : rec["points"]) {
      if (!p.is_array() || p.size() != 3)
        throw InvalidInputError("streamline point must be [x,y,z]");
      poly.points.push_back({p[0].get<double>(), p[1].get<double>(), p[2].get<double>()});
    }
    if (poly.points.empty()) throw InvalidInputError("empty polyline in " + path);
    auto& bundle = by_id[id];
    bundle.cluster_id = id;
    bundle.polylines.push_back(std::move(poly));
  }
  std::vector<StreamlineBundle> bundles;
  for (auto& [id, bundle] : by_id) bundles.push_back(std::move(bundle));
  return bundles;
}

// ---------------------------------------------------------------------------
// Tables

void write_feature_table(const FeatureTable& table, const std::string& path) {
  table.validate();
  std::vector<std::size_t> order(table.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const Voxel &va = table.voxels[a], &vb = table.voxels[b];
    return std::tie(va[2], va[1], va[0]) < std::tie(vb[2], vb[1], vb[0]);
  });

  std::string out = "i\tj\tk\tx1\tx2\tx3\tx4\tx5\tx6\tpoint_count\n";
  for (std::size_t r : order) {
    const Voxel& v = table.voxels[r];
    out += std::to_string(v[0]) + '\t' + std::to_string(v[1]) + '\t' + std::to_string(v[2]);
    for (int b = 0; b < kBundleCount; ++b)
      out += '\t' + std::to_string(static_cast<int>(table.features[r][b]));
    out += '\t' + std::to_string(table.point_counts[r]) + '\n';
  }
  write_text_file(path, out);
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab == std::string::npos ? tab : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

int parse_int_field(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    int v = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InvalidInputError("bad integer '" + s + "' in " + what);
  }
}

}  // namespace

FeatureTable read_feature_table(const std::string& path) {
  std::istringstream lines(read_text_file(path));
  std::string line;
  if (!std::getline(lines, line) || split_tabs(line).size() != 10)
    throw InvalidInputError("feature table header missing in " + path);
  FeatureTable table;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    auto f = split_tabs(line);
    if (f.size() != 10) throw InvalidInputError("feature table row needs 10 columns");
    table.voxels.push_back({parse_int_field(f[0], path), parse_int_field(f[1], path),
                            parse_int_field(f[2], path)});
    std::array<std::uint8_t, kBundleCount> x{};
    for (int b = 0; b < kBundleCount; ++b)
      x[b] = static_cast<std::uint8_t>(parse_int_field(f[3 + b], path));
    table.features.push_back(x);
    table.point_counts.push_back(parse_int_field(f[9], path));
  }
  table.validate();
  return table;
}

void write_label_map(const LabelMap& labels, const std::string& path) {
  labels.validate();
  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const Voxel &va = labels.voxels[a], &vb = labels.voxels[b];
    return std::tie(va[2], va[1], va[0]) < std::tie(vb[2], vb[1], vb[0]);
  });

  std::string out = "i\tj\tk\tlabel\n";
  for (std::size_t r : order) {
    const Voxel& v = labels.voxels[r];
    out += std::to_string(v[0]) + '\t' + std::to_string(v[1]) + '\t' +
           std::to_string(v[2]) + '\t' + std::to_string(labels.labels[r]) + '\n';
  }
  write_text_file(path, out);
}

LabelMap read_label_map(const std::string& path) {
  std::istringstream lines(read_text_file(path));
  std::string line;
  if (!std::getline(lines, line) || split_tabs(line).size() != 4)
    throw InvalidInputError("label map header missing in " + path);
  LabelMap map;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    auto f = split_tabs(line);
    if (f.size() != 4) throw InvalidInputError("label map row needs 4 columns");
    map.voxels.push_back({parse_int_field(f[0], path), parse_int_field(f[1], path),
                          parse_int_field(f[2], path)});
    map.labels.push_back(parse_int_field(f[3], path));
  }
  map.k_count = map.labels.empty() ? 1 : *std::max_element(map.labels.begin(), map.labels.end());
  map.validate();
  return map;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

json layer_weights_to_json(const LayerDef& def, const VectorXd& params) {
  json weight;
  if (def.kind == LayerKind::Dense) {
    // [out][in]
    weight = json::array();
    for (int oc = 0; oc < def.out_channels; ++oc) {
      json row = json::array();
      for (int ic = 0; ic < def.in_channels; ++ic)
        row.push_back(params(def.w_offset + oc * def.in_channels + ic));
      weight.push_back(row);
    }
  } else {
    // [out_ch][in_ch][kernel]
    weight = json::array();
    for (int oc = 0; oc < def.out_channels; ++oc) {
      json plane = json::array();
      for (int ic = 0; ic < def.in_channels; ++ic) {
        json row = json::array();
        for (int t = 0; t < def.kernel; ++t)
          row.push_back(params(def.w_offset + (oc * def.in_channels + ic) * def.kernel + t));
        plane.push_back(row);
      }
      weight.push_back(plane);
    }
  }
  json bias = json::array();
  for (int oc = 0; oc < def.out_channels; ++oc) bias.push_back(params(def.b_offset + oc));
  return json{{"bias", bias}, {"weight", weight}};
}

void layer_weights_from_json(const LayerDef& def, const json& j, VectorXd& params) {
  const json& weight = j.at("weight");
  const json& bias = j.at("bias");
  if (static_cast<int>(bias.size()) != def.out_channels)
    throw InvalidInputError("bias length mismatch for layer " + def.name);
  for (int oc = 0; oc < def.out_channels; ++oc)
    params(def.b_offset + oc) = bias[oc].get<double>();
  if (def.kind == LayerKind::Dense) {
    if (static_cast<int>(weight.size()) != def.out_channels)
      throw InvalidInputError("weight shape mismatch for layer " + def.name);
    for (int oc = 0; oc < def.out_channels; ++oc) {
      if (static_cast<int>(weight[oc].size()) != def.in_channels)
        throw InvalidInputError("weight shape mismatch for layer " + def.name);
      for (int ic = 0; ic < def.in_channels; ++ic)
        params(def.w_offset + oc * def.in_channels + ic) = weight[oc][ic].get<double>();
    }
  } else {
    if (static_cast<int>(weight.size()) != def.out_channels)
      throw InvalidInputError("weight shape mismatch for layer " + def.name);
    for (int oc = 0; oc < def.out_channels; ++oc) {
      if (static_cast<int>(weight[oc].size()) != def.in_channels)
        throw InvalidInputError("weight shape mismatch for layer " + def.name);
      for (int ic = 0; ic < def.in_channels; ++ic) {
        if (static_cast<int>(weight[oc][ic].size()) != def.kernel)
          throw InvalidInputError("weight shape mismatch for layer " + def.name);
        for (int t = 0; t < def.kernel; ++t)
          params(def.w_offset + (oc * def.in_channels + ic) * def.kernel + t) =
              weight[oc][ic][t].get<double>();
      }
    }
  }
}

json train_config_to_json(const TrainConfig& cfg) {
  return json{{"batch_size", cfg.batch_size},
              {"delta", cfg.delta},
              {"gamma", cfg.gamma},
              {"k", cfg.k},
              {"learning_rate", cfg.learning_rate},
              {"max_steps", cfg.max_steps},
              {"pretrain_epochs", cfg.pretrain_epochs},
              {"seed", cfg.seed},
              {"update_interval", cfg.update_interval}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig cfg;
  cfg.k = j.at("k").get<int>();
  cfg.gamma = j.at("gamma").get<double>();
  cfg.delta = j.at("delta").get<double>();
  cfg.pretrain_epochs = j.at("pretrain_epochs").get<int>();
  cfg.update_interval = j.at("update_interval").get<int>();
  cfg.max_steps = j.at("max_steps").get<long>();
  cfg.batch_size = j.at("batch_size").get<int>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.learning_rate = j.at("learning_rate").get<double>();
  return cfg;
}

json trace_to_json(const TrainTrace& trace) {
  json refreshes = json::array();
  for (const auto& r : trace.refreshes)
    refreshes.push_back(json{{"label_change_fraction", r.label_change_fraction},
                             {"loss_cluster", r.loss_cluster},
                             {"loss_recon", r.loss_recon},
                             {"loss_total", r.loss_total},
                             {"step", r.step}});
  json low = json::array();
  for (auto f : trace.low_connectivity) low.push_back(static_cast<int>(f));
  return json{{"degenerate_reinits", trace.degenerate_reinits},
              {"initial_labels", trace.initial_labels},
              {"low_connectivity", low},
              {"refreshes", refreshes},
              {"steps_run", trace.steps_run}};
}

TrainTrace trace_from_json(const json& j) {
  TrainTrace trace;
  for (const auto& r : j.at("refreshes")) {
    RefreshRecord rec;
    rec.step = r.at("step").get<long>();
    rec.loss_total = r.at("loss_total").get<double>();
    rec.loss_recon = r.at("loss_recon").get<double>();
    rec.loss_cluster = r.at("loss_cluster").get<double>();
    rec.label_change_fraction = r.at("label_change_fraction").get<double>();
    trace.refreshes.push_back(rec);
  }
  trace.initial_labels = j.at("initial_labels").get<std::vector<int>>();
  for (const auto& f : j.at("low_connectivity"))
    trace.low_connectivity.push_back(static_cast<std::uint8_t>(f.get<int>()));
  trace.degenerate_reinits = j.at("degenerate_reinits").get<int>();
  trace.steps_run = j.at("steps_run").get<long>();
  return trace;
}

}  // namespace

json cae_to_json(const CaeModel& model) {
  json layers;
  for (const auto& def : CaeModel::layers())
    layers[def.name] = layer_weights_to_json(def, model.params);
  json config{{"batch_size", model.config.batch_size},
              {"embedding_dim", model.config.embedding_dim},
              {"epochs_trained", model.config.epochs_trained},
              {"input_dim", model.config.input_dim},
              {"learning_rate", model.config.learning_rate},
              {"seed", model.config.seed}};
  return json{{"config", config}, {"kind", "cae"}, {"layers", layers}};
}

CaeModel cae_from_json(const json& j) {
  CaeModel model;
  model.params = VectorXd::Zero(CaeModel::parameter_count());
  const json& config = j.at("config");
  model.config.input_dim = config.at("input_dim").get<int>();
  model.config.embedding_dim = config.at("embedding_dim").get<int>();
  model.config.seed = config.at("seed").get<std::uint64_t>();
  model.config.epochs_trained = config.at("epochs_trained").get<int>();
  model.config.learning_rate = config.at("learning_rate").get<double>();
  model.config.batch_size = config.at("batch_size").get<int>();
  if (model.config.input_dim != 6 || model.config.embedding_dim != 36)
    throw InvalidInputError("checkpoint dims do not match the fixed 6 -> 36 architecture");
  const json& layers = j.at("layers");
  for (const auto& def : CaeModel::layers())
    layer_weights_from_json(def, layers.at(def.name), model.params);
  return model;
}

void write_cae_checkpoint(const CaeModel& model, const std::string& path) {
  write_text_file(path, dump_json_canonical(cae_to_json(model)));
}

CaeModel read_cae_checkpoint(const std::string& path) {
  json j = parse_json(read_text_file(path), path);
  std::string kind = j.value("kind", "cae");
  if (kind != "cae")
    throw InvalidInputError(path + " holds a '" + kind + "' checkpoint, expected cae");
  return cae_from_json(j);
}

void write_model_checkpoint(const DnmfcModel& model, const std::string& path) {
  json j = cae_to_json(model.cae);
  j["kind"] = "dnmfc";
  j["W"] = matrix_to_json(model.w);
  j["train_config"] = train_config_to_json(model.config);
  j["trace"] = trace_to_json(model.trace);
  write_text_file(path, dump_json_canonical(j));
}

void write_model_checkpoint(const DcecModel& model, const std::string& path) {
  json j = cae_to_json(model.cae);
  j["kind"] = "dcec";
  j["centroids"] = matrix_to_json(model.centroids);
  j["train_config"] = train_config_to_json(model.config);
  j["trace"] = trace_to_json(model.trace);
  write_text_file(path, dump_json_canonical(j));
}

ModelKind peek_checkpoint_kind(const std::string& path) {
  json j = parse_json(read_text_file(path), path);
  std::string kind = j.value("kind", "cae");
  if (kind == "cae") return ModelKind::Cae;
  if (kind == "dnmfc") return ModelKind::Dnmfc;
  if (kind == "dcec") return ModelKind::Dcec;
  throw InvalidInputError("unknown checkpoint kind '" + kind + "' in " + path);
}

DnmfcModel read_dnmfc_checkpoint(const std::string& path) {
  json j = parse_json(read_text_file(path), path);
  if (j.value("kind", "") != "dnmfc")
    throw InvalidInputError(path + " is not a dnmfc checkpoint");
  DnmfcModel model;
  model.cae = cae_from_json(j);
  model.w = matrix_from_json(j.at("W"), "W");
  if (model.w.rows() != 36) throw InvalidInputError("W must have 36 rows");
  model.config = train_config_from_json(j.at("train_config"));
  model.trace = trace_from_json(j.at("trace"));
  return model;
}

DcecModel read_dcec_checkpoint(const std::string& path) {
  json j = parse_json(read_text_file(path), path);
  if (j.value("kind", "") != "dcec")
    throw InvalidInputError(path + " is not a dcec checkpoint");
  DcecModel model;
  model.cae = cae_from_json(j);
  model.centroids = matrix_from_json(j.at("centroids"), "centroids");
  if (model.centroids.cols() != 36) throw InvalidInputError("centroids must have 36 columns");
  model.config = train_config_from_json(j.at("train_config"));
  model.trace = trace_from_json(j.at("trace"));
  return model;
}

// ---------------------------------------------------------------------------
// Reports and cohorts

json report_to_json(const metrics::MetricsReport& report) {
  json j;
  j["method"] = report.method;
  j["k"] = report.k;
  j["silhouette"] = report.silhouette ? json(*report.silhouette) : json(nullptr);
  j["silhouette_subjects"] = report.silhouette_subjects;
  j["dice_per_parcel"] = report.dice_per_parcel;
  j["dice_mean"] = report.dice_mean;
  if (report.adjusted_rand) {
    j["adjusted_rand"] = *report.adjusted_rand;
    j["ari_per_subject"] = report.ari_per_subject;
  }
  j["subject_ids"] = report.subject_ids;
  j["seed"] = report.seed;
  return j;
}

void write_report(const metrics::MetricsReport& report, const std::string& path) {
  write_text_file(path, dump_json_canonical(report_to_json(report)));
}

json cohort_spec_to_json(const synth::CohortSpec& spec) {
  return json{{"dropout", spec.dropout},
              {"grid_dims", spec.grid_dims},
              {"jitter", spec.jitter},
              {"mask_center", spec.mask_center},
              {"mask_semi_axes", spec.mask_semi_axes},
              {"point_noise", spec.point_noise},
              {"seed", spec.seed},
              {"subjects", spec.subjects},
              {"true_parcel_count", spec.true_parcel_count}};
}

synth::CohortSpec cohort_spec_from_json(const json& j) {
  synth::CohortSpec spec;
  if (j.contains("grid_dims")) spec.grid_dims = j["grid_dims"].get<std::array<int, 3>>();
  if (j.contains("mask_center"))
    spec.mask_center = j["mask_center"].get<std::array<double, 3>>();
  if (j.contains("mask_semi_axes"))
    spec.mask_semi_axes = j["mask_semi_axes"].get<std::array<double, 3>>();
  if (j.contains("true_parcel_count"))
    spec.true_parcel_count = j["true_parcel_count"].get<int>();
  if (j.contains("jitter")) spec.jitter = j["jitter"].get<double>();
  if (j.contains("dropout")) spec.dropout = j["dropout"].get<double>();
  if (j.contains("point_noise")) spec.point_noise = j["point_noise"].get<double>();
  if (j.contains("subjects")) spec.subjects = j["subjects"].get<int>();
  if (j.contains("seed")) spec.seed = j["seed"].get<std::uint64_t>();
  spec.validate();
  return spec;
}

json write_cohort(const synth::CohortSpec& spec, const std::vector<synth::Subject>& subjects,
                  const std::string& dir) {
  fs::create_directories(dir);
  json list = json::array();
  for (std::size_t s = 0; s < subjects.size(); ++s) {
    char id[8];
    std::snprintf(id, sizeof id, "s%02zu", s + 1);
    const auto& subject = subjects[s];
    std::string mask = std::string(id) + ".mask.json";
    std::string streamlines = std::string(id) + ".streamlines.jsonl";
    std::string truth = std::string(id) + ".truth.tsv";
    write_mask(subject.grid, (fs::path(dir) / mask).string());
    write_streamlines(subject.bundles, (fs::path(dir) / streamlines).string());
    write_label_map(subject.truth, (fs::path(dir) / truth).string());
    list.push_back(json{{"id", id},
                        {"mask", mask},
                        {"streamlines", streamlines},
                        {"truth", truth}});
  }
  json manifest{{"spec", cohort_spec_to_json(spec)}, {"subjects", list}};
  write_text_file((fs::path(dir) / "cohort.json").string(), dump_json_canonical(manifest));
  return manifest;
}

std::vector<CohortPaths> read_cohort_manifest(const std::string& manifest_path,
                                              synth::CohortSpec* spec) {
  json manifest = parse_json(read_text_file(manifest_path), manifest_path);
  if (spec != nullptr && manifest.contains("spec"))
    *spec = cohort_spec_from_json(manifest["spec"]);
  fs::path dir = fs::path(manifest_path).parent_path();
  std::vector<CohortPaths> out;
  for (const auto& s : manifest.at("subjects")) {
    CohortPaths p;
    p.subject_id = s.at("id").get<std::string>();
    p.mask = (dir / s.at("mask").get<std::string>()).string();
    p.streamlines = (dir / s.at("streamlines").get<std::string>()).string();
    p.truth = (dir / s.at("truth").get<std::string>()).string();
    out.push_back(p);
  }
  return out;
}

}  // namespace dnmfc::io
