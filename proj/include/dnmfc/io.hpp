#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "dnmfc/baselines.hpp"
#include "dnmfc/dnmfc.hpp"
#include "dnmfc/metrics.hpp"
#include "dnmfc/synthcohort.hpp"
#include "dnmfc/types.hpp"

namespace dnmfc::io {

using json = nlohmann::json;

// Canonical serialization: sorted keys, floating-point numbers at 17 significant
// digits (always with a '.' or exponent so types survive a round trip). A
// write -> read -> write cycle is byte-stable.
std::string dump_json_canonical(const json& j);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// Mask: JSON header {"dims":[nx,ny,nz]} plus a sibling raw byte file of 0/1
// values in x-fastest order ("<stem>.raw" next to "<stem>.json").
std::string mask_raw_path(const std::string& json_path);
void write_mask(const VoxelGrid& grid, const std::string& json_path);
VoxelGrid read_mask(const std::string& json_path);

// Streamlines: newline-delimited JSON records {"cluster": c, "points": [[x,y,z],...]}.
void write_streamlines(const std::vector<StreamlineBundle>& bundles, const std::string& path);
std::vector<StreamlineBundle> read_streamlines(const std::string& path);

// Tab-separated, header row, sorted by (k, j, i).
void write_feature_table(const FeatureTable& table, const std::string& path);
FeatureTable read_feature_table(const std::string& path);
void write_label_map(const LabelMap& labels, const std::string& path);
LabelMap read_label_map(const std::string& path);

enum class ModelKind { Cae, Dnmfc, Dcec };

json cae_to_json(const CaeModel& model);
CaeModel cae_from_json(const json& j);
void write_cae_checkpoint(const CaeModel& model, const std::string& path);
CaeModel read_cae_checkpoint(const std::string& path);

void write_model_checkpoint(const DnmfcModel& model, const std::string& path);
void write_model_checkpoint(const DcecModel& model, const std::string& path);
ModelKind peek_checkpoint_kind(const std::string& path);
DnmfcModel read_dnmfc_checkpoint(const std::string& path);
DcecModel read_dcec_checkpoint(const std::string& path);

json report_to_json(const metrics::MetricsReport& report);
void write_report(const metrics::MetricsReport& report, const std::string& path);

json cohort_spec_to_json(const synth::CohortSpec& spec);
synth::CohortSpec cohort_spec_from_json(const json& j);

struct CohortPaths {
  std::string streamlines, mask, truth;
  std::string subject_id;
};

// Writes all subject files plus cohort.json into dir; returns the manifest.
json write_cohort(const synth::CohortSpec& spec, const std::vector<synth::Subject>& subjects,
                  const std::string& dir);
std::vector<CohortPaths> read_cohort_manifest(const std::string& manifest_path,
                                              synth::CohortSpec* spec = nullptr);

}  // namespace dnmfc::io
