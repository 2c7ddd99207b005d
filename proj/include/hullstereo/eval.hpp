#pragma once

#include <string>
#include <vector>

#include "hullstereo/image.hpp"
#include "hullstereo/matcher.hpp"

namespace hullstereo {

struct MetricReport {
    double epe_all = 0, epe_noc = 0;
    double gt4_all = 0, d1_all = 0; // percent
    uint64_t count_all = 0;         // GT-valid pixels evaluated
    uint64_t count_noc = 0;         // of those, non-occluded
    uint64_t count_missing = 0;     // GT-valid but prediction invalid
};

// Errors over GT-valid pixels; pixels the prediction leaves invalid count as
// outliers for the rate metrics and are excluded from the EPE means. Outlier
// rule for d1: err > 3 px and err > 5% of GT.
MetricReport compute_metrics(const DisparityMap& pred, const DisparityMap& gt,
                             const ByteImage* occlusion);

void report_save(const std::string& path, const MetricReport& report);

enum class MorphOp { Dilate, Erode };

// Binary morphology with a Euclidean disc: exact via a squared distance
// transform, so radius r means "within distance r", not a box approximation.
ByteImage perturb_mask(const ByteImage& mask, MorphOp op, double radius);

struct AblationRow {
    std::string scene;
    HullMode mode;
    MetricReport report;
};

// Runs match over every scene directory under data_dir (left.pgm, right.pgm,
// gt.pfm, occ.pgm, cameras.json, masks/) once per mode, carving the hull and
// bounds once per scene. Scenes missing inputs are skipped with a warning.
std::vector<AblationRow> ablation_run(const std::string& data_dir,
                                      const std::vector<HullMode>& modes,
                                      const MatchConfig& base_config, int hull_depth = 8);

void ablation_csv(const std::string& path, const std::vector<AblationRow>& rows);

} // namespace hullstereo
