// studies.hpp -- end-to-end runs behind the command-line subcommands.
//
// Randomness flows from one root stream through named children:
//   "simulate"      the observed (original) system
//   "copy"          the independent copy of the modified estimator
//   "companion"     homogeneous companion run of a scan
//   "normalization" Monte Carlo normalization of the CLT statistic
//   "replications"  per-replication streams of the CLT study
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fibrescan/config.hpp"
#include "fibrescan/detection.hpp"
#include "fibrescan/estimation.hpp"
#include "fibrescan/stats.hpp"

namespace fibrescan {

struct DensityCell {
  KernelType kernel{KernelType::Tricube};
  DirectionalModel model;
  std::vector<double> errors;  // one per replication
  double median{0.0};
};

struct DensityReport {
  double bandwidth{0.0};
  std::size_t grid_nodes{0};
  std::vector<DensityCell> cells;
};

/// Every kernel is evaluated on the same realization of each model.
[[nodiscard]] DensityReport run_density(const DensityCommand& cmd, const RandomStream& rng,
                                        std::size_t threads);

struct EntropyRow {
  DirectionalModel model;
  std::optional<double> true_entropy;
  std::vector<EntropyEstimate> estimates;
  double mean{0.0};
  /// Sample variance over replications (1 / (n - 1)); 0 for one replication.
  double variance{0.0};
  std::optional<double> absolute_error;  // |mean - true|
  std::optional<double> mean_square_error;  // mean of (estimate - true)^2
};

struct EntropyReport {
  double bandwidth{0.0};
  std::vector<EntropyRow> rows;
};

[[nodiscard]] EntropyReport run_entropy(const EntropyCommand& cmd, const RandomStream& rng,
                                        std::size_t threads);

struct CltReplicate {
  double estimate{0.0};
  std::size_t copy_count{0};
  double centering{0.0};
  double statistic{0.0};
  std::size_t clamped{0};
};

struct CltReport {
  double bandwidth{0.0};
  CltNormalization normalization;
  std::vector<CltReplicate> replicates;
  SampleSummary summary;
  KsResult ks;
};

/// The original is simulated on B ⊕ B' so that no local window B' + Y* of a
/// copy point in B needs clipping; the copy is simulated on B.
[[nodiscard]] CltReport run_clt(const CltCommand& cmd, const RandomStream& rng,
                                std::size_t threads);

struct ScanReport {
  ScanConfig config;
  std::size_t point_count{0};
  DetectionResult result;
  std::vector<Region> truth;
  std::optional<DetectionQuality> quality;
  std::optional<double> dvol;
  /// Flagged fraction of the homogeneous companion run.
  std::optional<double> false_alarm;
  /// dvol_bound at the measured false-alarm rate; single cubic region only.
  std::optional<double> dvol_bound_value;
};

[[nodiscard]] ScanConfig make_scan_config(const ScanCommand& cmd, std::size_t threads);

/// Scan of given systems; `copy` is required in modified mode.
[[nodiscard]] DetectionResult run_detection(const FibreSystem& system, const FibreSystem* copy,
                                            const ScanConfig& cfg);

[[nodiscard]] ScanReport run_scan(const ScanCommand& cmd, const RandomStream& rng,
                                  std::size_t threads);

// --- report documents ---------------------------------------------------------

[[nodiscard]] Json to_json(const DensityReport& r);
[[nodiscard]] Json to_json(const EntropyReport& r);
/// Summary only; the per-replication values go to the CSV.
[[nodiscard]] Json to_json(const CltReport& r);
[[nodiscard]] Json to_json(const ScanReport& r);

/// replication,estimate,copy_count,centering,statistic
void write_clt_csv(const CltReport& r, std::ostream& out);
/// x,y,z,entropy,valid
void write_field_csv(const ScanField& field, std::ostream& out);

}  // namespace fibrescan
