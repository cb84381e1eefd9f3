#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "reldiag/labels.hpp"

namespace reldiag {

struct ConfusionCounts {
  std::int64_t both_relevant = 0;
  std::int64_t a_only_relevant = 0;
  std::int64_t b_only_relevant = 0;
  std::int64_t both_nonrelevant = 0;

  std::int64_t total() const {
    return both_relevant + a_only_relevant + b_only_relevant + both_nonrelevant;
  }
};

struct AgreementReport {
  ConfusionCounts counts;
  double raw_agreement = 0.0;
  std::optional<double> kappa;  // empty when both raters are constant (chance agreement 1)
  double frac_both_relevant = 0.0;
  double frac_both_nonrelevant = 0.0;
  double frac_a_only = 0.0;
  double frac_b_only = 0.0;
  std::int64_t n_pairs = 0;
};

struct PairKey {
  std::string doc_id;
  std::string topic;
  auto operator<=>(const PairKey&) const = default;
};

// Disjoint doc-key sets covering every pair; a_only/b_only form the disagreement subset.
struct QuadrantPartition {
  std::vector<PairKey> both_relevant;
  std::vector<PairKey> a_only;
  std::vector<PairKey> b_only;
  std::vector<PairKey> both_nonrelevant;
};

ConfusionCounts confusion_counts(const PairedLabelSet& paired);
double raw_agreement(const ConfusionCounts& cc);
std::optional<double> cohens_kappa(const ConfusionCounts& cc);
QuadrantPartition partition_quadrants(const PairedLabelSet& paired);
AgreementReport agreement_report(const PairedLabelSet& paired);

std::string agreement_report_to_json(const AgreementReport& report);

}  // namespace reldiag
