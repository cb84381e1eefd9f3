#include "reldiag/agreement.hpp"

#include <json.hpp>

#include "reldiag/errors.hpp"

namespace reldiag {

ConfusionCounts confusion_counts(const PairedLabelSet& paired) {
  if (paired.pairs.empty()) throw DomainError("confusion_counts requires at least one pair");
  ConfusionCounts cc;
  for (const auto& pair : paired.pairs) {
    const bool a_rel = pair.label_a == Label::Relevant;
    const bool b_rel = pair.label_b == Label::Relevant;
    if (a_rel && b_rel) ++cc.both_relevant;
    else if (a_rel) ++cc.a_only_relevant;
    else if (b_rel) ++cc.b_only_relevant;
    else ++cc.both_nonrelevant;
  }
  return cc;
}

double raw_agreement(const ConfusionCounts& cc) {
  const auto total = cc.total();
  if (total <= 0) throw DomainError("raw_agreement requires a positive pair count");
  return static_cast<double>(cc.both_relevant + cc.both_nonrelevant) /
         static_cast<double>(total);
}

std::optional<double> cohens_kappa(const ConfusionCounts& cc) {
  const auto total = cc.total();
  if (total <= 0) throw DomainError("cohens_kappa requires a positive pair count");
  const double n = static_cast<double>(total);
  const double p_o = raw_agreement(cc);
  const double a_rel = static_cast<double>(cc.both_relevant + cc.a_only_relevant) / n;
  const double b_rel = static_cast<double>(cc.both_relevant + cc.b_only_relevant) / n;
  const double p_e = a_rel * b_rel + (1.0 - a_rel) * (1.0 - b_rel);
  if (p_e >= 1.0) return std::nullopt;
  return (p_o - p_e) / (1.0 - p_e);
}

QuadrantPartition partition_quadrants(const PairedLabelSet& paired) {
  QuadrantPartition quads;
  for (const auto& pair : paired.pairs) {
    PairKey key{pair.doc_id, pair.topic};
    const bool a_rel = pair.label_a == Label::Relevant;
    const bool b_rel = pair.label_b == Label::Relevant;
    if (a_rel && b_rel) quads.both_relevant.push_back(std::move(key));
    else if (a_rel) quads.a_only.push_back(std::move(key));
    else if (b_rel) quads.b_only.push_back(std::move(key));
    else quads.both_nonrelevant.push_back(std::move(key));
  }
  return quads;
}

AgreementReport agreement_report(const PairedLabelSet& paired) {
  AgreementReport report;
  report.counts = confusion_counts(paired);
  report.n_pairs = report.counts.total();
  report.raw_agreement = raw_agreement(report.counts);
  report.kappa = cohens_kappa(report.counts);
  const double n = static_cast<double>(report.n_pairs);
  report.frac_both_relevant = static_cast<double>(report.counts.both_relevant) / n;
  report.frac_both_nonrelevant = static_cast<double>(report.counts.both_nonrelevant) / n;
  report.frac_a_only = static_cast<double>(report.counts.a_only_relevant) / n;
  report.frac_b_only = static_cast<double>(report.counts.b_only_relevant) / n;
  return report;
}

std::string agreement_report_to_json(const AgreementReport& report) {
  nlohmann::ordered_json j;
  j["n_pairs"] = report.n_pairs;
  j["counts"]["both_relevant"] = report.counts.both_relevant;
  j["counts"]["a_only_relevant"] = report.counts.a_only_relevant;
  j["counts"]["b_only_relevant"] = report.counts.b_only_relevant;
  j["counts"]["both_nonrelevant"] = report.counts.both_nonrelevant;
  j["raw_agreement"] = report.raw_agreement;
  j["kappa"] = report.kappa ? nlohmann::ordered_json(*report.kappa)
                            : nlohmann::ordered_json(nullptr);
  j["kappa_defined"] = report.kappa.has_value();
  j["fractions"]["both_relevant"] = report.frac_both_relevant;
  j["fractions"]["both_nonrelevant"] = report.frac_both_nonrelevant;
  j["fractions"]["a_only"] = report.frac_a_only;
  j["fractions"]["b_only"] = report.frac_b_only;
  return j.dump(2) + "\n";
}

}  // namespace reldiag
