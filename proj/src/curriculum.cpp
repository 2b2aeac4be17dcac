#include "labelsel/curriculum.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

namespace labelsel {

double entropy(std::span<const double> p) {
  double sum = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (!(p[j] >= 0.0)) throw Error(Errc::NegativeEntry, "probability " + std::to_string(j) + " is negative");
    sum += p[j];
  }
  if (std::abs(sum - 1.0) > kRowSumTolerance) {
    throw Error(Errc::NotNormalized, "probabilities sum to " + std::to_string(sum));
  }
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

OrderedSelection curriculum_order(const PredictionMatrix& preds, const SelectionResult& sel) {
  std::unordered_map<SampleId, std::size_t> row_of;
  row_of.reserve(preds.rows());
  for (std::size_t r = 0; r < preds.rows(); ++r) row_of.emplace(preds.ids()[r], r);

  std::vector<std::pair<double, std::size_t>> keyed;
  keyed.reserve(sel.indices.size());
  for (std::size_t idx : sel.indices) {
    auto it = row_of.find(idx);
    if (it == row_of.end()) {
      throw Error(Errc::MissingPrediction, "no prediction row for selected index " + std::to_string(idx));
    }
    keyed.emplace_back(entropy(preds.row(it->second)), idx);
  }
  std::sort(keyed.begin(), keyed.end());

  OrderedSelection out;
  out.base = sel;
  out.ranking = Ranking::EntropyCurriculum;
  out.scores.emplace();
  for (const auto& [h, idx] : keyed) {
    out.order.push_back(idx);
    out.scores->push_back(h);
  }
  return out;
}

OrderedSelection random_order(const SelectionResult& sel, Seed seed) {
  OrderedSelection out;
  out.base = sel;
  out.ranking = Ranking::Random;
  out.order = sel.indices;
  Rng rng(seed);
  rng.shuffle(out.order);
  return out;
}

std::string_view to_string(Ranking r) noexcept {
  return r == Ranking::EntropyCurriculum ? "entropy-curriculum" : "random";
}

Ranking parse_ranking(std::string_view text) {
  if (text == "entropy-curriculum" || text == "curriculum") return Ranking::EntropyCurriculum;
  if (text == "random") return Ranking::Random;
  throw Error(Errc::InvalidParams, "unknown ranking '" + std::string(text) + "'");
}

}  // namespace labelsel
