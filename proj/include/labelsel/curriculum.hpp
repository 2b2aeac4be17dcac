#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "labelsel/ingest.hpp"
#include "labelsel/select.hpp"

namespace labelsel {

enum class Ranking { EntropyCurriculum, Random };

/// A selection plus the fixed order in which its labels are injected.
struct OrderedSelection {
  SelectionResult base;
  std::vector<std::size_t> order;
  Ranking ranking = Ranking::Random;
  /// Entropy (nats) of each entry of `order`, curriculum ranking only.
  std::optional<std::vector<double>> scores;

  friend bool operator==(const OrderedSelection&, const OrderedSelection&) = default;
};

/// Shannon entropy in nats, with 0 ln 0 = 0.
double entropy(std::span<const double> p);

/// Easy-to-hard ordering: ascending entropy of each selected row's
/// prediction, ties by ascending index. Selection indices are matched against
/// prediction ids (EMB1 sources use ids 0..N-1, so position == id).
OrderedSelection curriculum_order(const PredictionMatrix& preds, const SelectionResult& sel);

OrderedSelection random_order(const SelectionResult& sel, Seed seed);

std::string_view to_string(Ranking r) noexcept;
Ranking parse_ranking(std::string_view text);

}  // namespace labelsel
