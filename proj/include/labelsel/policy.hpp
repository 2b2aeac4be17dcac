#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "labelsel/curriculum.hpp"

namespace labelsel {

// Supervision policies:
//   naive        constant n                                   (a)
//   linear       n0 -> n over [e0, ef)                        (b: n0=0, ef=e; c: n0>0, ef<e)
//   step         n0 -> n in chunks of m over [e0, ef)         (d)
//   late-jump    n0 until e0, then n; ef == e0                (e)
//   late-linear  n0 until e0, then linear to n at ef > e0     (f)
enum class PolicyKind { Naive, Linear, Step, LateJump, LateLinear };

struct PolicySpec {
  PolicyKind kind = PolicyKind::Naive;
  std::size_t n = 0;
  std::size_t n0 = 0;
  std::size_t epochs = 0;
  std::size_t e0 = 0;
  std::size_t ef = 0;
  std::size_t m = 1;

  friend bool operator==(const PolicySpec&, const PolicySpec&) = default;
};

struct SupervisionSchedule {
  std::vector<std::size_t> counts;  // counts[epoch] = active labelled count

  friend bool operator==(const SupervisionSchedule&, const SupervisionSchedule&) = default;
};

/// Throws InvalidSpec naming the violated constraint.
void validate(const PolicySpec& spec);

/// Ramp values multiply before flooring, e.g. linear:
///   n_i = n0 + floor((n - n0) * i / (ef - e0)),  i = epoch - e0,
/// so ramps stay visible when n - n0 < ef - e0. This equals the
/// floor-first form whenever (ef - e0) divides (n - n0).
SupervisionSchedule build_schedule(const PolicySpec& spec);

std::size_t active_count(const SupervisionSchedule& s, std::size_t epoch);

std::vector<std::size_t> active_prefix(const OrderedSelection& ord, const SupervisionSchedule& s,
                                       std::size_t epoch);

void write_schedule_csv(const SupervisionSchedule& s, const std::filesystem::path& path,
                        std::span<const std::string> comment_lines = {});
SupervisionSchedule read_schedule_csv(const std::filesystem::path& path);

std::string_view to_string(PolicyKind k) noexcept;
PolicyKind parse_policy_kind(std::string_view text);

}  // namespace labelsel
