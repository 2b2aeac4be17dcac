#include "labelsel/policy.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>

namespace labelsel {

void validate(const PolicySpec& s) {
  auto fail = [](const std::string& why) { throw Error(Errc::InvalidSpec, why); };
  if (s.e0 > s.ef) fail("e0 must not exceed ef");
  if (s.ef > s.epochs) fail("ef must not exceed the epoch count");
  if (s.n0 > s.n) fail("n0 must not exceed n");
  if (s.m < 1) fail("m must be at least 1");
  if (s.kind == PolicyKind::Naive && s.n0 != s.n) fail("naive policy requires n0 == n");
  if (s.kind == PolicyKind::LateJump && s.ef != s.e0) fail("late-jump policy requires ef == e0");
}

SupervisionSchedule build_schedule(const PolicySpec& spec) {
  validate(spec);
  SupervisionSchedule out;
  out.counts.resize(spec.epochs);
  const std::size_t span = spec.ef - spec.e0;
  const std::size_t gain = spec.n - spec.n0;
  for (std::size_t epoch = 0; epoch < spec.epochs; ++epoch) {
    std::size_t count;
    if (spec.kind == PolicyKind::Naive) {
      count = spec.n;
    } else if (epoch < spec.e0) {
      count = spec.n0;
    } else if (epoch >= spec.ef) {
      count = spec.n;
    } else {
      const std::size_t i = epoch - spec.e0;
      switch (spec.kind) {
        case PolicyKind::Linear:
        case PolicyKind::LateLinear:
          count = spec.n0 + (gain * i) / span;
          break;
        case PolicyKind::Step:
          count = spec.n0 + (gain * i) / (span * spec.m) * spec.m;
          break;
        default:  // late-jump has an empty ramp (ef == e0)
          count = spec.n;
          break;
      }
    }
    out.counts[epoch] = std::clamp(count, spec.n0, spec.n);
  }
  return out;
}

std::size_t active_count(const SupervisionSchedule& s, std::size_t epoch) {
  if (epoch >= s.counts.size()) {
    throw Error(Errc::EpochOutOfRange,
                "epoch " + std::to_string(epoch) + " outside schedule of " + std::to_string(s.counts.size()));
  }
  return s.counts[epoch];
}

std::vector<std::size_t> active_prefix(const OrderedSelection& ord, const SupervisionSchedule& s,
                                       std::size_t epoch) {
  const std::size_t count = active_count(s, epoch);
  if (count > ord.order.size()) {
    throw Error(Errc::ScheduleExceedsSelection, "schedule asks for " + std::to_string(count) +
                                                    " labels but the ordering holds " +
                                                    std::to_string(ord.order.size()));
  }
  return {ord.order.begin(), ord.order.begin() + static_cast<std::ptrdiff_t>(count)};
}

void write_schedule_csv(const SupervisionSchedule& s, const std::filesystem::path& path,
                        std::span<const std::string> comment_lines) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot open " + path.string() + " for writing");
  for (const auto& c : comment_lines) out << "# " << c << '\n';
  out << "epoch,count\n";
  for (std::size_t e = 0; e < s.counts.size(); ++e) out << e << ',' << s.counts[e] << '\n';
  out.flush();
  if (!out) throw Error(Errc::IoFailure, "write failed for " + path.string());
}

SupervisionSchedule read_schedule_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path.string());
  SupervisionSchedule out;
  std::string line;
  bool header = false;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (!header) {
      if (line != "epoch,count") throw Error(Errc::MissingHeader, path.string() + ": expected 'epoch,count'");
      header = true;
      continue;
    }
    ++row;
    const auto comma = line.find(',');
    std::size_t epoch = 0;
    std::size_t count = 0;
    const char* b = line.data();
    const char* e = b + line.size();
    bool ok = comma != std::string::npos;
    if (ok) {
      auto r1 = std::from_chars(b, b + comma, epoch);
      auto r2 = std::from_chars(b + comma + 1, e, count);
      ok = r1.ec == std::errc() && r1.ptr == b + comma && r2.ec == std::errc() && r2.ptr == e;
    }
    if (!ok) throw Error(Errc::ParseFailure, "row " + std::to_string(row) + ": bad schedule row", row);
    if (epoch != out.counts.size()) {
      throw Error(Errc::ParseFailure, "row " + std::to_string(row) + ": epochs must be 0,1,2,...", row);
    }
    out.counts.push_back(count);
  }
  if (!header) throw Error(Errc::MissingHeader, path.string() + ": expected 'epoch,count'");
  return out;
}

std::string_view to_string(PolicyKind k) noexcept {
  switch (k) {
    case PolicyKind::Naive: return "naive";
    case PolicyKind::Linear: return "linear";
    case PolicyKind::Step: return "step";
    case PolicyKind::LateJump: return "late-jump";
    case PolicyKind::LateLinear: return "late-linear";
  }
  return "?";
}

PolicyKind parse_policy_kind(std::string_view text) {
  for (auto k : {PolicyKind::Naive, PolicyKind::Linear, PolicyKind::Step, PolicyKind::LateJump,
                 PolicyKind::LateLinear}) {
    if (text == to_string(k)) return k;
  }
  throw Error(Errc::InvalidSpec, "unknown policy '" + std::string(text) + "'");
}

}  // namespace labelsel
