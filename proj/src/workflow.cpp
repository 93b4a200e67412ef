#include "phasecal/workflow.hpp"

#include <map>

#include "phasecal/error.hpp"
#include "text_io.hpp"

namespace phasecal {

PhaseLabel::PhaseLabel(int index) : index_(index) {
  if (index < 1 || index > kNumPhases) {
    throw InvalidArgument("phase index " + std::to_string(index) + " outside [1, 7]");
  }
}

TransitionPair::TransitionPair(int low) : low_(low) {
  if (low < 1 || low > kNumPairs) {
    throw InvalidArgument("no transition pair starts at phase " + std::to_string(low));
  }
}

std::string TransitionPair::name() const {
  return "trans_" + std::to_string(low_) + "_" + std::to_string(low_ + 1);
}

std::array<TransitionPair, kNumPairs> all_pairs() {
  return {TransitionPair(1), TransitionPair(2), TransitionPair(3),
          TransitionPair(4), TransitionPair(5), TransitionPair(6)};
}

TransitionPair pair_for_phase(PhaseLabel p) noexcept {
  return TransitionPair(p.index() < kNumPhases ? p.index() : kNumPairs);
}

PhaseTimeline::PhaseTimeline(std::string id, std::vector<PhaseLabel> frames)
    : video_id(std::move(id)), labels(std::move(frames)) {
  if (labels.empty()) throw InvalidArgument("timeline '" + video_id + "' has no frames");
}

namespace {
std::vector<PhaseLabel> to_labels(const std::vector<int>& frames) {
  std::vector<PhaseLabel> out;
  out.reserve(frames.size());
  for (int f : frames) out.emplace_back(f);
  return out;
}
}  // namespace

PhaseTimeline::PhaseTimeline(std::string id, const std::vector<int>& frames)
    : PhaseTimeline(std::move(id), to_labels(frames)) {}

std::vector<int> PhaseTimeline::indices() const {
  std::vector<int> out;
  out.reserve(labels.size());
  for (auto l : labels) out.push_back(l.index());
  return out;
}

std::vector<Boundary> segment_boundaries(const PhaseTimeline& t) {
  std::vector<Boundary> out;
  for (std::size_t i = 1; i < t.labels.size(); ++i) {
    if (t.labels[i] != t.labels[i - 1]) out.push_back({i, t.labels[i - 1], t.labels[i]});
  }
  return out;
}

std::vector<PhaseTimeline> load_timelines(const std::filesystem::path& path) {
  const auto lines = detail::read_data_lines(path);
  const std::string p = path.string();
  if (lines.empty()) throw ParseError(p, 0, "missing header");
  if (detail::split_fields(lines[0].text).size() != 3) {
    throw ParseError(p, lines[0].number, "expected header video_id,frame_idx,phase");
  }

  std::vector<std::string> order;
  std::map<std::string, std::vector<PhaseLabel>> frames;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& line = lines[i];
    const auto f = detail::split_fields(line.text);
    if (f.size() != 3) throw ParseError(p, line.number, "expected 3 columns, got " + std::to_string(f.size()));
    long long idx = 0, phase = 0;
    if (!detail::parse_int(f[1], idx)) throw ParseError(p, line.number, "non-integer frame_idx");
    if (!detail::parse_int(f[2], phase)) throw ParseError(p, line.number, "non-integer phase");
    if (phase < 1 || phase > kNumPhases) throw ParseError(p, line.number, "phase outside [1, 7]");
    const std::string id(f[0]);
    auto [it, inserted] = frames.try_emplace(id);
    if (inserted) order.push_back(id);
    if (idx != static_cast<long long>(it->second.size())) {
      throw ParseError(p, line.number, "frame_idx " + std::to_string(idx) + " out of sequence for video '" + id + "'");
    }
    it->second.emplace_back(static_cast<int>(phase));
  }
  if (order.empty()) throw ParseError(p, 0, "no frames");

  std::vector<PhaseTimeline> out;
  out.reserve(order.size());
  for (const auto& id : order) out.emplace_back(id, std::move(frames.at(id)));
  return out;
}

void save_timelines(const std::vector<PhaseTimeline>& timelines,
                    const std::filesystem::path& path) {
  auto out = detail::open_for_write(path);
  out << "video_id,frame_idx,phase\n";
  for (const auto& t : timelines) {
    for (std::size_t i = 0; i < t.labels.size(); ++i) {
      out << t.video_id << ',' << i << ',' << t.labels[i].index() << '\n';
    }
  }
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace phasecal
