#pragma once

#include <array>
#include <compare>
#include <filesystem>
#include <string>
#include <vector>

namespace phasecal {

inline constexpr int kNumPhases = 7;
inline constexpr int kNumPairs = kNumPhases - 1;

// One of the seven phases of a laparoscopic cholecystectomy, 1-indexed.
class PhaseLabel {
 public:
  // Throws InvalidArgument outside [1, 7].
  explicit PhaseLabel(int index);

  constexpr int index() const noexcept { return index_; }

  friend constexpr auto operator<=>(PhaseLabel, PhaseLabel) = default;

 private:
  int index_;
};

// Neighboring phase pair (i, i+1). Only the six pairs (1,2) ... (6,7) exist.
class TransitionPair {
 public:
  // Throws InvalidArgument unless 1 <= low <= 6.
  explicit TransitionPair(int low);

  PhaseLabel low() const noexcept { return PhaseLabel(low_); }
  PhaseLabel high() const noexcept { return PhaseLabel(low_ + 1); }

  // Position in [0, 6) for array indexing.
  int slot() const noexcept { return low_ - 1; }

  bool contains(PhaseLabel p) const noexcept {
    return p.index() == low_ || p.index() == low_ + 1;
  }

  // "trans_3_4"
  std::string name() const;

  friend constexpr auto operator<=>(TransitionPair, TransitionPair) = default;

 private:
  int low_;
};

// All six pairs in order.
std::array<TransitionPair, kNumPairs> all_pairs();

// The pair consulted when the current phase estimate is `p`: (p, p+1), or
// (6, 7) for the last phase.
TransitionPair pair_for_phase(PhaseLabel p) noexcept;

struct PhaseTimeline {
  std::string video_id;
  std::vector<PhaseLabel> labels;

  PhaseTimeline(std::string id, std::vector<PhaseLabel> frames);
  // Convenience for integer label vectors; every value is validated.
  PhaseTimeline(std::string id, const std::vector<int>& frames);

  std::size_t size() const noexcept { return labels.size(); }
  std::vector<int> indices() const;
};

struct Boundary {
  std::size_t frame = 0;
  PhaseLabel from;
  PhaseLabel to;

  friend bool operator==(const Boundary&, const Boundary&) = default;
};

// Every frame i with labels[i] != labels[i-1], in order.
std::vector<Boundary> segment_boundaries(const PhaseTimeline& t);

// Timeline text format: header `video_id,frame_idx,phase`, then one line per
// frame. A file may hold several videos; each video's frame_idx runs 0..n-1.
std::vector<PhaseTimeline> load_timelines(const std::filesystem::path& path);
void save_timelines(const std::vector<PhaseTimeline>& timelines,
                    const std::filesystem::path& path);

}  // namespace phasecal
