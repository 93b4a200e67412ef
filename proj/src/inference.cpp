#include "phasecal/inference.hpp"

#include <map>

#include "phasecal/error.hpp"
#include "text_io.hpp"

namespace phasecal {

MajorityBuffer::MajorityBuffer(std::size_t capacity, PhaseLabel fill) {
  if (capacity < 1) throw InvalidArgument("buffer capacity must be >= 1");
  slots_.assign(capacity, fill);
  counts_[fill.index() - 1] = capacity;
}

void MajorityBuffer::push(PhaseLabel p) {
  --counts_[slots_[head_].index() - 1];
  slots_[head_] = p;
  ++counts_[p.index() - 1];
  head_ = (head_ + 1) % slots_.size();
}

PhaseLabel MajorityBuffer::majority() const noexcept {
  std::size_t best = 0;
  for (std::size_t k = 1; k < counts_.size(); ++k) {
    if (counts_[k] > counts_[best]) best = k;
  }
  return PhaseLabel(static_cast<int>(best) + 1);
}

PhaseLabel majority(const MajorityBuffer& buf) { return buf.majority(); }

void InferenceConfig::validate() const {
  if (buffer_size < 1) throw InvalidArgument("buffer size must be >= 1");
  if (!(conf_threshold >= 0.0 && conf_threshold <= 1.0)) {
    throw InvalidArgument("confidence threshold must lie in [0, 1]");
  }
}

InferenceResult transition_inference(const TransitionLogitBank& bank, const InferenceConfig& cfg) {
  cfg.validate();
  MajorityBuffer buffer(cfg.buffer_size);
  std::vector<PhaseLabel> out;
  out.reserve(bank.num_frames());
  InferenceTrace trace{bank.video_id(), {}};
  trace.records.reserve(bank.num_frames());

  for (std::size_t f = 0; f < bank.num_frames(); ++f) {
    const PhaseLabel m = buffer.majority();
    const TransitionPair pair = pair_for_phase(m);
    const PhaseLabel pred = bank.predict(pair, f);
    buffer.push(pred);
    out.push_back(pred);
    trace.records.push_back({f, ModelUsed::transition(pair), std::nullopt, m, pred});
  }
  return {PhaseTimeline(bank.video_id(), std::move(out)), std::move(trace)};
}

InferenceResult confidence_inference(const LogitSequence& base, const TransitionLogitBank& bank,
                                     const InferenceConfig& cfg) {
  cfg.validate();
  if (base.num_classes() != kNumPhases) throw InvalidArgument("baseline logits must have K = 7");
  if (base.num_frames() != bank.num_frames()) {
    throw InvalidArgument("baseline has " + std::to_string(base.num_frames()) + " frames, bank has " +
                          std::to_string(bank.num_frames()));
  }

  PhaseLabel last(1);
  std::vector<PhaseLabel> out;
  out.reserve(base.num_frames());
  InferenceTrace trace{base.video_id(), {}};
  trace.records.reserve(base.num_frames());

  for (std::size_t f = 0; f < base.num_frames(); ++f) {
    const auto p = argmax_confidence(base.row(f), cfg.temperature);
    TraceRecord rec{f, ModelUsed::baseline(), p.confidence, last, PhaseLabel(p.class_index)};
    if (!(p.confidence > cfg.conf_threshold)) {
      const TransitionPair pair = pair_for_phase(last);
      rec.model = ModelUsed::transition(pair);
      rec.prediction = bank.predict(pair, f);
    }
    last = rec.prediction;
    out.push_back(rec.prediction);
    trace.records.push_back(rec);
  }
  return {PhaseTimeline(base.video_id(), std::move(out)), std::move(trace)};
}

PhaseTimeline baseline_timeline(const LogitSequence& base) {
  if (base.num_classes() != kNumPhases) throw InvalidArgument("baseline logits must have K = 7");
  return PhaseTimeline(base.video_id(), base.argmax());
}

namespace {

ModelUsed parse_model(std::string_view s) {
  if (s == "baseline") return ModelUsed::baseline();
  for (const auto& pair : all_pairs()) {
    if (s == pair.name()) return ModelUsed::transition(pair);
  }
  throw InvalidArgument("unknown model '" + std::string(s) + "'");
}

}  // namespace

std::vector<InferenceTrace> load_traces(const std::filesystem::path& path) {
  const auto lines = detail::read_data_lines(path);
  const std::string p = path.string();
  if (lines.empty()) throw ParseError(p, 0, "missing header");
  if (detail::split_fields(lines[0].text).size() != 6) {
    throw ParseError(p, lines[0].number, "expected header video_id,frame_idx,model,confidence,context,prediction");
  }
  std::vector<InferenceTrace> out;
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& line = lines[i];
    const auto f = detail::split_fields(line.text);
    if (f.size() != 6) throw ParseError(p, line.number, "expected 6 columns");
    const std::string id(f[0]);
    auto [it, inserted] = index.try_emplace(id, out.size());
    if (inserted) out.push_back({id, {}});
    auto& trace = out[it->second];

    long long frame = 0, context = 0, pred = 0;
    if (!detail::parse_int(f[1], frame) || frame != static_cast<long long>(trace.records.size())) {
      throw ParseError(p, line.number, "frame_idx out of sequence");
    }
    if (!detail::parse_int(f[4], context) || !detail::parse_int(f[5], pred)) {
      throw ParseError(p, line.number, "non-integer phase");
    }
    try {
      TraceRecord rec{static_cast<std::size_t>(frame), parse_model(f[2]), std::nullopt,
                      PhaseLabel(static_cast<int>(context)), PhaseLabel(static_cast<int>(pred))};
      if (!f[3].empty()) {
        double c = 0.0;
        if (!detail::parse_double(f[3], c)) throw InvalidArgument("non-numeric confidence");
        rec.confidence = c;
      }
      trace.records.push_back(rec);
    } catch (const InvalidArgument& e) {
      throw ParseError(p, line.number, e.what());
    }
  }
  if (out.empty()) throw ParseError(p, 0, "no frames");
  return out;
}

void save_traces(const std::vector<InferenceTrace>& traces, const std::filesystem::path& path) {
  auto out = detail::open_for_write(path);
  out << "video_id,frame_idx,model,confidence,context,prediction\n";
  for (const auto& t : traces) {
    for (const auto& r : t.records) {
      out << t.video_id << ',' << r.frame << ',' << r.model.name() << ',';
      if (r.confidence) out << detail::format_double(*r.confidence);
      out << ',' << r.context.index() << ',' << r.prediction.index() << '\n';
    }
  }
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace phasecal
