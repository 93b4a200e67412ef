#include "phasecal/logits.hpp"

#include <algorithm>
#include <cmath>

#include "phasecal/error.hpp"
#include "text_io.hpp"

namespace phasecal {

Temperature::Temperature(double value) : value_(value) {
  if (!std::isfinite(value) || value <= 0.0) {
    throw InvalidArgument("temperature must be finite and > 0");
  }
}

namespace {

void check_finite(std::span<const double> z) {
  if (z.empty()) throw InvalidArgument("empty logit vector");
  for (double v : z) {
    if (!std::isfinite(v)) throw InvalidArgument("non-finite logit");
  }
}

}  // namespace

std::vector<double> softmax(std::span<const double> z, Temperature t) {
  check_finite(z);
  const double inv_t = 1.0 / t.value();
  const double zmax = *std::max_element(z.begin(), z.end());
  std::vector<double> out(z.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    out[k] = std::exp((z[k] - zmax) * inv_t);
    sum += out[k];
  }
  for (double& v : out) v /= sum;
  return out;
}

Prediction argmax_confidence(std::span<const double> z, Temperature t) {
  check_finite(z);
  // max_element returns the first maximum, which gives the smallest-index tie-break.
  const auto best = std::max_element(z.begin(), z.end());
  const double inv_t = 1.0 / t.value();
  double sum = 0.0;
  for (double v : z) sum += std::exp((v - *best) * inv_t);
  return {static_cast<int>(best - z.begin()) + 1, 1.0 / sum};
}

LogitSequence::LogitSequence(std::string video_id, int num_classes, std::vector<double> values,
                             std::vector<int> labels)
    : video_id_(std::move(video_id)),
      num_classes_(num_classes),
      values_(std::move(values)),
      labels_(std::move(labels)) {
  if (num_classes_ < 2) throw InvalidArgument("num_classes must be >= 2");
  if (values_.empty() || values_.size() % num_classes_ != 0) {
    throw InvalidArgument("logit sequence '" + video_id_ + "' needs a positive multiple of K values");
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw InvalidArgument("non-finite logit in '" + video_id_ + "'");
  }
  if (!labels_.empty()) {
    if (labels_.size() != num_frames()) throw InvalidArgument("label count differs from frame count");
    for (int l : labels_) {
      if (l < 1 || l > num_classes_) throw InvalidArgument("label outside [1, K]");
    }
  }
}

std::vector<int> LogitSequence::argmax() const {
  std::vector<int> out(num_frames());
  for (std::size_t f = 0; f < out.size(); ++f) {
    const auto r = row(f);
    out[f] = static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin()) + 1;
  }
  return out;
}

LogitSequence LogitSequence::concat(std::span<const LogitSequence> parts, std::string video_id) {
  if (parts.empty()) throw InvalidArgument("nothing to concatenate");
  const int k = parts.front().num_classes();
  bool labelled = true;
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.num_classes() != k) throw InvalidArgument("cannot concatenate sequences with different K");
    labelled = labelled && p.has_labels();
    total += p.values_.size();
  }
  std::vector<double> values;
  values.reserve(total);
  std::vector<int> labels;
  for (const auto& p : parts) {
    values.insert(values.end(), p.values_.begin(), p.values_.end());
    if (labelled) labels.insert(labels.end(), p.labels_.begin(), p.labels_.end());
  }
  return LogitSequence(std::move(video_id), k, std::move(values), std::move(labels));
}

LogitSequence load_logits(const std::filesystem::path& path) {
  const auto lines = detail::read_data_lines(path);
  const std::string p = path.string();
  if (lines.empty()) throw ParseError(p, 0, "missing header");
  const auto header = detail::split_fields(lines[0].text);
  if (header.size() < 5 || header[0] != "video_id" || header[1] != "frame_idx" || header[2] != "label") {
    throw ParseError(p, lines[0].number, "expected header video_id,frame_idx,label,z1,...,zK with K >= 2");
  }
  const int k = static_cast<int>(header.size()) - 3;
  if (lines.size() == 1) throw ParseError(p, 0, "no frames");

  std::string video_id;
  std::vector<double> values;
  values.reserve((lines.size() - 1) * k);
  std::vector<int> labels;
  bool labelled = false;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& line = lines[i];
    const auto f = detail::split_fields(line.text);
    if (static_cast<int>(f.size()) != k + 3) {
      throw ParseError(p, line.number, "expected " + std::to_string(k + 3) + " columns, got " +
                                           std::to_string(f.size()));
    }
    if (i == 1) {
      video_id = std::string(f[0]);
      labelled = f[2] != "-";
    } else if (f[0] != video_id) {
      throw ParseError(p, line.number, "video_id changes within file");
    }
    long long idx = 0;
    if (!detail::parse_int(f[1], idx) || idx != static_cast<long long>(i - 1)) {
      throw ParseError(p, line.number, "frame_idx must count up from 0");
    }
    if (labelled) {
      long long label = 0;
      if (!detail::parse_int(f[2], label) || label < 1 || label > k) {
        throw ParseError(p, line.number, "label must be an integer in [1, K] or '-' throughout");
      }
      labels.push_back(static_cast<int>(label));
    } else if (f[2] != "-") {
      throw ParseError(p, line.number, "label must be '-' throughout once the first row is unlabelled");
    }
    for (int c = 0; c < k; ++c) {
      double v = 0.0;
      if (!detail::parse_double(f[3 + c], v) || !std::isfinite(v)) {
        throw ParseError(p, line.number, "non-numeric logit in column " + std::to_string(4 + c));
      }
      values.push_back(v);
    }
  }
  return LogitSequence(std::move(video_id), k, std::move(values), std::move(labels));
}

void save_logits(const LogitSequence& seq, const std::filesystem::path& path) {
  auto out = detail::open_for_write(path);
  out << "video_id,frame_idx,label";
  for (int c = 1; c <= seq.num_classes(); ++c) out << ",z" << c;
  out << '\n';
  for (std::size_t f = 0; f < seq.num_frames(); ++f) {
    out << seq.video_id() << ',' << f << ',';
    if (seq.has_labels()) {
      out << seq.labels()[f];
    } else {
      out << '-';
    }
    for (double v : seq.row(f)) out << ',' << detail::format_double(v);
    out << '\n';
  }
  if (!out) throw Error("write failed: " + path.string());
}

TransitionLogitBank::TransitionLogitBank(std::string video_id, std::vector<LogitSequence> entries)
    : video_id_(std::move(video_id)), entries_(std::move(entries)) {
  if (entries_.size() != kNumPairs) throw InvalidArgument("a transition bank needs exactly 6 pairs");
  for (const auto& pair : all_pairs()) {
    const auto& e = entries_[pair.slot()];
    if (e.num_classes() != 2) throw InvalidArgument(pair.name() + " must have K = 2");
    if (e.num_frames() != entries_[0].num_frames()) {
      throw InvalidArgument(pair.name() + " has " + std::to_string(e.num_frames()) +
                            " frames, expected " + std::to_string(entries_[0].num_frames()));
    }
  }
}

PhaseLabel TransitionLogitBank::predict(TransitionPair pair, std::size_t frame) const {
  const auto r = entries_[pair.slot()].row(frame);
  return r[1] > r[0] ? pair.high() : pair.low();
}

std::filesystem::path bank_file(const std::filesystem::path& dir, TransitionPair pair) {
  return dir / (pair.name() + ".csv");
}

TransitionLogitBank load_bank(const std::filesystem::path& dir) {
  std::vector<LogitSequence> entries;
  entries.reserve(kNumPairs);
  for (const auto& pair : all_pairs()) {
    const auto file = bank_file(dir, pair);
    if (!std::filesystem::exists(file)) throw ParseError(file.string(), 0, "missing transition pair file");
    entries.push_back(load_logits(file));
    if (entries.back().num_classes() != 2) throw ParseError(file.string(), 0, "transition file must have K = 2");
  }
  std::string id = entries.front().video_id();
  try {
    return TransitionLogitBank(std::move(id), std::move(entries));
  } catch (const InvalidArgument& e) {
    throw ParseError(dir.string(), 0, e.what());
  }
}

void save_bank(const TransitionLogitBank& bank, const std::filesystem::path& dir) {
  for (const auto& pair : all_pairs()) save_logits(bank.at(pair), bank_file(dir, pair));
}

void DatasetSplit::validate() const {
  auto disjoint = [](const std::set<std::string>& a, const std::set<std::string>& b, const char* what) {
    for (const auto& id : a) {
      if (b.count(id)) throw InvalidArgument(std::string("video '") + id + "' appears in " + what);
    }
  };
  disjoint(train, validation, "train and validation");
  disjoint(train, test, "train and test");
  disjoint(validation, test, "validation and test");
}

DatasetSplit load_split(const std::filesystem::path& path) {
  const auto lines = detail::read_data_lines(path);
  const std::string p = path.string();
  if (lines.empty()) throw ParseError(p, 0, "missing header");
  DatasetSplit split;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = detail::split_fields(lines[i].text);
    if (f.size() != 2) throw ParseError(p, lines[i].number, "expected video_id,split");
    const std::string id(f[0]);
    if (f[1] == "train") {
      split.train.insert(id);
    } else if (f[1] == "validation") {
      split.validation.insert(id);
    } else if (f[1] == "test") {
      split.test.insert(id);
    } else {
      throw ParseError(p, lines[i].number, "unknown split '" + std::string(f[1]) + "'");
    }
  }
  try {
    split.validate();
  } catch (const InvalidArgument& e) {
    throw ParseError(p, 0, e.what());
  }
  return split;
}

void save_split(const DatasetSplit& split, const std::filesystem::path& path) {
  split.validate();
  auto out = detail::open_for_write(path);
  out << "video_id,split\n";
  for (const auto& id : split.train) out << id << ",train\n";
  for (const auto& id : split.validation) out << id << ",validation\n";
  for (const auto& id : split.test) out << id << ",test\n";
}

}  // namespace phasecal
