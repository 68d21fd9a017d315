// Copyright 2026 The svkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "svkit/data_io.h"

#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

namespace svkit {

namespace fs = std::filesystem;

std::size_t DataSource::NumUtterances() const {
  std::size_t n = 0;
  for (const auto& [speaker, utts] : speakers) n += utts.size();
  return n;
}

int DataSource::FeatureDim() const {
  for (const auto& [speaker, utts] : speakers) {
    if (!utts.empty()) return static_cast<int>(utts.front().frames.cols);
  }
  return 0;
}

void TrainState::RecordLoss(double loss) {
  loss_history.push_back(loss);
  while (loss_history.size() > kLossHistorySize) loss_history.pop_front();
}

namespace {

// Little-endian byte buffer helpers.
class ByteWriter {
 public:
  void U16(std::uint16_t v) { Le(v, 2); }
  void U32(std::uint32_t v) { Le(v, 4); }
  void U64(std::uint64_t v) { Le(v, 8); }
  void F32(float v) { U32(std::bit_cast<std::uint32_t>(v)); }
  void F64(double v) { U64(std::bit_cast<std::uint64_t>(v)); }
  void Bytes(const std::string& s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
  const std::vector<char>& buffer() const { return buf_; }

 private:
  void Le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  std::vector<char> buf_;
};

class ByteReader {
 public:
  ByteReader(std::vector<char> data, fs::path path)
      : data_(std::move(data)), path_(std::move(path)) {}

  std::uint16_t U16() { return static_cast<std::uint16_t>(Le(2)); }
  std::uint32_t U32() { return static_cast<std::uint32_t>(Le(4)); }
  std::uint64_t U64() { return Le(8); }
  float F32() { return std::bit_cast<float>(U32()); }
  double F64() { return std::bit_cast<double>(U64()); }
  std::string Bytes(std::size_t n) {
    Need(n);
    std::string s(data_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  void Need(std::size_t n) {
    if (remaining() < n) {
      Throw(ErrorCode::kTruncatedFile, path_.string() + ": unexpected end of file");
    }
  }
  std::uint64_t Le(int n) {
    Need(n);
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += n;
    return v;
  }

  std::vector<char> data_;
  fs::path path_;
  std::size_t pos_ = 0;
};

void WriteFile(const fs::path& path, const std::vector<char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Throw(ErrorCode::kIo, path.string() + ": cannot open for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) Throw(ErrorCode::kIo, path.string() + ": write failed");
}

std::vector<char> ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Throw(ErrorCode::kMissingFile, path.string() + ": cannot open");
  return std::vector<char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void CheckMagic(ByteReader& reader, const std::string& magic, const fs::path& path) {
  if (reader.remaining() < 4 || reader.Bytes(4) != magic) {
    Throw(ErrorCode::kBadMagic, path.string() + ": expected magic " + magic);
  }
}

}  // namespace

void WriteFeatures(const Matrix& frames, const fs::path& path) {
  if (frames.rows < 1 || frames.cols < 1) {
    Throw(ErrorCode::kInvalidArgument, path.string() + ": feature matrix must be non-empty");
  }
  ByteWriter w;
  w.Bytes("SVFE");
  w.U32(kFeatureFormatVersion);
  w.U32(static_cast<std::uint32_t>(frames.rows));
  w.U32(static_cast<std::uint32_t>(frames.cols));
  for (double x : frames.data) w.F32(static_cast<float>(x));
  WriteFile(path, w.buffer());
}

Matrix ReadFeatures(const fs::path& path) {
  ByteReader r(ReadFile(path), path);
  CheckMagic(r, "SVFE", path);
  const std::uint32_t version = r.U32();
  if (version != kFeatureFormatVersion) {
    Throw(ErrorCode::kBadVersion, path.string() + ": unsupported feature version " +
                                      std::to_string(version));
  }
  const std::uint32_t t = r.U32();
  const std::uint32_t d = r.U32();
  const std::uint64_t count = static_cast<std::uint64_t>(t) * d;
  if (r.remaining() < count * 4) {
    Throw(ErrorCode::kTruncatedFile, path.string() + ": header declares " +
                                         std::to_string(count) + " floats, file holds " +
                                         std::to_string(r.remaining() / 4));
  }
  Matrix frames(t, d);
  for (double& x : frames.data) x = r.F32();
  return frames;
}

Manifest ReadManifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) Throw(ErrorCode::kMissingFile, path.string() + ": cannot open manifest");
  Manifest manifest;
  manifest.path = path;
  const fs::path base = fs::absolute(path).parent_path();
  std::set<std::pair<std::string, std::string>> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == line.size()) {
      Throw(ErrorCode::kMalformedLine,
            path.string() + ":" + std::to_string(line_no) + ": expected speaker_id<TAB>path");
    }
    const std::string speaker = line.substr(0, tab);
    const std::string rel = line.substr(tab + 1);
    if (!seen.emplace(speaker, rel).second) {
      manifest.warnings.push_back(path.string() + ":" + std::to_string(line_no) +
                                  ": duplicate record for " + speaker + " " + rel + " ignored");
      continue;
    }
    const fs::path resolved = fs::path(rel).is_absolute() ? fs::path(rel) : base / rel;
    if (!fs::exists(resolved)) {
      Throw(ErrorCode::kMissingFile, path.string() + ":" + std::to_string(line_no) + ": " +
                                         resolved.string() + " does not exist");
    }
    manifest.entries.push_back({speaker, rel, resolved});
  }
  return manifest;
}

DataSource LoadSource(const fs::path& manifest_path, double alpha,
                      std::vector<std::string>* warnings) {
  const Manifest manifest = ReadManifest(manifest_path);
  if (warnings != nullptr) {
    warnings->insert(warnings->end(), manifest.warnings.begin(), manifest.warnings.end());
  }
  DataSource source;
  source.id = manifest_path.string();
  source.alpha = alpha;
  int dim = 0;
  for (const ManifestEntry& e : manifest.entries) {
    Utterance utt;
    utt.speaker_id = e.speaker_id;
    utt.frames = ReadFeatures(e.feature_path);
    utt.source_path = e.relative_path;
    if (dim == 0) dim = static_cast<int>(utt.frames.cols);
    if (static_cast<int>(utt.frames.cols) != dim) {
      Throw(ErrorCode::kShapeMismatch, e.feature_path.string() + ": feature dimension " +
                                           std::to_string(utt.frames.cols) + " differs from " +
                                           std::to_string(dim));
    }
    source.speakers[e.speaker_id].push_back(std::move(utt));
  }
  return source;
}

void SynthConfig::Validate() const {
  if (num_speakers < 1 || utts_per_speaker < 1 || dim < 1) {
    Throw(ErrorCode::kInvalidArgument, "synthetic dataset sizes must be >= 1");
  }
  if (min_frames < 1 || min_frames > max_frames) {
    Throw(ErrorCode::kInvalidArgument, "frame range must satisfy 1 <= lo <= hi");
  }
  if (!(speaker_separation > 0.0)) {
    Throw(ErrorCode::kInvalidArgument, "speaker separation must be > 0");
  }
  if (!(within_noise >= 0.0) || !(channel_drift >= 0.0) || !std::isfinite(domain_shift)) {
    Throw(ErrorCode::kInvalidArgument, "noise and drift must be >= 0, shift finite");
  }
}

namespace {

constexpr std::uint64_t kDomainOffsetSeed = 0x5eedd0a1;

std::string SpeakerName(const SynthConfig& config, int s) {
  std::ostringstream os;
  os << config.speaker_prefix << std::setw(4) << std::setfill('0') << s;
  return os.str();
}

std::string UtteranceName(int u) {
  std::ostringstream os;
  os << "utt" << std::setw(4) << std::setfill('0') << u << ".svfe";
  return os.str();
}

}  // namespace

SyntheticDataset GenerateSynthetic(const SynthConfig& config) {
  config.Validate();
  const std::size_t dim = config.dim;
  Vec domain_offset(dim, 0.0);
  if (config.domain_shift != 0.0) {
    Rng offset_rng(kDomainOffsetSeed);
    std::normal_distribution<double> unit(0.0, 1.0);
    for (double& x : domain_offset) x = config.domain_shift * unit(offset_rng);
  }

  Rng rng(config.seed);
  std::normal_distribution<double> between(0.0, config.speaker_separation);
  SyntheticDataset out;
  for (int s = 0; s < config.num_speakers; ++s) {
    Vec proto(dim);
    for (std::size_t d = 0; d < dim; ++d) proto[d] = between(rng) + domain_offset[d];
    out.prototypes.push_back(std::move(proto));
  }

  // A zero standard deviation is not a valid normal_distribution parameter.
  auto draw = [&rng](double sigma) {
    if (sigma == 0.0) return 0.0;
    return std::normal_distribution<double>(0.0, sigma)(rng);
  };
  std::uniform_int_distribution<int> length(config.min_frames, config.max_frames);
  out.source.id = "synthetic";
  for (int s = 0; s < config.num_speakers; ++s) {
    const std::string speaker = SpeakerName(config, s);
    auto& utts = out.source.speakers[speaker];
    for (int u = 0; u < config.utts_per_speaker; ++u) {
      const int frames = length(rng);
      Vec channel(dim);
      for (double& x : channel) x = draw(config.channel_drift);
      Utterance utt;
      utt.speaker_id = speaker;
      utt.source_path = speaker + "/" + UtteranceName(u);
      utt.frames = Matrix(frames, dim);
      for (int t = 0; t < frames; ++t) {
        for (std::size_t d = 0; d < dim; ++d) {
          const double x = out.prototypes[s][d] + channel[d] + draw(config.within_noise);
          utt.frames(t, d) = static_cast<double>(static_cast<float>(x));
        }
      }
      utts.push_back(std::move(utt));
    }
  }
  return out;
}

fs::path WriteSyntheticDataset(const SynthConfig& config, const fs::path& out_dir) {
  const SyntheticDataset data = GenerateSynthetic(config);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) Throw(ErrorCode::kIo, out_dir.string() + ": " + ec.message());
  const fs::path manifest_path = out_dir / "manifest.tsv";
  std::ofstream manifest(manifest_path, std::ios::trunc);
  if (!manifest) Throw(ErrorCode::kIo, manifest_path.string() + ": cannot open for writing");
  manifest << "# speaker_id\tfeature_path\n";
  for (const auto& [speaker, utts] : data.source.speakers) {
    fs::create_directories(out_dir / speaker, ec);
    if (ec) Throw(ErrorCode::kIo, (out_dir / speaker).string() + ": " + ec.message());
    for (const Utterance& utt : utts) {
      WriteFeatures(utt.frames, out_dir / utt.source_path);
      manifest << speaker << '\t' << utt.source_path << '\n';
    }
  }
  if (!manifest) Throw(ErrorCode::kIo, manifest_path.string() + ": write failed");
  return manifest_path;
}

namespace {

// Expected (rows, cols) of each encoder array.
std::map<std::string, std::pair<std::size_t, std::size_t>> ExpectedShapes(
    const EncoderConfig& c) {
  const std::size_t d = c.input_dim, h = c.hidden_dim, e = c.output_dim;
  if (c.arch == EncoderArch::kMeanLinear) {
    return {{"W1", {h, d}}, {"b1", {h, 1}}, {"W2", {e, h}}, {"b2", {e, 1}}};
  }
  return {{"Wx", {h, d}}, {"Wh", {h, h}}, {"bh", {h, 1}}, {"Wp", {e, h}}, {"bp", {e, 1}}};
}

}  // namespace

void SaveCheckpoint(const TrainState& state, const fs::path& path) {
  const EncoderConfig& c = state.params.config;
  std::vector<std::pair<std::string, std::vector<double>>> sections;
  sections.push_back({kSectionEncoderConfig,
                      {static_cast<double>(c.arch == EncoderArch::kMeanLinear ? 0 : 1),
                       static_cast<double>(c.input_dim), static_cast<double>(c.hidden_dim),
                       static_cast<double>(c.output_dim)}});
  for (const auto& [name, m] : state.params.arrays.arrays) {
    sections.push_back({kEncoderSectionPrefix + name, m.data});
  }
  sections.push_back({kSectionScaleW, {state.scale.w}});
  sections.push_back({kSectionScaleB, {state.scale.b}});
  sections.push_back({kSectionStep, {static_cast<double>(state.step)}});
  sections.push_back({kSectionRng,
                      {static_cast<double>(state.seed & 0xffffffffu),
                       static_cast<double>(state.seed >> 32)}});

  ByteWriter w;
  w.Bytes("SVCK");
  w.U32(kCheckpointFormatVersion);
  w.U32(static_cast<std::uint32_t>(sections.size()));
  for (const auto& [name, values] : sections) {
    w.U16(static_cast<std::uint16_t>(name.size()));
    w.Bytes(name);
    w.U64(values.size());
    for (double v : values) w.F64(v);
  }
  WriteFile(path, w.buffer());
}

TrainState LoadCheckpoint(const fs::path& path) {
  ByteReader r(ReadFile(path), path);
  CheckMagic(r, "SVCK", path);
  const std::uint32_t version = r.U32();
  if (version != kCheckpointFormatVersion) {
    Throw(ErrorCode::kBadVersion, path.string() + ": unsupported checkpoint version " +
                                      std::to_string(version));
  }
  const std::uint32_t count = r.U32();
  std::map<std::string, std::vector<double>> sections;
  for (std::uint32_t s = 0; s < count; ++s) {
    const std::string name = r.Bytes(r.U16());
    const std::uint64_t n = r.U64();
    if (r.remaining() < n * 8) {
      Throw(ErrorCode::kTruncatedFile, path.string() + ": section " + name + " is truncated");
    }
    std::vector<double> values(n);
    for (double& v : values) v = r.F64();
    sections[name] = std::move(values);
  }

  auto require = [&](const std::string& name, std::size_t n) -> const std::vector<double>& {
    auto it = sections.find(name);
    if (it == sections.end()) {
      Throw(ErrorCode::kMissingSection, path.string() + ": missing section " + name);
    }
    if (it->second.size() != n) {
      Throw(ErrorCode::kShapeMismatch, path.string() + ": section " + name + " has " +
                                           std::to_string(it->second.size()) +
                                           " elements, expected " + std::to_string(n));
    }
    return it->second;
  };

  TrainState state;
  const auto& cfg = require(kSectionEncoderConfig, 4);
  EncoderConfig& c = state.params.config;
  c.arch = cfg[0] == 0.0 ? EncoderArch::kMeanLinear : EncoderArch::kRecurrent;
  c.input_dim = static_cast<int>(cfg[1]);
  c.hidden_dim = static_cast<int>(cfg[2]);
  c.output_dim = static_cast<int>(cfg[3]);
  c.Validate();

  std::set<std::string> known = {kSectionEncoderConfig, kSectionScaleW, kSectionScaleB,
                                 kSectionStep, kSectionRng};
  for (const auto& [name, shape] : ExpectedShapes(c)) {
    const std::string section = kEncoderSectionPrefix + name;
    known.insert(section);
    Matrix m(shape.first, shape.second);
    m.data = require(section, m.size());
    state.params.arrays[name] = std::move(m);
  }
  const std::string head_w = std::string(kEncoderSectionPrefix) + kHeadWeight;
  const std::string head_b = std::string(kEncoderSectionPrefix) + kHeadBias;
  if (sections.count(head_w) > 0 || sections.count(head_b) > 0) {
    known.insert(head_w);
    known.insert(head_b);
    const std::size_t e = c.output_dim;
    const auto it = sections.find(head_w);
    if (it == sections.end() || it->second.size() % e != 0) {
      Throw(ErrorCode::kMissingSection, path.string() + ": incomplete classifier head");
    }
    const std::size_t classes = it->second.size() / e;
    Matrix w(classes, e);
    w.data = it->second;
    Matrix b(classes, 1);
    b.data = require(head_b, classes);
    state.params.arrays[kHeadWeight] = std::move(w);
    state.params.arrays[kHeadBias] = std::move(b);
  }
  for (const auto& [name, values] : sections) {
    if (known.count(name) == 0) {
      Throw(ErrorCode::kUnknownSection, path.string() + ": unknown section " + name);
    }
  }

  state.scale.w = require(kSectionScaleW, 1)[0];
  state.scale.b = require(kSectionScaleB, 1)[0];
  state.step = static_cast<std::int64_t>(require(kSectionStep, 1)[0]);
  const auto& rng = require(kSectionRng, 2);
  state.seed = static_cast<std::uint64_t>(rng[0]) | (static_cast<std::uint64_t>(rng[1]) << 32);
  if (!state.params.arrays.AllFinite()) {
    Throw(ErrorCode::kInvalidArgument, path.string() + ": non-finite parameter values");
  }
  return state;
}

}  // namespace svkit
