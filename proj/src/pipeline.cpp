#include "remn/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include <Eigen/QR>

namespace remn {

namespace {

constexpr Index kPatchFeatures = 5;

void require_divisible(Index height, Index width, const char* what) {
  if (height < kStride || width < kStride || height % kStride != 0 || width % kStride != 0) {
    throw ArgumentError(std::string(what) + ": frame size " + std::to_string(height) + "x" + std::to_string(width) +
                        " must be a positive multiple of 16");
  }
}

RowMatrix<Real> uniform_matrix(Rng& rng, Index rows, Index cols, double bound) {
  RowMatrix<Real> m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-bound, bound);
  return m;
}

}  // namespace

void PipelineConfig::validate() const {
  if (key_channels < 1) throw ArgumentError("pipeline.key_channels must be >= 1");
  if (value_channels < 1) throw ArgumentError("pipeline.value_channels must be >= 1");
  if (max_objects < 1 || max_objects > 255) throw ArgumentError("pipeline.max_objects must lie in [1, 255]");
  if (frm.kernel_height < 1 || frm.kernel_width < 1 || frm.kernel_height % 2 == 0 || frm.kernel_width % 2 == 0) {
    throw ArgumentError("frm.kernel extents must be odd and >= 1");
  }
  sampling.config.validate();
  if (sampling.interval < 1) throw ArgumentError("asm.interval must be >= 1");
  rrm::validate_capacity(rrm.capacity, rrm.policies);
  if (rrm.hidden < 1) throw ArgumentError("rrm.hidden must be >= 1");
  if (!std::isfinite(encoder.color_gain) || !std::isfinite(encoder.position_gain)) {
    throw ArgumentError("encoder gains must be finite");
  }
  if (!(encoder.key_norm > 0.0) || !std::isfinite(encoder.key_norm)) {
    throw ArgumentError("encoder.key_norm must be positive and finite");
  }
  if (!(decoder.threshold > 0.0 && decoder.threshold < 1.0)) throw ArgumentError("decoder.threshold must lie in (0, 1)");
}

Model Model::build(const PipelineConfig& cfg) {
  cfg.validate();
  Model m;
  Rng key_rng(mix_seed(cfg.seed, 100));
  // Entry variance 1/C keeps squared feature distances roughly unchanged.
  m.key_projection = uniform_matrix(key_rng, cfg.key_channels, kPatchFeatures + 1,
                                    std::sqrt(3.0 / static_cast<double>(cfg.key_channels)));
  Rng value_rng(mix_seed(cfg.seed, 200));
  m.value_projection = uniform_matrix(value_rng, cfg.value_channels, kPatchFeatures + 1,
                                      std::sqrt(3.0 / static_cast<double>(cfg.value_channels)));
  m.value_bias = uniform_matrix(value_rng, cfg.value_channels, 1, 0.1);

  // The decoder row is the left inverse of the value projection restricted to
  // the mask-coverage input, so a stored value decodes to coverage - threshold.
  const RowMatrix<Real> pinv = m.value_projection.completeOrthogonalDecomposition().pseudoInverse();
  m.decoder_weight = pinv.row(kPatchFeatures).transpose();
  m.decoder_bias = -m.decoder_weight.dot(m.value_bias) - cfg.decoder.threshold;

  m.frm = frm::FrmParams<Real>::random(cfg.key_channels, cfg.frm.kernel_height, cfg.frm.kernel_width,
                                       mix_seed(cfg.seed, 300 + cfg.frm.seed), cfg.frm.weight_scale,
                                       cfg.frm.center_bias);
  m.gate = rrm::GateParams<Real>::random(cfg.key_channels, cfg.rrm.hidden, cfg.rrm.policies,
                                         mix_seed(cfg.seed, 400 + cfg.rrm.seed));
  m.compressor = rrm::CompressorParams<Real>::averaging(cfg.rrm.policies);
  return m;
}

FeatureMap patch_features(const Frame& frame, const EncoderSettings& enc) {
  require_divisible(frame.height, frame.width, "patch_features");
  const Index height = frame.height / kStride, width = frame.width / kStride;
  FeatureMap out({height, width, kPatchFeatures});
  const double norm = 1.0 / (255.0 * kStride * kStride);
  for (Index i = 0; i < height; ++i) {
    for (Index j = 0; j < width; ++j) {
      double sum[3] = {0, 0, 0};
      for (Index y = i * kStride; y < (i + 1) * kStride; ++y) {
        for (Index x = j * kStride; x < (j + 1) * kStride; ++x) {
          for (Index c = 0; c < 3; ++c) sum[c] += frame.at(y, x, c);
        }
      }
      for (Index c = 0; c < 3; ++c) out(i, j, c) = enc.color_gain * (sum[c] * norm - 0.5);
      out(i, j, 3) = enc.position_gain * ((static_cast<double>(i) + 0.5) / static_cast<double>(height) - 0.5);
      out(i, j, 4) = enc.position_gain * ((static_cast<double>(j) + 0.5) / static_cast<double>(width) - 0.5);
    }
  }
  return out;
}

FeatureMap mask_coverage(const BinaryMask& mask) {
  require_divisible(mask.rows(), mask.cols(), "mask_coverage");
  const Index height = mask.rows() / kStride, width = mask.cols() / kStride;
  FeatureMap out({height, width, 1});
  for (Index i = 0; i < height; ++i) {
    for (Index j = 0; j < width; ++j) {
      const auto covered = mask.block(i * kStride, j * kStride, kStride, kStride).count();
      out(i, j, 0) = static_cast<double>(covered) / static_cast<double>(kStride * kStride);
    }
  }
  return out;
}

FeatureMap encode_key(const Frame& frame, const Model& model, const PipelineConfig& cfg) {
  const FeatureMap features = patch_features(frame, cfg.encoder);
  const Real norm = cfg.encoder.key_norm;
  RowMatrix<Real> inputs(features.matrix().rows(), kPatchFeatures + 1);
  inputs.leftCols(kPatchFeatures) = features.matrix();
  inputs.col(kPatchFeatures).setConstant(norm);
  FeatureMap key({features.extent(0), features.extent(1), model.key_projection.rows()});
  key.matrix().noalias() = inputs * model.key_projection.transpose();
  key.matrix().rowwise().normalize();
  key.matrix() *= norm;
  return key;
}

FeatureMap encode_value(const Frame& frame, const BinaryMask& object_mask, const Model& model,
                        const PipelineConfig& cfg) {
  if (object_mask.rows() != frame.height || object_mask.cols() != frame.width) {
    throw ArgumentError("encode_value: mask size differs from frame size");
  }
  const FeatureMap features = patch_features(frame, cfg.encoder);
  const FeatureMap coverage = mask_coverage(object_mask);
  const Index height = features.extent(0), width = features.extent(1);
  RowMatrix<Real> inputs(height * width, kPatchFeatures + 1);
  inputs.leftCols(kPatchFeatures) = features.matrix();
  inputs.col(kPatchFeatures) = coverage.matrix().col(0);
  FeatureMap value({height, width, model.value_projection.rows()});
  value.matrix().noalias() = inputs * model.value_projection.transpose();
  value.matrix().rowwise() += model.value_bias.transpose();
  return value;
}

LabelMask decode_mask(const std::vector<FeatureMap>& readouts, const Model& model) {
  if (readouts.empty()) throw ArgumentError("decode_mask: need at least one object readout");
  if (readouts.size() > 255) throw ArgumentError("decode_mask: too many objects");
  const Index height = readouts.front().extent(0), width = readouts.front().extent(1);
  const auto objects = static_cast<Index>(readouts.size());
  FeatureMap scores({height, width, objects});
  for (Index k = 0; k < objects; ++k) {
    const FeatureMap& r = readouts[static_cast<std::size_t>(k)];
    require_rank(r, 3, "decode_mask readout");
    if (r.extent(0) != height || r.extent(1) != width || r.extent(2) != model.decoder_weight.size()) {
      throw ArgumentError("decode_mask: readout shape " + shape_string(r.shape()) + " is inconsistent");
    }
    scores.matrix().col(k) = (r.matrix() * model.decoder_weight).array() + model.decoder_bias;
  }
  const FeatureMap upsampled = bilinear_upsample(scores, kStride);
  const auto up = upsampled.matrix();
  LabelMask mask(height * kStride, width * kStride);
  for (Index px = 0; px < up.rows(); ++px) {
    Real best = 0;
    std::uint8_t label = 0;
    for (Index k = 0; k < objects; ++k) {
      if (up(px, k) > best) {
        best = up(px, k);
        label = static_cast<std::uint8_t>(k + 1);
      }
    }
    mask.data()[px] = label;
  }
  return mask;
}

FeatureMap downsample_foreground(const LabelMask& mask, Index height, Index width) {
  FeatureMap m = resize_mask_nearest<Real>(mask, height, width);
  m.data() = (m.data().array() > 0).cast<Real>();
  return m;
}

Segmenter::Segmenter(PipelineConfig cfg)
    : cfg_(std::move(cfg)),
      model_(Model::build(cfg_)),
      bank_(cfg_.rrm.enabled ? std::optional<Index>(cfg_.rrm.capacity) : std::nullopt) {}

void Segmenter::store(const Frame& frame, const FeatureMap& raw_key, const FeatureMap& key, const LabelMask& mask,
                      FrameResult& result) {
  memory::BankEntry<Real> entry;
  entry.key = cfg_.store_raw_key ? raw_key : key;
  entry.frame_index = next_index_;
  entry.values.reserve(static_cast<std::size_t>(objects_));
  for (Index k = 1; k <= objects_; ++k) {
    entry.values.push_back(encode_value(frame, object_slice(mask, static_cast<int>(k)), model_, cfg_));
  }
  bank_.insert(std::move(entry), mask);
  result.stored = true;
  result.bank_size = bank_.size();

  if (cfg_.rrm.enabled && bank_.size() == cfg_.rrm.capacity) {
    const auto probabilities = rrm::gate_probabilities(rrm::bank_keys(bank_), model_.gate);
    const rrm::TemporalPolicy policy = rrm::select_policy(probabilities);
    Bank compressed = cfg_.rrm.protect_first ? rrm::compress_protect_first(bank_, policy, model_.compressor)
                                             : rrm::compress(bank_, policy, model_.compressor);
    CompressionEvent event{policy, bank_.size(), compressed.size(), rrm::rrm_loss(bank_, compressed)};
    bank_ = std::move(compressed);
    result.policy_applied = policy;
    result.compression = event;
  }
}

FrameResult Segmenter::start(const Frame& frame, const LabelMask& first_mask) {
  if (first_mask.rows() != frame.height || first_mask.cols() != frame.width) {
    throw ArgumentError("segment_video: first mask size differs from frame size");
  }
  require_divisible(frame.height, frame.width, "segment_video");
  objects_ = max_label(first_mask);
  if (objects_ < 1) throw ArgumentError("segment_video: first mask has no object");
  if (objects_ > cfg_.max_objects) {
    throw ArgumentError("segment_video: first mask has " + std::to_string(objects_) + " objects, limit is " +
                        std::to_string(cfg_.max_objects));
  }
  bank_ = Bank(cfg_.rrm.enabled ? std::optional<Index>(cfg_.rrm.capacity) : std::nullopt);
  next_index_ = 0;

  const auto begin = std::chrono::steady_clock::now();
  FrameResult result;
  const FeatureMap raw_key = encode_key(frame, model_, cfg_);
  const FeatureMap key =
      cfg_.frm.enabled
          ? frm::reinforce(raw_key, downsample_foreground(first_mask, raw_key.extent(0), raw_key.extent(1)),
                           model_.frm)
          : raw_key;
  store(frame, raw_key, key, first_mask, result);
  result.mask = first_mask;
  result.bank_size = std::max(result.bank_size, bank_.size());
  result.latency = std::chrono::duration<double>(std::chrono::steady_clock::now() - begin).count();
  previous_mask_ = first_mask;
  ++next_index_;
  return result;
}

FrameResult Segmenter::step(const Frame& frame) {
  if (bank_.empty()) throw StateError("Segmenter: step() before start()");
  if (frame.height != previous_mask_.rows() || frame.width != previous_mask_.cols()) {
    throw ArgumentError("segment_video: frame size changed mid-sequence");
  }
  const auto begin = std::chrono::steady_clock::now();
  FrameResult result;
  const FeatureMap raw_key = encode_key(frame, model_, cfg_);
  const FeatureMap key =
      cfg_.frm.enabled
          ? frm::reinforce(raw_key, downsample_foreground(previous_mask_, raw_key.extent(0), raw_key.extent(1)),
                           model_.frm)
          : raw_key;

  const auto affinity = memory::compute_affinity(bank_, key);
  std::vector<FeatureMap> readouts;
  readouts.reserve(static_cast<std::size_t>(objects_));
  for (Index k = 0; k < objects_; ++k) readouts.push_back(memory::readout(affinity, bank_, k));
  result.mask = decode_mask(readouts, model_);

  const bool store_frame = cfg_.sampling.enabled
                               ? sampling::should_store(result.mask, bank_.latest_mask(), cfg_.sampling.config) ==
                                     sampling::Decision::store
                               : next_index_ % cfg_.sampling.interval == 0;
  if (store_frame) store(frame, raw_key, key, result.mask, result);

  result.bank_size = std::max(result.bank_size, bank_.size());
  result.latency = std::chrono::duration<double>(std::chrono::steady_clock::now() - begin).count();
  previous_mask_ = result.mask;
  ++next_index_;
  return result;
}

std::vector<FrameResult> segment_video(const std::vector<Frame>& frames, const LabelMask& first_mask,
                                       const PipelineConfig& cfg) {
  if (frames.empty()) throw ArgumentError("segment_video: empty frame list");
  Segmenter segmenter(cfg);
  std::vector<FrameResult> results;
  results.reserve(frames.size());
  results.push_back(segmenter.start(frames.front(), first_mask));
  for (std::size_t t = 1; t < frames.size(); ++t) results.push_back(segmenter.step(frames[t]));
  return results;
}

}  // namespace remn
