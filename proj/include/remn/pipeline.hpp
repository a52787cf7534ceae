#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "remn/frm.hpp"
#include "remn/masks.hpp"
#include "remn/memory.hpp"
#include "remn/rrm.hpp"
#include "remn/sampling.hpp"
#include "remn/tensor.hpp"

namespace remn {

using Real = double;
using FeatureMap = DenseArray<Real>;
using Bank = memory::MemoryBank<Real>;

/// Features live at 1/16 of the input resolution.
inline constexpr Index kStride = 16;

/// 8-bit interleaved RGB image.
struct Frame {
  Index height = 0;
  Index width = 0;
  std::vector<std::uint8_t> rgb;

  Frame() = default;
  Frame(Index h, Index w) : height(h), width(w), rgb(static_cast<std::size_t>(h * w * 3), 0) {}

  std::uint8_t& at(Index y, Index x, Index c) { return rgb[static_cast<std::size_t>((y * width + x) * 3 + c)]; }
  std::uint8_t at(Index y, Index x, Index c) const { return rgb[static_cast<std::size_t>((y * width + x) * 3 + c)]; }
  bool operator==(const Frame&) const = default;
};

struct FrmSettings {
  bool enabled = true;
  Index kernel_height = 3;
  Index kernel_width = 3;
  std::uint64_t seed = 1;
  double weight_scale = 0.1;
  double center_bias = 6.0;
};

struct SamplingSettings {
  bool enabled = true;
  sampling::SamplingConfig config;
  Index interval = 5;  // fixed-interval fallback when disabled
};

struct RrmSettings {
  bool enabled = true;
  Index capacity = 8;
  Index policies = 2;
  Index hidden = 8;
  std::uint64_t seed = 2;
  bool protect_first = false;
};

struct EncoderSettings {
  double color_gain = 16.0;
  double position_gain = 8.0;
  // Keys are projected from the features plus this constant, then rescaled to
  // this norm. Equal-norm keys make a scaled query a softer match of the same
  // memory locations instead of a match of different ones.
  double key_norm = 8.0;
};

struct DecoderSettings {
  // A pixel is labelled when its interpolated mask coverage exceeds this.
  double threshold = 0.5;
};

struct PipelineConfig {
  Index key_channels = 16;
  Index value_channels = 32;
  std::uint64_t seed = 0;
  Index max_objects = 3;
  bool store_raw_key = true;
  FrmSettings frm;
  SamplingSettings sampling;
  RrmSettings rrm;
  EncoderSettings encoder;
  DecoderSettings decoder;

  void validate() const;
};

/// Every fixed parameter of the toy network, drawn from the config seeds.
struct Model {
  RowMatrix<Real> key_projection;    // Ck x 6
  RowMatrix<Real> value_projection;  // Cv x 6
  Vector<Real> value_bias;           // Cv
  Vector<Real> decoder_weight;       // Cv
  Real decoder_bias = 0;
  frm::FrmParams<Real> frm;
  rrm::GateParams<Real> gate;
  rrm::CompressorParams<Real> compressor;

  static Model build(const PipelineConfig& cfg);
};

/// Per-patch statistics H x W x 5: centred mean RGB scaled by color_gain,
/// then centred (row, col) patch position scaled by position_gain.
FeatureMap patch_features(const Frame& frame, const EncoderSettings& enc);

/// Fraction of each 16 x 16 patch covered by the mask, H x W x 1.
FeatureMap mask_coverage(const BinaryMask& mask);

FeatureMap encode_key(const Frame& frame, const Model& model, const PipelineConfig& cfg);
FeatureMap encode_value(const Frame& frame, const BinaryMask& object_mask, const Model& model,
                        const PipelineConfig& cfg);

/// Linear per-object score (bias included), x16 bilinear upsampling, and a
/// per-pixel argmax against a background score of 0. Ties go to background,
/// then to the lower object id.
LabelMask decode_mask(const std::vector<FeatureMap>& readouts, const Model& model);

/// Mask fed to the foreground module: union of all objects, sampled at patch
/// centres and binarised.
FeatureMap downsample_foreground(const LabelMask& mask, Index height, Index width);

struct CompressionEvent {
  rrm::TemporalPolicy policy;
  Index size_before = 0;
  Index size_after = 0;
  Real loss = 0;
};

struct FrameResult {
  LabelMask mask;
  bool stored = false;
  std::optional<rrm::TemporalPolicy> policy_applied;
  std::optional<CompressionEvent> compression;
  double latency = 0.0;  // seconds
  Index bank_size = 0;  // peak occupancy this frame, counted before any compression
};

/// Frame-by-frame driver: frame 0 is stored with its annotation, every later
/// frame is matched against memory, decoded, and possibly stored.
class Segmenter {
 public:
  explicit Segmenter(PipelineConfig cfg);

  FrameResult start(const Frame& frame, const LabelMask& first_mask);
  FrameResult step(const Frame& frame);

  const Bank& bank() const { return bank_; }
  const Model& model() const { return model_; }
  const PipelineConfig& config() const { return cfg_; }
  Index objects() const { return objects_; }

 private:
  void store(const Frame& frame, const FeatureMap& raw_key, const FeatureMap& key, const LabelMask& mask,
             FrameResult& result);

  PipelineConfig cfg_;
  Model model_;
  Bank bank_;
  LabelMask previous_mask_;
  Index objects_ = 0;
  Index next_index_ = 0;
};

std::vector<FrameResult> segment_video(const std::vector<Frame>& frames, const LabelMask& first_mask,
                                       const PipelineConfig& cfg);

}  // namespace remn
