#include "remn/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "remn/random.hpp"

namespace remn::synth {

namespace {

using Rgb = std::array<std::uint8_t, 3>;

constexpr std::array<Rgb, 4> kPalette = {{{220, 40, 40}, {40, 190, 70}, {50, 80, 220}, {230, 200, 30}}};

struct Box {
  Index y0, x0, y1, x1;  // inclusive lower, exclusive upper
};

// Top-left corner of a square of side `side` walking between random
// waypoints inside [lo, hi] (corner coordinates), pausing at each waypoint.
class Walker {
 public:
  Walker(Rng& rng, Box corners, Index max_dwell) : rng_(rng), corners_(corners), max_dwell_(max_dwell) {
    y_ = static_cast<double>(rng_.integer(corners_.y0, corners_.y1));
    x_ = static_cast<double>(rng_.integer(corners_.x0, corners_.x1));
    retarget();
  }

  Index y() const { return static_cast<Index>(std::lround(y_)); }
  Index x() const { return static_cast<Index>(std::lround(x_)); }

  void advance() {
    if (dwell_ > 0) {
      --dwell_;
      return;
    }
    const double dy = ty_ - y_, dx = tx_ - x_;
    const double dist = std::hypot(dy, dx);
    if (dist <= speed_) {
      y_ = ty_;
      x_ = tx_;
      dwell_ = rng_.integer(0, max_dwell_);
      retarget();
    } else {
      y_ += speed_ * dy / dist;
      x_ += speed_ * dx / dist;
    }
  }

 private:
  void retarget() {
    ty_ = static_cast<double>(rng_.integer(corners_.y0, corners_.y1));
    tx_ = static_cast<double>(rng_.integer(corners_.x0, corners_.x1));
    speed_ = rng_.uniform(1.0, 3.0);
  }

  Rng& rng_;
  Box corners_;
  Index max_dwell_;
  double y_ = 0, x_ = 0, ty_ = 0, tx_ = 0, speed_ = 1;
  Index dwell_ = 0;
};

Frame textured_background(Index height, Index width, Rng& rng) {
  Frame frame(height, width);
  const double gy = rng.uniform(-12, 12), gx = rng.uniform(-12, 12);
  for (Index y = 0; y < height; ++y) {
    for (Index x = 0; x < width; ++x) {
      const double ramp = gy * (static_cast<double>(y) / static_cast<double>(height) - 0.5) +
                          gx * (static_cast<double>(x) / static_cast<double>(width) - 0.5);
      for (Index c = 0; c < 3; ++c) {
        const double v = 128.0 + ramp + static_cast<double>(rng.integer(-24, 24));
        frame.at(y, x, c) = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
      }
    }
  }
  return frame;
}

void paint_square(Frame& frame, LabelMask* mask, Index y, Index x, Index side, const Rgb& color,
                  std::uint8_t label) {
  const Index y1 = std::min(frame.height, y + side), x1 = std::min(frame.width, x + side);
  for (Index yy = std::max<Index>(0, y); yy < y1; ++yy) {
    for (Index xx = std::max<Index>(0, x); xx < x1; ++xx) {
      for (Index c = 0; c < 3; ++c) frame.at(yy, xx, c) = color[static_cast<std::size_t>(c)];
      if (mask) (*mask)(yy, xx) = label;
    }
  }
}

LabelMask empty_mask(Index height, Index width) { return LabelMask::Zero(height, width); }

SyntheticVideo plain_video(const ScenarioSpec& spec, Index frames) {
  Rng rng(mix_seed(spec.seed, 1));
  const Frame background = textured_background(spec.height, spec.width, rng);
  const Rgb color = kPalette[static_cast<std::size_t>(rng.integer(0, kPalette.size() - 1))];
  const Index side = std::max<Index>(1, (3 * std::min(spec.height, spec.width)) / 8);
  Walker walker(rng, {0, 0, spec.height - side, spec.width - side}, 20);
  SyntheticVideo video;
  for (Index t = 0; t < frames; ++t) {
    Frame frame = background;
    LabelMask mask = empty_mask(spec.height, spec.width);
    paint_square(frame, &mask, walker.y(), walker.x(), side, color, 1);
    video.frames.push_back(std::move(frame));
    video.masks.push_back(std::move(mask));
    walker.advance();
  }
  return video;
}

SyntheticVideo distractor_video(const ScenarioSpec& spec) {
  Rng rng(mix_seed(spec.seed, 2));
  const Frame background = textured_background(spec.height, spec.width, rng);
  const Rgb color = kPalette[static_cast<std::size_t>(rng.integer(0, kPalette.size() - 1))];
  const Index half = spec.width / 2;
  const Index side = std::max<Index>(1, (5 * std::min(spec.height, half)) / 8);
  // Target corners keep the square inside [0, half); distractor inside [half, W).
  Walker target(rng, {0, 0, spec.height - side, half - side}, 20);
  Walker distractor(rng, {0, half, spec.height - side, spec.width - side}, 20);
  SyntheticVideo video;
  for (Index t = 0; t < spec.frames; ++t) {
    Frame frame = background;
    LabelMask mask = empty_mask(spec.height, spec.width);
    paint_square(frame, nullptr, distractor.y(), distractor.x(), side, color, 0);
    paint_square(frame, &mask, target.y(), target.x(), side, color, 1);
    video.frames.push_back(std::move(frame));
    video.masks.push_back(std::move(mask));
    target.advance();
    distractor.advance();
  }
  return video;
}

SyntheticVideo deform_video(const ScenarioSpec& spec) {
  Rng rng(mix_seed(spec.seed, 3));
  const Frame background = textured_background(spec.height, spec.width, rng);
  const Rgb color = kPalette[static_cast<std::size_t>(rng.integer(0, kPalette.size() - 1))];
  const double base = 0.375 * static_cast<double>(std::min(spec.height, spec.width));
  const double period = rng.uniform(20.0, 40.0);
  const double drift_period = period * rng.uniform(4.0, 6.0);
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  SyntheticVideo video;
  for (Index t = 0; t < spec.frames; ++t) {
    const double tt = static_cast<double>(t);
    const auto side = static_cast<Index>(
        std::lround(base * (1.0 + 0.3 * std::sin(2.0 * std::numbers::pi * tt / period + phase))));
    const double cy = 0.5 * static_cast<double>(spec.height) +
                      0.1 * static_cast<double>(spec.height) * std::sin(2.0 * std::numbers::pi * tt / drift_period);
    const double cx = 0.5 * static_cast<double>(spec.width) +
                      0.1 * static_cast<double>(spec.width) * std::cos(2.0 * std::numbers::pi * tt / drift_period);
    Frame frame = background;
    LabelMask mask = empty_mask(spec.height, spec.width);
    paint_square(frame, &mask, static_cast<Index>(std::lround(cy)) - side / 2,
                 static_cast<Index>(std::lround(cx)) - side / 2, std::max<Index>(1, side), color, 1);
    video.frames.push_back(std::move(frame));
    video.masks.push_back(std::move(mask));
  }
  return video;
}

}  // namespace

ScenarioKind parse_scenario(const std::string& name) {
  if (name == "plain") return ScenarioKind::plain;
  if (name == "distractor") return ScenarioKind::distractor;
  if (name == "deform") return ScenarioKind::deform;
  if (name == "long") return ScenarioKind::long_video;
  throw ArgumentError("unknown scenario '" + name + "' (plain, distractor, deform, long)");
}

std::string scenario_name(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::plain: return "plain";
    case ScenarioKind::distractor: return "distractor";
    case ScenarioKind::deform: return "deform";
    case ScenarioKind::long_video: return "long";
  }
  return "plain";
}

void ScenarioSpec::validate() const {
  if (frames < 1) throw ArgumentError("scenario frames must be >= 1");
  if (height < kStride || width < kStride || height % kStride != 0 || width % kStride != 0) {
    throw ArgumentError("scenario size must be a positive multiple of 16 in both extents");
  }
  if (replay_factor < 1) throw ArgumentError("scenario replay factor must be >= 1");
  if (kind == ScenarioKind::distractor && width < 2 * kStride) {
    throw ArgumentError("distractor scenario needs width >= 32");
  }
}

SyntheticVideo generate_synthetic_video(const ScenarioSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case ScenarioKind::plain: return plain_video(spec, spec.frames);
    case ScenarioKind::distractor: return distractor_video(spec);
    case ScenarioKind::deform: return deform_video(spec);
    case ScenarioKind::long_video: {
      const SyntheticVideo once = plain_video(spec, spec.frames);
      SyntheticVideo video;
      for (Index r = 0; r < spec.replay_factor; ++r) {
        video.frames.insert(video.frames.end(), once.frames.begin(), once.frames.end());
        video.masks.insert(video.masks.end(), once.masks.begin(), once.masks.end());
      }
      return video;
    }
  }
  throw ArgumentError("unknown scenario");
}

}  // namespace remn::synth
