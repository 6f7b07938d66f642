#pragma once

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "difflab/io.hpp"
#include "difflab/rng.hpp"

namespace difflab {

inline constexpr int kNumClasses = 2;
inline constexpr int kClassProduct = 0;
inline constexpr int kClassFigure = 1;
inline constexpr int kConditionDim = 6;

// Raw [0,1] background value per class: product = white, figure = light gray.
inline constexpr std::array<double, kNumClasses> kClassBackground = {1.0, 0.8};

// Attribute conditioning: the class plus the subject's color and extent.
struct SynthCondition {
  int class_id = kClassProduct;
  std::array<double, 3> color = {0.0, 0.0, 0.0};  // subject RGB in [0,1]
  double size = 0.5;                              // extent fraction in [0.25, 0.75]

  // one-hot(2) + color(3) + size(1)
  Eigen::Matrix<double, kConditionDim, 1> encode() const {
    Eigen::Matrix<double, kConditionDim, 1> e;
    e << (class_id == 0 ? 1.0 : 0.0), (class_id == 1 ? 1.0 : 0.0), color[0], color[1], color[2],
        size;
    return e;
  }

  static SynthCondition decode(const Eigen::Ref<const Eigen::VectorXd>& e) {
    if (e.size() != kConditionDim) throw std::invalid_argument("condition vector must have 6 entries");
    SynthCondition c;
    c.class_id = e[0] >= e[1] ? 0 : 1;
    c.color = {e[2], e[3], e[4]};
    c.size = e[5];
    return c;
  }

  static SynthCondition sample(Rng& rng, int forced_class = -1) {
    SynthCondition c;
    c.class_id = forced_class >= 0 ? forced_class : static_cast<int>(rng.uniform_int(0, kNumClasses - 1));
    c.color = {rng.uniform(), rng.uniform(), rng.uniform()};
    c.size = rng.uniform(0.25, 0.75);
    return c;
  }
};

// Flattened HWC image in normalized [-1,1] space (raw [0,1] mapped by 2x-1).
struct SynthImage {
  Eigen::VectorXd pixels;
  SynthCondition condition;
};

struct Corpus {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<SynthImage> records;

  long d() const { return static_cast<long>(height) * width * channels; }
  std::array<long, kNumClasses> class_counts() const {
    std::array<long, kNumClasses> counts = {0, 0};
    for (const auto& r : records) counts[static_cast<std::size_t>(r.condition.class_id)]++;
    return counts;
  }
};

inline double raw_to_normalized(double v) { return 2.0 * v - 1.0; }
inline double normalized_to_raw(double v) { return std::clamp(0.5 * (v + 1.0), 0.0, 1.0); }

// Subject extent in pixels. Product: size*H x size*W rectangle. Figure: a
// vertical bar with 3:1 height:width aspect so the class means differ.
inline std::pair<int, int> subject_extent(int class_id, double size, int height, int width) {
  if (class_id == kClassProduct) {
    return {static_cast<int>(std::lround(size * height)), static_cast<int>(std::lround(size * width))};
  }
  const int bar_h = static_cast<int>(std::lround(size * height));
  const int bar_w = std::max(1, static_cast<int>(std::lround(bar_h / 3.0)));
  return {bar_h, bar_w};
}

// Renders the canonical layout: uniform class background with a centered
// solid-color subject, returned in normalized [-1,1] space.
inline SynthImage render_image(const SynthCondition& cond, int height, int width) {
  const int channels = 3;
  SynthImage img;
  img.condition = cond;
  img.pixels.resize(static_cast<long>(height) * width * channels);
  const double bg = kClassBackground[static_cast<std::size_t>(cond.class_id)];
  img.pixels.setConstant(raw_to_normalized(bg));

  const auto [sub_h, sub_w] = subject_extent(cond.class_id, cond.size, height, width);
  const int row0 = (height - sub_h) / 2;
  const int col0 = (width - sub_w) / 2;
  for (int r = row0; r < row0 + sub_h; ++r) {
    for (int c = col0; c < col0 + sub_w; ++c) {
      const long base = (static_cast<long>(r) * width + c) * channels;
      for (int ch = 0; ch < channels; ++ch)
        img.pixels[base + ch] = raw_to_normalized(cond.color[static_cast<std::size_t>(ch)]);
    }
  }
  return img;
}

inline Corpus generate_corpus(std::uint64_t seed, long n_per_class, int height, int width,
                              long max_record_floats = 1L << 22) {
  if (height < 8 || width < 8) throw std::invalid_argument("corpus requires height, width >= 8");
  if (n_per_class < 1) throw std::invalid_argument("corpus requires n_per_class >= 1");
  const long record_floats = kConditionDim + static_cast<long>(height) * width * 3;
  if (record_floats > max_record_floats)
    throw std::invalid_argument("record size " + std::to_string(record_floats) +
                                " floats exceeds the budget of " + std::to_string(max_record_floats));

  Corpus corpus;
  corpus.height = height;
  corpus.width = width;
  corpus.channels = 3;
  corpus.records.reserve(static_cast<std::size_t>(n_per_class) * kNumClasses);
  Rng rng(seed);
  for (int class_id = 0; class_id < kNumClasses; ++class_id) {
    for (long i = 0; i < n_per_class; ++i) {
      SynthCondition cond = SynthCondition::sample(rng, class_id);
      corpus.records.push_back(render_image(cond, height, width));
    }
  }
  return corpus;
}

// Spatial-average statistics: the scalar a.x per image with a = (1/d)*1,
// aggregated with the population (divide-by-N) variance convention.
struct CorpusStats {
  double mu = 0.0;
  double sigma2 = 0.0;
  long count = 0;
  struct ClassStats {
    long count = 0;
    double mu = 0.0;
    double sigma2 = 0.0;
    Eigen::VectorXd mean_image;
  };
  std::array<ClassStats, kNumClasses> per_class;
};

inline CorpusStats corpus_stats(const Corpus& corpus) {
  if (corpus.records.empty()) throw std::invalid_argument("corpus_stats requires a non-empty corpus");
  CorpusStats stats;
  stats.count = static_cast<long>(corpus.records.size());
  for (auto& cs : stats.per_class) cs.mean_image = Eigen::VectorXd::Zero(corpus.d());

  double sum = 0.0, sumsq = 0.0;
  std::array<double, kNumClasses> csum = {0.0, 0.0}, csumsq = {0.0, 0.0};
  for (const auto& rec : corpus.records) {
    const double m = rec.pixels.mean();
    sum += m;
    sumsq += m * m;
    auto& cs = stats.per_class[static_cast<std::size_t>(rec.condition.class_id)];
    cs.count++;
    cs.mean_image += rec.pixels;
    csum[static_cast<std::size_t>(rec.condition.class_id)] += m;
    csumsq[static_cast<std::size_t>(rec.condition.class_id)] += m * m;
  }
  stats.mu = sum / static_cast<double>(stats.count);
  stats.sigma2 = sumsq / static_cast<double>(stats.count) - stats.mu * stats.mu;
  stats.sigma2 = std::max(stats.sigma2, 0.0);
  for (int c = 0; c < kNumClasses; ++c) {
    auto& cs = stats.per_class[static_cast<std::size_t>(c)];
    if (cs.count == 0) continue;
    cs.mean_image /= static_cast<double>(cs.count);
    cs.mu = csum[static_cast<std::size_t>(c)] / static_cast<double>(cs.count);
    cs.sigma2 = std::max(csumsq[static_cast<std::size_t>(c)] / static_cast<double>(cs.count) - cs.mu * cs.mu, 0.0);
  }
  return stats;
}

// --- binary corpus file ------------------------------------------------
//
// header: magic "SYNC", version, H, W, C, count, n_class, per-class counts
// records: condition f32[6] + pixels f32[H*W*C], little-endian

inline constexpr std::uint32_t kCorpusMagic = 0x434E5953;  // "SYNC"
inline constexpr std::uint32_t kCorpusVersion = 1;

inline void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  io::write_u32(os, kCorpusMagic);
  io::write_u32(os, kCorpusVersion);
  io::write_u32(os, static_cast<std::uint32_t>(corpus.height));
  io::write_u32(os, static_cast<std::uint32_t>(corpus.width));
  io::write_u32(os, static_cast<std::uint32_t>(corpus.channels));
  io::write_u32(os, static_cast<std::uint32_t>(corpus.records.size()));
  io::write_u32(os, kNumClasses);
  for (long n : corpus.class_counts()) io::write_u32(os, static_cast<std::uint32_t>(n));

  std::vector<float> buf(static_cast<std::size_t>(kConditionDim + corpus.d()));
  for (const auto& rec : corpus.records) {
    const auto e = rec.condition.encode();
    for (int i = 0; i < kConditionDim; ++i) buf[static_cast<std::size_t>(i)] = static_cast<float>(e[i]);
    for (long i = 0; i < corpus.d(); ++i)
      buf[static_cast<std::size_t>(kConditionDim + i)] = static_cast<float>(rec.pixels[i]);
    io::write_f32_block(os, buf.data(), buf.size());
  }
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

inline Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open corpus file " + path.string());
  if (io::read_u32(is) != kCorpusMagic) throw std::runtime_error(path.string() + ": not a corpus file");
  if (io::read_u32(is) != kCorpusVersion) throw std::runtime_error(path.string() + ": unsupported corpus version");
  Corpus corpus;
  corpus.height = static_cast<int>(io::read_u32(is));
  corpus.width = static_cast<int>(io::read_u32(is));
  corpus.channels = static_cast<int>(io::read_u32(is));
  const std::uint32_t count = io::read_u32(is);
  const std::uint32_t n_class = io::read_u32(is);
  std::vector<std::uint32_t> class_counts(n_class);
  for (auto& n : class_counts) n = io::read_u32(is);

  corpus.records.resize(count);
  std::vector<float> buf(static_cast<std::size_t>(kConditionDim + corpus.d()));
  for (auto& rec : corpus.records) {
    io::read_f32_block(is, buf.data(), buf.size());
    Eigen::VectorXd e(kConditionDim);
    for (int i = 0; i < kConditionDim; ++i) e[i] = buf[static_cast<std::size_t>(i)];
    rec.condition = SynthCondition::decode(e);
    rec.pixels.resize(corpus.d());
    for (long i = 0; i < corpus.d(); ++i) rec.pixels[i] = buf[static_cast<std::size_t>(kConditionDim + i)];
  }
  std::uint32_t total = 0;
  for (auto n : class_counts) total += n;
  if (total != count) throw std::runtime_error(path.string() + ": class counts disagree with record count");
  return corpus;
}

// --- PPM export ---------------------------------------------------------

inline unsigned char quantize_u8(double raw01) {
  return static_cast<unsigned char>(std::lround(std::clamp(raw01, 0.0, 1.0) * 255.0));
}

// Writes a binary P6 image from normalized [-1,1] pixels (3 channels).
inline void write_ppm(const Eigen::Ref<const Eigen::VectorXd>& pixels, int height, int width,
                      const std::filesystem::path& path) {
  if (pixels.size() != static_cast<long>(height) * width * 3)
    throw std::invalid_argument("write_ppm expects H*W*3 pixels");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os << "P6\n" << width << ' ' << height << "\n255\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(width) * 3);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width * 3; ++c)
      row[static_cast<std::size_t>(c)] = quantize_u8(normalized_to_raw(pixels[static_cast<long>(r) * width * 3 + c]));
    os.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

// Reads a binary P6 image into normalized [-1,1] pixels.
inline Eigen::VectorXd read_ppm(const std::filesystem::path& path, int& height, int& width) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::string magic;
  int maxval = 0;
  is >> magic >> width >> height >> maxval;
  if (magic != "P6" || maxval != 255)
    throw std::runtime_error(path.string() + ": expected binary P6 with maxval 255");
  is.get();  // single whitespace after header
  std::vector<unsigned char> bytes(static_cast<std::size_t>(height) * width * 3);
  is.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!is) throw std::runtime_error(path.string() + ": truncated pixel data");
  Eigen::VectorXd pixels(static_cast<long>(height) * width * 3);
  for (long i = 0; i < pixels.size(); ++i)
    pixels[i] = raw_to_normalized(static_cast<double>(bytes[static_cast<std::size_t>(i)]) / 255.0);
  return pixels;
}

}  // namespace difflab
