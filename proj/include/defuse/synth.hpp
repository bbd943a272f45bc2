// Deterministic generator of two-image synthetic scenes: planar objects under
// affine transforms with a smooth local perturbation field, background
// clutter, and complementary synthetic descriptor channels.

#pragma once

#include <algorithm>
#include <cmath>
#include <istream>
#include <set>
#include <string>
#include <vector>

#include "defuse/feature_io.hpp"
#include "defuse/geometry.hpp"

namespace defuse {

struct ObjectSpec {
  int feature_count = 0;
  HomographyMatrix transform;  // image P -> image Q
  double smoothness = 0.0;     // max displacement (px) of the perturbation field
  // co-visible clutter: generated like an object (matched frames and
  // descriptors) but assigned to background in the ground truth, so its
  // correspondences are never correct
  bool decoy = false;
};

struct DescriptorSpec {
  std::string name;
  int dim = 0;
  std::set<int> informative_on;  // object ids this descriptor can match
  double noise_sigma = 0.0;
};

struct SceneSpec {
  std::uint64_t seed = 0;
  std::vector<ObjectSpec> objects;  // object ids are 0..objects.size()-1
  int background_count = 0;
  std::vector<DescriptorSpec> descriptors;
  double image_extent = 512.0;
  double pixel_tolerance = 8.0;

  void validate() const {
    bool real_object = false;
    for (const auto& o : objects) real_object |= !o.decoy;
    if (!real_object) throw DataError("scene spec needs at least one non-decoy object");
    for (const auto& o : objects) {
      if (o.feature_count < 0) throw DataError("object feature count must be >= 0");
      if (std::fabs(o.transform.linear.det()) <= kDegenerateDet)
        throw DataError("degenerate object transform in scene spec");
      if (o.smoothness < 0.0) throw DataError("smoothness must be >= 0");
    }
    if (background_count < 0) throw DataError("background count must be >= 0");
    if (descriptors.empty()) throw DataError("scene spec needs at least one descriptor");
    for (const auto& d : descriptors) {
      if (d.dim < 1) throw DataError("descriptor dimension must be >= 1");
      if (d.noise_sigma < 0.0) throw DataError("noise sigma must be >= 0");
    }
    if (!(image_extent > 0.0)) throw DataError("image extent must be > 0");
  }
};

struct Scene {
  FeatureSet features_p;
  FeatureSet features_q;
  SceneGroundTruth ground_truth;
};

namespace synth_detail {

// Sum of three random sinusoids with unit total amplitude; wavelengths are on
// the order of the image extent so the field varies slowly.
struct SmoothField {
  struct Wave {
    Vec2 amplitude;
    Vec2 wave_vector;
    double phase;
  };
  std::array<Wave, 3> waves;

  static SmoothField random(SplitMix64& rng, double extent) {
    SmoothField f;
    double total = 0.0;
    for (auto& w : f.waves) {
      double dir = rng.uniform(0.0, 6.283185307179586477);
      double amp = rng.uniform(0.5, 1.0);
      w.amplitude = {amp * std::cos(dir), amp * std::sin(dir)};
      double freq = rng.uniform(0.5, 1.5) * 6.283185307179586477 / extent;
      double wave_dir = rng.uniform(0.0, 6.283185307179586477);
      w.wave_vector = {freq * std::cos(wave_dir), freq * std::sin(wave_dir)};
      w.phase = rng.uniform(0.0, 6.283185307179586477);
      total += amp;
    }
    for (auto& w : f.waves) w.amplitude = w.amplitude * (1.0 / total);
    return f;
  }

  Vec2 at(Vec2 x) const {
    Vec2 out;
    for (const auto& w : waves)
      out = out + w.amplitude * std::sin(w.wave_vector.dot(x) + w.phase);
    return out;
  }
};

inline Mat2 random_shape(SplitMix64& rng) {
  double angle = rng.uniform(0.0, 6.283185307179586477);
  double s1 = rng.uniform(2.0, 4.0);
  double s2 = rng.uniform(2.0, 4.0);
  double c = std::cos(angle), s = std::sin(angle);
  Mat2 rot{c, -s, s, c};
  return rot * Mat2{s1, 0.0, 0.0, s2};
}

inline std::vector<double> unit_sphere(SplitMix64& rng, int dim) {
  std::vector<double> v(dim);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (double& x : v) {
      x = rng.normal();
      norm += x * x;
    }
  } while (norm < 1e-12);
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

}  // namespace synth_detail

/// Generates the scene. Feature ids are globally unique across the pair
/// (image Q ids start after image P's) so one ground-truth assignment map
/// covers both images. Fully deterministic in the seed.
inline Scene generate_scene(const SceneSpec& spec) {
  using namespace synth_detail;
  spec.validate();
  SplitMix64 rng(spec.seed);

  Scene scene;
  FeatureSet& p = scene.features_p;
  FeatureSet& q = scene.features_q;
  for (const auto& d : spec.descriptors) {
    p.descriptor_names.push_back(d.name);
    p.descriptor_dims.push_back(d.dim);
    q.descriptor_names.push_back(d.name);
    q.descriptor_dims.push_back(d.dim);
  }
  p.channels.resize(spec.descriptors.size());
  q.channels.resize(spec.descriptors.size());
  scene.ground_truth.pixel_tolerance = spec.pixel_tolerance;

  int total_object_features = 0;
  for (const auto& o : spec.objects) total_object_features += o.feature_count;
  int p_count = total_object_features + spec.background_count;

  auto append_vector = [](std::vector<double>& channel, const std::vector<double>& v) {
    channel.insert(channel.end(), v.begin(), v.end());
  };

  int next_p_id = 0;
  int next_q_id = p_count;  // disjoint id ranges across the pair

  // each object occupies its own cell of the image so that transforms vary
  // by region, as they do on real multi-object scenes; clutter goes anywhere
  int grid = 1;
  while (grid * grid < static_cast<int>(spec.objects.size())) ++grid;
  double cell = spec.image_extent / grid;

  for (int obj = 0; obj < static_cast<int>(spec.objects.size()); ++obj) {
    const ObjectSpec& ospec = spec.objects[obj];
    SmoothField field = SmoothField::random(rng, spec.image_extent);
    if (!ospec.decoy) scene.ground_truth.object_transforms[obj] = ospec.transform;
    double margin = 0.05 * cell;
    double cell_x = (obj % grid) * cell;
    double cell_y = (obj / grid) * cell;
    for (int f = 0; f < ospec.feature_count; ++f) {
      FeatureFrame fp;
      fp.id = next_p_id++;
      fp.center = {cell_x + rng.uniform(margin, cell - margin),
                   cell_y + rng.uniform(margin, cell - margin)};
      fp.shape = random_shape(rng);

      FeatureFrame fq;
      fq.id = next_q_id++;
      Vec2 perturbation = field.at(fp.center) * ospec.smoothness;
      fq.center = ospec.transform.apply(fp.center) + perturbation;
      fq.shape = ospec.transform.linear * fp.shape;

      p.frames.push_back(fp);
      q.frames.push_back(fq);
      int label = ospec.decoy ? kBackgroundObject : obj;
      scene.ground_truth.object_assignment[fp.id] = label;
      scene.ground_truth.object_assignment[fq.id] = label;

      for (std::size_t m = 0; m < spec.descriptors.size(); ++m) {
        const DescriptorSpec& dspec = spec.descriptors[m];
        if (dspec.informative_on.count(obj)) {
          auto prototype = unit_sphere(rng, dspec.dim);
          std::vector<double> vp = prototype, vq = prototype;
          for (double& x : vp) x += dspec.noise_sigma * rng.normal();
          for (double& x : vq) x += dspec.noise_sigma * rng.normal();
          append_vector(p.channels[m], vp);
          append_vector(q.channels[m], vq);
        } else {
          append_vector(p.channels[m], unit_sphere(rng, dspec.dim));
          append_vector(q.channels[m], unit_sphere(rng, dspec.dim));
        }
      }
    }
  }

  // unmatched clutter in both images
  for (int b = 0; b < spec.background_count; ++b) {
    FeatureFrame fp;
    fp.id = next_p_id++;
    fp.center = {rng.uniform(0.0, spec.image_extent), rng.uniform(0.0, spec.image_extent)};
    fp.shape = random_shape(rng);
    p.frames.push_back(fp);
    scene.ground_truth.object_assignment[fp.id] = kBackgroundObject;
    for (std::size_t m = 0; m < spec.descriptors.size(); ++m)
      append_vector(p.channels[m], unit_sphere(rng, spec.descriptors[m].dim));

    FeatureFrame fq;
    fq.id = next_q_id++;
    fq.center = {rng.uniform(0.0, spec.image_extent), rng.uniform(0.0, spec.image_extent)};
    fq.shape = random_shape(rng);
    q.frames.push_back(fq);
    scene.ground_truth.object_assignment[fq.id] = kBackgroundObject;
    for (std::size_t m = 0; m < spec.descriptors.size(); ++m)
      append_vector(q.channels[m], unit_sphere(rng, spec.descriptors[m].dim));
  }

  if (p.frames.empty() || q.frames.empty())
    throw DataError("scene spec generates an empty image");
  return scene;
}

// ---------------------------------------------------------------------------
// Scene spec files
//
//   seed 42
//   extent 512
//   tolerance 8
//   object <feature_count> <h11> <h12> <h13> <h21> <h22> <h23> <smoothness>
//   background <count>
//   descriptor <name> <dim> <noise_sigma> <informative: comma list of object
//       ids, or '-' for none>
//
// Objects get ids 0,1,... in file order.

inline SceneSpec parse_scene_spec(std::istream& in, const std::string& source) {
  using namespace io_detail;
  SceneSpec spec;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto tokens = tokenize(line);
    if (tokens.empty() || tokens[0][0] == '#') continue;
    const std::string& kind = tokens[0];
    if (kind == "seed" && tokens.size() == 2) {
      spec.seed = static_cast<std::uint64_t>(parse_int(tokens[1], source, line_no));
    } else if (kind == "extent" && tokens.size() == 2) {
      spec.image_extent = parse_double(tokens[1], source, line_no);
    } else if (kind == "tolerance" && tokens.size() == 2) {
      spec.pixel_tolerance = parse_double(tokens[1], source, line_no);
    } else if (kind == "background" && tokens.size() == 2) {
      spec.background_count = static_cast<int>(parse_int(tokens[1], source, line_no));
    } else if (kind == "object" &&
               (tokens.size() == 9 || (tokens.size() == 10 && tokens[9] == "decoy"))) {
      ObjectSpec o;
      o.feature_count = static_cast<int>(parse_int(tokens[1], source, line_no));
      Mat3 m = Mat3::identity();
      m.m[0][0] = parse_double(tokens[2], source, line_no);
      m.m[0][1] = parse_double(tokens[3], source, line_no);
      m.m[0][2] = parse_double(tokens[4], source, line_no);
      m.m[1][0] = parse_double(tokens[5], source, line_no);
      m.m[1][1] = parse_double(tokens[6], source, line_no);
      m.m[1][2] = parse_double(tokens[7], source, line_no);
      o.transform = HomographyMatrix::from_mat3(m);
      o.smoothness = parse_double(tokens[8], source, line_no);
      o.decoy = tokens.size() == 10;
      spec.objects.push_back(o);
    } else if (kind == "descriptor" && tokens.size() == 5) {
      DescriptorSpec d;
      d.name = tokens[1];
      if (!valid_descriptor_name(d.name))
        throw parse_error(source, line_no, "invalid descriptor name '" + d.name + "'");
      for (const auto& existing : spec.descriptors)
        if (existing.name == d.name)
          throw parse_error(source, line_no, "duplicate descriptor '" + d.name + "'");
      d.dim = static_cast<int>(parse_int(tokens[2], source, line_no));
      d.noise_sigma = parse_double(tokens[3], source, line_no);
      if (tokens[4] != "-") {
        std::string list = tokens[4];
        std::size_t pos = 0;
        while (pos < list.size()) {
          std::size_t comma = list.find(',', pos);
          if (comma == std::string::npos) comma = list.size();
          d.informative_on.insert(static_cast<int>(
              parse_int(list.substr(pos, comma - pos), source, line_no)));
          pos = comma + 1;
        }
      }
      spec.descriptors.push_back(std::move(d));
    } else {
      throw parse_error(source, line_no, "unrecognized scene spec record '" + kind + "'");
    }
  }
  spec.validate();
  for (const auto& d : spec.descriptors)
    for (int obj : d.informative_on)
      if (obj < 0 || obj >= static_cast<int>(spec.objects.size()))
        throw DataError(source + ": descriptor '" + d.name +
                        "' marked informative on unknown object " + std::to_string(obj));
  return spec;
}

inline SceneSpec parse_scene_spec(const std::string& path) {
  auto in = io_detail::open_input(path);
  return parse_scene_spec(in, path);
}

}  // namespace defuse
