// On-disk formats for feature sets, ground-truth scenes and match reports.
// All formats are line oriented structured text so fixtures stay hand
// auditable; doubles are written with %.17g and round-trip exactly.

#pragma once

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "defuse/geometry.hpp"

namespace defuse {

inline constexpr int kBackgroundObject = -1;

/// One named descriptor vector attached to a feature.
struct DescriptorBundle {
  std::string descriptor_name;
  std::vector<double> vector;
};

/// A parsed feature file: frames plus one contiguous value channel per
/// descriptor name (channel m holds count*dim doubles, feature-major).
struct FeatureSet {
  std::vector<FeatureFrame> frames;
  std::vector<std::string> descriptor_names;
  std::vector<int> descriptor_dims;
  std::vector<std::vector<double>> channels;

  int count() const { return static_cast<int>(frames.size()); }
  int descriptor_count() const { return static_cast<int>(descriptor_names.size()); }

  std::span<const double> descriptor(int m, int i) const {
    int dim = descriptor_dims[m];
    return {channels[m].data() + static_cast<std::size_t>(i) * dim,
            static_cast<std::size_t>(dim)};
  }

  DescriptorBundle bundle(int m, int i) const {
    auto v = descriptor(m, i);
    return {descriptor_names[m], {v.begin(), v.end()}};
  }

  std::vector<DescriptorBundle> bundles(int i) const {
    std::vector<DescriptorBundle> out;
    for (int m = 0; m < descriptor_count(); ++m) out.push_back(bundle(m, i));
    return out;
  }

  std::map<int, int> id_index_map() const {
    std::map<int, int> map;
    for (int i = 0; i < count(); ++i) map[frames[i].id] = i;
    return map;
  }
};

/// Ground truth for a synthetic or annotated scene. Feature ids must be
/// unique across the two images of the pair for the single assignment map to
/// be unambiguous; the synth generator emits disjoint id ranges.
struct SceneGroundTruth {
  std::map<int, int> object_assignment;              // feature id -> object id
  std::map<int, HomographyMatrix> object_transforms; // object id -> P->Q map
  double pixel_tolerance = 8.0;

  int object_of(int feature_id) const {
    auto it = object_assignment.find(feature_id);
    return it == object_assignment.end() ? kBackgroundObject : it->second;
  }
};

enum class Correctness : int { no = 0, yes = 1, unknown = -1 };

struct ReportEntry {
  int p_id = 0;
  int q_id = 0;
  double score = 0.0;
  std::string tag;
  Correctness correct = Correctness::unknown;
};

/// Full-precision decimal; round-trips any finite double exactly.
inline std::string fmt_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace io_detail {

inline std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> tokens;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) tokens.push_back(tok);
  return tokens;
}

inline ParseError parse_error(const std::string& source, int line_no,
                              const std::string& msg) {
  return ParseError(source + ":" + std::to_string(line_no) + ": " + msg);
}

inline double parse_double(const std::string& tok, const std::string& source,
                           int line_no) {
  const char* begin = tok.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  if (end != begin + tok.size() || tok.empty())
    throw parse_error(source, line_no, "expected a number, got '" + tok + "'");
  return v;
}

inline long parse_int(const std::string& tok, const std::string& source,
                      int line_no) {
  const char* begin = tok.c_str();
  char* end = nullptr;
  long v = std::strtol(begin, &end, 10);
  if (end != begin + tok.size() || tok.empty())
    throw parse_error(source, line_no, "expected an integer, got '" + tok + "'");
  return v;
}

inline bool valid_descriptor_name(const std::string& name) {
  if (name.empty()) return false;
  for (char c : name)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-' &&
        c != '.')
      return false;
  return true;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError(path + ": cannot open file for writing");
  return out;
}

}  // namespace io_detail

// ---------------------------------------------------------------------------
// Feature files
//
//   #descriptors name1:dim1 name2:dim2 ...
//   id x y a11 a12 a21 a22 | v1 ... | v2 ...

inline FeatureSet load_feature_set(std::istream& in, const std::string& source) {
  using namespace io_detail;
  FeatureSet set;
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  std::set<int> seen_ids;

  while (std::getline(in, line)) {
    ++line_no;
    auto tokens = tokenize(line);
    if (tokens.empty()) continue;
    if (!header_seen) {
      if (tokens[0] != "#descriptors")
        throw parse_error(source, line_no, "expected '#descriptors' header");
      for (std::size_t t = 1; t < tokens.size(); ++t) {
        auto colon = tokens[t].find(':');
        if (colon == std::string::npos)
          throw parse_error(source, line_no,
                            "descriptor entry '" + tokens[t] + "' is not name:dim");
        std::string name = tokens[t].substr(0, colon);
        if (!valid_descriptor_name(name))
          throw parse_error(source, line_no, "invalid descriptor name '" + name + "'");
        for (const auto& existing : set.descriptor_names)
          if (existing == name)
            throw parse_error(source, line_no, "duplicate descriptor '" + name + "'");
        long dim = parse_int(tokens[t].substr(colon + 1), source, line_no);
        if (dim < 1)
          throw parse_error(source, line_no, "descriptor dimension must be >= 1");
        set.descriptor_names.push_back(name);
        set.descriptor_dims.push_back(static_cast<int>(dim));
      }
      set.channels.resize(set.descriptor_names.size());
      header_seen = true;
      continue;
    }
    if (tokens[0][0] == '#') continue;

    if (tokens.size() < 7)
      throw parse_error(source, line_no, "feature record needs id x y a11 a12 a21 a22");
    FeatureFrame f;
    f.id = static_cast<int>(parse_int(tokens[0], source, line_no));
    f.center.x = parse_double(tokens[1], source, line_no);
    f.center.y = parse_double(tokens[2], source, line_no);
    f.shape.a11 = parse_double(tokens[3], source, line_no);
    f.shape.a12 = parse_double(tokens[4], source, line_no);
    f.shape.a21 = parse_double(tokens[5], source, line_no);
    f.shape.a22 = parse_double(tokens[6], source, line_no);
    for (double v : {f.center.x, f.center.y, f.shape.a11, f.shape.a12, f.shape.a21,
                     f.shape.a22})
      if (!std::isfinite(v))
        throw DataError("feature " + std::to_string(f.id) + ": non-finite frame value");
    if (!seen_ids.insert(f.id).second)
      throw DataError("feature " + std::to_string(f.id) + ": duplicate id");
    f.validate();

    std::size_t pos = 7;
    for (int m = 0; m < set.descriptor_count(); ++m) {
      if (pos >= tokens.size() || tokens[pos] != "|")
        throw parse_error(source, line_no,
                          "expected '|' before descriptor '" + set.descriptor_names[m] + "'");
      ++pos;
      for (int k = 0; k < set.descriptor_dims[m]; ++k, ++pos) {
        if (pos >= tokens.size() || tokens[pos] == "|")
          throw parse_error(source, line_no,
                            "descriptor '" + set.descriptor_names[m] + "' has fewer than " +
                                std::to_string(set.descriptor_dims[m]) + " values");
        double v = parse_double(tokens[pos], source, line_no);
        if (!std::isfinite(v))
          throw DataError("feature " + std::to_string(f.id) + ": non-finite value in descriptor '" +
                          set.descriptor_names[m] + "'");
        set.channels[m].push_back(v);
      }
    }
    if (pos != tokens.size())
      throw parse_error(source, line_no, "trailing tokens after last descriptor");
    set.frames.push_back(f);
  }
  if (!header_seen) throw ParseError(source + ": missing '#descriptors' header");
  if (set.frames.empty()) throw DataError(source + ": empty feature set");
  return set;
}

inline FeatureSet load_feature_set(const std::string& path) {
  auto in = io_detail::open_input(path);
  return load_feature_set(in, path);
}

inline void save_feature_set(std::ostream& out, const FeatureSet& set) {
  out << "#descriptors";
  for (int m = 0; m < set.descriptor_count(); ++m)
    out << ' ' << set.descriptor_names[m] << ':' << set.descriptor_dims[m];
  out << '\n';
  for (int i = 0; i < set.count(); ++i) {
    const FeatureFrame& f = set.frames[i];
    out << f.id << ' ' << fmt_full(f.center.x) << ' ' << fmt_full(f.center.y) << ' '
        << fmt_full(f.shape.a11) << ' ' << fmt_full(f.shape.a12) << ' '
        << fmt_full(f.shape.a21) << ' ' << fmt_full(f.shape.a22);
    for (int m = 0; m < set.descriptor_count(); ++m) {
      out << " |";
      for (double v : set.descriptor(m, i)) out << ' ' << fmt_full(v);
    }
    out << '\n';
  }
}

inline void save_feature_set(const std::string& path, const FeatureSet& set) {
  auto out = io_detail::open_output(path);
  save_feature_set(out, set);
}

/// Keeps only the named descriptor channels (for single-descriptor runs).
inline FeatureSet restrict_descriptors(const FeatureSet& set,
                                       const std::vector<std::string>& names) {
  FeatureSet out;
  out.frames = set.frames;
  for (const auto& name : names) {
    bool found = false;
    for (int m = 0; m < set.descriptor_count(); ++m) {
      if (set.descriptor_names[m] == name) {
        out.descriptor_names.push_back(name);
        out.descriptor_dims.push_back(set.descriptor_dims[m]);
        out.channels.push_back(set.channels[m]);
        found = true;
        break;
      }
    }
    if (!found) throw ParamError("unknown descriptor '" + name + "'");
  }
  if (out.descriptor_names.empty()) throw ParamError("no descriptors selected");
  return out;
}

// ---------------------------------------------------------------------------
// Ground-truth files
//
//   #objects k
//   obj_id h11 h12 h13 h21 h22 h23      (k lines; bottom row implied)
//   assign feature_id obj_id            (obj_id -1 marks background)
//   tolerance t                         (optional)

inline SceneGroundTruth load_ground_truth(std::istream& in, const std::string& source) {
  using namespace io_detail;
  SceneGroundTruth gt;
  std::string line;
  int line_no = 0;
  long remaining_objects = -1;

  while (std::getline(in, line)) {
    ++line_no;
    auto tokens = tokenize(line);
    if (tokens.empty()) continue;
    if (remaining_objects < 0) {
      if (tokens.size() != 2 || tokens[0] != "#objects")
        throw parse_error(source, line_no, "expected '#objects k' header");
      remaining_objects = parse_int(tokens[1], source, line_no);
      if (remaining_objects < 1)
        throw parse_error(source, line_no, "object count must be >= 1");
      continue;
    }
    if (remaining_objects > 0) {
      if (tokens.size() != 7)
        throw parse_error(source, line_no, "object record needs obj_id + 6 transform values");
      int obj = static_cast<int>(parse_int(tokens[0], source, line_no));
      if (obj == kBackgroundObject)
        throw parse_error(source, line_no, "object id -1 is reserved for background");
      if (gt.object_transforms.count(obj))
        throw DataError("object " + std::to_string(obj) + ": duplicate transform");
      Mat3 m = Mat3::identity();
      m.m[0][0] = parse_double(tokens[1], source, line_no);
      m.m[0][1] = parse_double(tokens[2], source, line_no);
      m.m[0][2] = parse_double(tokens[3], source, line_no);
      m.m[1][0] = parse_double(tokens[4], source, line_no);
      m.m[1][1] = parse_double(tokens[5], source, line_no);
      m.m[1][2] = parse_double(tokens[6], source, line_no);
      gt.object_transforms[obj] = HomographyMatrix::from_mat3(m);
      --remaining_objects;
      continue;
    }
    if (tokens[0] == "assign") {
      if (tokens.size() != 3)
        throw parse_error(source, line_no, "expected 'assign feature_id obj_id'");
      int fid = static_cast<int>(parse_int(tokens[1], source, line_no));
      int obj = static_cast<int>(parse_int(tokens[2], source, line_no));
      if (obj != kBackgroundObject && !gt.object_transforms.count(obj))
        throw DataError("assignment of feature " + std::to_string(fid) +
                        " references object " + std::to_string(obj) +
                        " which has no transform");
      gt.object_assignment[fid] = obj;
    } else if (tokens[0] == "tolerance") {
      if (tokens.size() != 2)
        throw parse_error(source, line_no, "expected 'tolerance t'");
      double t = parse_double(tokens[1], source, line_no);
      if (!(t > 0.0) || !std::isfinite(t))
        throw parse_error(source, line_no, "tolerance must be positive and finite");
      gt.pixel_tolerance = t;
    } else if (tokens[0][0] == '#') {
      continue;
    } else {
      throw parse_error(source, line_no, "unrecognized record '" + tokens[0] + "'");
    }
  }
  if (remaining_objects != 0)
    throw ParseError(source + ": missing or incomplete object list");
  return gt;
}

inline SceneGroundTruth load_ground_truth(const std::string& path) {
  auto in = io_detail::open_input(path);
  return load_ground_truth(in, path);
}

inline void save_ground_truth(std::ostream& out, const SceneGroundTruth& gt) {
  out << "#objects " << gt.object_transforms.size() << '\n';
  for (const auto& [obj, h] : gt.object_transforms) {
    out << obj << ' ' << fmt_full(h.linear.a11) << ' ' << fmt_full(h.linear.a12) << ' '
        << fmt_full(h.translation.x) << ' ' << fmt_full(h.linear.a21) << ' '
        << fmt_full(h.linear.a22) << ' ' << fmt_full(h.translation.y) << '\n';
  }
  for (const auto& [fid, obj] : gt.object_assignment)
    out << "assign " << fid << ' ' << obj << '\n';
  out << "tolerance " << fmt_full(gt.pixel_tolerance) << '\n';
}

inline void save_ground_truth(const std::string& path, const SceneGroundTruth& gt) {
  auto out = io_detail::open_output(path);
  save_ground_truth(out, gt);
}

// ---------------------------------------------------------------------------
// Match reports
//
//   # free-form header comments (effective config, source stats)
//   p_id q_id score descriptor_tag correct{0,1,-1}   sorted by descending score

inline void save_match_report(std::ostream& out,
                              const std::vector<ReportEntry>& entries,
                              const std::vector<std::string>& header = {}) {
  for (const auto& h : header) out << "# " << h << '\n';
  for (const auto& e : entries)
    out << e.p_id << ' ' << e.q_id << ' ' << fmt_full(e.score) << ' ' << e.tag
        << ' ' << static_cast<int>(e.correct) << '\n';
}

inline void save_match_report(const std::string& path,
                              const std::vector<ReportEntry>& entries,
                              const std::vector<std::string>& header = {}) {
  auto out = io_detail::open_output(path);
  save_match_report(out, entries, header);
}

inline std::vector<ReportEntry> load_match_report(std::istream& in,
                                                  const std::string& source) {
  using namespace io_detail;
  std::vector<ReportEntry> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto tokens = tokenize(line);
    if (tokens.empty() || tokens[0][0] == '#') continue;
    if (tokens.size() != 5)
      throw parse_error(source, line_no, "expected 'p_id q_id score tag correct'");
    ReportEntry e;
    e.p_id = static_cast<int>(parse_int(tokens[0], source, line_no));
    e.q_id = static_cast<int>(parse_int(tokens[1], source, line_no));
    e.score = parse_double(tokens[2], source, line_no);
    e.tag = tokens[3];
    long c = parse_int(tokens[4], source, line_no);
    if (c != 0 && c != 1 && c != -1)
      throw parse_error(source, line_no, "correct must be 0, 1 or -1");
    e.correct = static_cast<Correctness>(c);
    if (!entries.empty() && entries.back().score < e.score)
      throw DataError(source + ":" + std::to_string(line_no) +
                      ": report scores must be non-increasing");
    entries.push_back(std::move(e));
  }
  return entries;
}

inline std::vector<ReportEntry> load_match_report(const std::string& path) {
  auto in = io_detail::open_input(path);
  return load_match_report(in, path);
}

}  // namespace defuse
