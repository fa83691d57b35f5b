#include "birdxfer/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_set>

#include "birdxfer/error.hpp"
#include "birdxfer/random.hpp"

namespace birdxfer {
namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        field += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (ch != '\r') {
      field += ch;
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t");
  const auto e = s.find_last_not_of(" \t");
  if (b == std::string::npos) return {};
  return s.substr(b, e - b + 1);
}

std::string display_path(const std::string& path, const std::filesystem::path& dir) {
  const std::filesystem::path p(path);
  if (dir.empty()) return path;
  const auto rel = p.lexically_normal().lexically_relative(dir.lexically_normal());
  if (!rel.empty() && *rel.begin() != "..") return rel.string();
  return path;
}

}  // namespace

std::vector<SampleRecord> DatasetManifest::positives() const {
  std::vector<SampleRecord> out;
  for (const auto& r : records)
    if (r.role == Role::kPositive) out.push_back(r);
  return out;
}

std::vector<SampleRecord> DatasetManifest::negatives() const {
  std::vector<SampleRecord> out;
  for (const auto& r : records)
    if (r.role == Role::kNegative) out.push_back(r);
  return out;
}

DatasetManifest manifest_from_records(std::vector<SampleRecord> records) {
  std::set<std::string> species;
  std::unordered_set<std::string> seen;
  for (const auto& r : records) {
    if (!seen.insert(r.image_path).second) throw ValidationError("duplicate sample: " + r.image_path);
    if (r.role == Role::kPositive) species.insert(r.species);
  }
  DatasetManifest m;
  m.class_names.assign(species.begin(), species.end());
  m.class_names.emplace_back(kNegativeClassName);
  std::map<std::string, int> index;
  for (int i = 0; i + 1 < m.num_classes(); ++i) index[m.class_names[i]] = i;
  for (auto& r : records) {
    r.label_index = r.role == Role::kPositive ? index.at(r.species) : m.negative_index();
  }
  m.records = std::move(records);
  return m;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("missing file: " + path.string());
  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) throw ValidationError("empty manifest: " + path.string());
  const auto header = split_csv_line(line);
  int col_path = -1, col_species = -1, col_role = -1;
  for (int i = 0; i < static_cast<int>(header.size()); ++i) {
    const auto h = trim(header[i]);
    if (h == "image_path" || h == "audio_path" || h == "path") col_path = i;
    if (h == "species") col_species = i;
    if (h == "role") col_role = i;
  }
  if (col_path < 0 || col_species < 0 || col_role < 0) {
    throw FormatError("manifest header must contain image_path,species,role: " + path.string());
  }
  const auto dir = path.parent_path();
  std::vector<SampleRecord> records;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    const int needed = std::max({col_path, col_species, col_role});
    if (static_cast<int>(fields.size()) <= needed) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": too few columns");
    }
    SampleRecord r;
    std::filesystem::path p(trim(fields[col_path]));
    if (p.is_relative() && !dir.empty()) p = dir / p;
    r.image_path = p.lexically_normal().string();
    r.species = trim(fields[col_species]);
    const auto role = trim(fields[col_role]);
    if (role == "positive") {
      r.role = Role::kPositive;
    } else if (role == "negative") {
      r.role = Role::kNegative;
    } else {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": unknown role '" + role + "'");
    }
    records.push_back(std::move(r));
  }
  if (records.empty()) throw ValidationError("empty manifest: " + path.string());
  return manifest_from_records(std::move(records));
}

void write_manifest(const std::filesystem::path& path, std::span<const SampleRecord> records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  const auto dir = path.parent_path();
  out << "image_path,species,role\n";
  for (const auto& r : records) {
    out << csv_escape(display_path(r.image_path, dir)) << ',' << csv_escape(r.species) << ','
        << (r.role == Role::kPositive ? "positive" : "negative") << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

DatasetManifest relabel(const DatasetManifest& manifest, const std::vector<std::string>& class_names) {
  if (class_names.size() < 2 || class_names.back() != kNegativeClassName) {
    throw ValidationError("class list must end with the negative class");
  }
  std::map<std::string, int> index;
  for (int i = 0; i + 1 < static_cast<int>(class_names.size()); ++i) index[class_names[i]] = i;
  DatasetManifest out;
  out.class_names = class_names;
  out.records = manifest.records;
  for (auto& r : out.records) {
    if (r.role == Role::kNegative) {
      r.label_index = static_cast<int>(class_names.size()) - 1;
      continue;
    }
    auto it = index.find(r.species);
    if (it == index.end()) throw ValidationError("species '" + r.species + "' not among model classes");
    r.label_index = it->second;
  }
  return out;
}

DatasetManifest merge_negatives(DatasetManifest base, const DatasetManifest& negatives) {
  std::unordered_set<std::string> seen;
  for (const auto& r : base.records) seen.insert(r.image_path);
  for (auto r : negatives.negatives()) {
    if (!seen.insert(r.image_path).second) throw ValidationError("duplicate sample: " + r.image_path);
    r.label_index = base.negative_index();
    base.records.push_back(std::move(r));
  }
  return base;
}

const char* split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kValidation: return "validation";
    case Split::kTest: return "test";
  }
  return "?";
}

std::vector<std::size_t> SplitAssignment::counts(std::size_t num_splits) const {
  std::vector<std::size_t> c(num_splits, 0);
  for (Split s : assignment) ++c.at(static_cast<std::size_t>(s));
  return c;
}

std::vector<SampleRecord> SplitAssignment::select(std::span<const SampleRecord> records, Split which) const {
  if (records.size() != assignment.size()) throw InvalidArgument("split/record count mismatch");
  std::vector<SampleRecord> out;
  for (std::size_t i = 0; i < records.size(); ++i)
    if (assignment[i] == which) out.push_back(records[i]);
  return out;
}

SplitAssignment split_dataset(std::span<const SampleRecord> records, std::span<const double> fractions,
                              std::uint64_t seed) {
  if (fractions.empty() || fractions.size() > 3) throw InvalidArgument("split_dataset: 1 to 3 fractions");
  double total = 0.0;
  for (double f : fractions) {
    if (!(f > 0.0 && f < 1.0) && !(fractions.size() == 1 && f == 1.0)) {
      throw InvalidArgument("split_dataset: fractions must lie in (0, 1)");
    }
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) throw InvalidArgument("split_dataset: fractions must sum to 1");

  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < records.size(); ++i) by_class[records[i].label_index].push_back(i);

  SplitAssignment out;
  out.seed = seed;
  out.assignment.assign(records.size(), Split::kTrain);
  Rng rng(mix_seed({seed, 0x5b117ull}));
  for (auto& [label, members] : by_class) {
    const std::size_t n = members.size();
    if (n < fractions.size()) {
      throw ValidationError("class " + std::to_string(label) + " has " + std::to_string(n) +
                            " records, fewer than " + std::to_string(fractions.size()) + " splits");
    }
    std::shuffle(members.begin(), members.end(), rng.engine());
    std::vector<std::size_t> take(fractions.size());
    std::size_t assigned = 0;
    for (std::size_t s = 0; s < fractions.size(); ++s) {
      take[s] = static_cast<std::size_t>(std::floor(fractions[s] * static_cast<double>(n) + 1e-9));
      assigned += take[s];
    }
    for (std::size_t s = 0; assigned < n; s = (s + 1) % fractions.size(), ++assigned) ++take[s];
    std::size_t pos = 0;
    for (std::size_t s = 0; s < fractions.size(); ++s) {
      for (std::size_t k = 0; k < take[s]; ++k) out.assignment[members[pos++]] = static_cast<Split>(s);
    }
  }
  return out;
}

std::vector<SampleRecord> sample_negatives(std::span<const SampleRecord> pool, std::size_t count,
                                           std::uint64_t seed, std::uint64_t epoch) {
  if (count > pool.size()) {
    throw ValidationError("sample_negatives: count " + std::to_string(count) + " exceeds pool size " +
                          std::to_string(pool.size()));
  }
  std::vector<std::size_t> idx(pool.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(mix_seed({seed, epoch, 0x6e6567ull}));
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = static_cast<std::size_t>(rng.integer(static_cast<std::int64_t>(i),
                                                        static_cast<std::int64_t>(pool.size() - 1)));
    std::swap(idx[i], idx[j]);
  }
  std::vector<SampleRecord> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(pool[idx[i]]);
  return out;
}

std::vector<double> class_weights(std::span<const SampleRecord> records, int num_classes) {
  if (num_classes < 1) throw InvalidArgument("class_weights: num_classes must be positive");
  std::vector<std::size_t> counts(static_cast<std::size_t>(num_classes), 0);
  for (const auto& r : records) {
    if (r.label_index < 0 || r.label_index >= num_classes) throw InvalidArgument("class_weights: label out of range");
    ++counts[static_cast<std::size_t>(r.label_index)];
  }
  std::vector<double> w(counts.size());
  const double total = static_cast<double>(records.size());
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] == 0) throw ValidationError("class_weights: empty class " + std::to_string(c));
    w[c] = total / (static_cast<double>(num_classes) * static_cast<double>(counts[c]));
  }
  return w;
}

void write_split_csv(const std::filesystem::path& path, std::span<const SampleRecord> records,
                     const SplitAssignment& split) {
  if (records.size() != split.assignment.size()) throw InvalidArgument("split/record count mismatch");
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  const auto dir = path.parent_path();
  out << "image_path,species,role,split\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    out << csv_escape(display_path(r.image_path, dir)) << ',' << csv_escape(r.species) << ','
        << (r.role == Role::kPositive ? "positive" : "negative") << ',' << split_name(split.assignment[i]) << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace birdxfer
