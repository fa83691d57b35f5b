#include "birdxfer/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <iterator>

#include "birdxfer/config.hpp"
#include "birdxfer/error.hpp"

namespace birdxfer {

namespace {

constexpr char kMagic[8] = {'B', 'X', 'A', 'R', 'C', 'H', 'V', '1'};
constexpr char kFooter[8] = {'B', 'X', 'E', 'N', 'D', '\0', '\0', '\0'};
constexpr std::uint64_t kMaxJson = 1ull << 30;

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  template <typename T>
  void pod(T v) {
    bytes(&v, sizeof v);
  }
  const std::vector<char>& buffer() const { return buf_; }

 private:
  std::vector<char> buf_;
};

class Reader {
 public:
  Reader(std::vector<char> data, std::string source) : data_(std::move(data)), source_(std::move(source)) {}
  void bytes(void* dst, std::size_t n) {
    if (n > data_.size() - pos_) throw FormatError("truncated archive: " + source_);
    std::memcpy(dst, data_.data() + pos_, n);
    pos_ += n;
  }
  template <typename T>
  T pod() {
    T v;
    bytes(&v, sizeof v);
    return v;
  }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  std::vector<char> data_;
  std::size_t pos_ = 0;
  std::string source_;
};

template <typename T>
std::vector<std::int64_t> natural_shape(const Tensor<T>& t) {
  if (t.n == 1 && t.h == 1 && t.w == 1) return {t.c};
  if (t.n == 1 && t.c == 1) return {t.h, t.w};
  return {t.n, t.c, t.h, t.w};
}

std::string shape_text(const std::vector<std::int64_t>& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? ", " : "") + std::to_string(s[i]);
  return out + "]";
}

template <typename T>
void copy_into(const ArrayEntry& e, Tensor<T>& dst, const std::string& source) {
  const auto expected = natural_shape(dst);
  if (e.shape != expected) {
    throw ValidationError("shape mismatch for " + e.name + " in " + source + ": archive " + shape_text(e.shape) +
                          ", network " + shape_text(expected));
  }
  for (std::size_t i = 0; i < dst.data.size(); ++i) dst.data[i] = static_cast<T>(e.values[i]);
}

}  // namespace

const ArrayEntry* Archive::find(const std::string& name) const {
  for (const auto& a : arrays)
    if (a.name == name) return &a;
  return nullptr;
}

void write_archive(const std::filesystem::path& path, const Archive& archive) {
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.pod<std::uint32_t>(kArchiveFormatVersion);
  const std::string meta = archive.metadata.dump();
  w.pod<std::uint64_t>(meta.size());
  w.bytes(meta.data(), meta.size());
  w.pod<std::uint32_t>(static_cast<std::uint32_t>(archive.arrays.size()));
  for (const auto& a : archive.arrays) {
    std::int64_t count = 1;
    for (auto d : a.shape) count *= d;
    if (count != static_cast<std::int64_t>(a.values.size())) {
      throw InvalidArgument("archive entry " + a.name + ": shape does not match value count");
    }
    w.pod<std::uint32_t>(static_cast<std::uint32_t>(a.name.size()));
    w.bytes(a.name.data(), a.name.size());
    w.pod<std::uint32_t>(static_cast<std::uint32_t>(a.shape.size()));
    for (auto d : a.shape) w.pod<std::int64_t>(d);
    w.bytes(a.values.data(), a.values.size() * sizeof(float));
  }
  w.bytes(kFooter, sizeof kFooter);

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(w.buffer().data(), static_cast<std::streamsize>(w.buffer().size()));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw IoError("write failed (disk full?): " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " into place: " + ec.message());
}

Archive read_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("missing file: " + path.string());
  std::vector<char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Reader r(std::move(data), path.string());

  char magic[8];
  r.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof magic) != 0) throw FormatError("not a weight archive: " + path.string());
  const auto version = r.pod<std::uint32_t>();
  if (version != kArchiveFormatVersion) {
    throw FormatError("archive version " + std::to_string(version) + " unsupported (expected " +
                      std::to_string(kArchiveFormatVersion) + "): " + path.string());
  }
  const auto json_len = r.pod<std::uint64_t>();
  if (json_len > kMaxJson || json_len > r.remaining()) throw FormatError("truncated archive: " + path.string());
  std::string meta(json_len, '\0');
  r.bytes(meta.data(), meta.size());

  Archive archive;
  try {
    archive.metadata = nlohmann::json::parse(meta);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("corrupt archive metadata in " + path.string() + ": " + e.what());
  }
  const auto count = r.pod<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    ArrayEntry e;
    const auto name_len = r.pod<std::uint32_t>();
    if (name_len > r.remaining()) throw FormatError("truncated archive: " + path.string());
    e.name.resize(name_len);
    r.bytes(e.name.data(), name_len);
    const auto ndim = r.pod<std::uint32_t>();
    if (ndim > 8) throw FormatError("corrupt archive entry " + e.name + " in " + path.string());
    std::uint64_t total = 1;
    for (std::uint32_t d = 0; d < ndim; ++d) {
      const auto dim = r.pod<std::int64_t>();
      if (dim < 0) throw FormatError("negative dimension in " + e.name + ": " + path.string());
      e.shape.push_back(dim);
      total *= static_cast<std::uint64_t>(dim);
    }
    if (total * sizeof(float) > r.remaining()) throw FormatError("truncated archive: " + path.string());
    e.values.resize(total);
    r.bytes(e.values.data(), total * sizeof(float));
    archive.arrays.push_back(std::move(e));
  }
  char footer[8];
  r.bytes(footer, sizeof footer);
  if (std::memcmp(footer, kFooter, sizeof footer) != 0) throw FormatError("corrupt archive footer: " + path.string());
  if (r.remaining() != 0) throw FormatError("trailing bytes after archive footer: " + path.string());
  return archive;
}

nlohmann::json to_json(const CheckpointMetadata& meta) {
  nlohmann::json j;
  j["format_version"] = kArchiveFormatVersion;
  j["stage"] = meta.stage;
  j["class_names"] = meta.class_names;
  j["spectrogram"] = to_json(meta.spectrogram);
  j["spectrogram_config_hash"] = meta.spectrogram.hash();
  j["augment"] = to_json(meta.augment);
  j["model"] = to_json(meta.model);
  j["init"] = {{"scheme", meta.init.scheme},
               {"conversion_bound", meta.init.conversion_bound},
               {"head_bound", meta.init.head_bound},
               {"backbone_source", meta.init.backbone_source}};
  j["extra"] = meta.extra;
  return j;
}

CheckpointMetadata metadata_from_json(const nlohmann::json& j) {
  CheckpointMetadata meta;
  try {
    if (!j.contains("format_version")) throw FormatError("checkpoint metadata lacks format_version");
    if (j.at("format_version").get<std::uint32_t>() != kArchiveFormatVersion) {
      throw FormatError("checkpoint format_version " + j.at("format_version").dump() + " unsupported");
    }
    meta.stage = j.value("stage", std::string("base"));
    meta.class_names = j.value("class_names", std::vector<std::string>{});
    if (j.contains("spectrogram")) meta.spectrogram = spectrogram_config_from_json(j.at("spectrogram"));
    if (j.contains("augment")) meta.augment = augment_config_from_json(j.at("augment"));
    if (j.contains("model")) meta.model = model_config_from_json(j.at("model"));
    if (j.contains("init")) {
      const auto& i = j.at("init");
      meta.init.scheme = i.value("scheme", meta.init.scheme);
      meta.init.conversion_bound = i.value("conversion_bound", 0.0);
      meta.init.head_bound = i.value("head_bound", 0.0);
      meta.init.backbone_source = i.value("backbone_source", meta.init.backbone_source);
    }
    if (j.contains("extra")) meta.extra = j.at("extra");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed checkpoint metadata: ") + e.what());
  }
  return meta;
}

template <typename T>
Archive network_to_archive(Network<T>& net) {
  Archive archive;
  auto reg = net.registry();
  for (auto* list : {&reg.params, &reg.buffers}) {
    for (auto& e : *list) {
      ArrayEntry a;
      a.name = e.name;
      a.shape = natural_shape(*e.value);
      a.values.assign(e.value->data.begin(), e.value->data.end());
      archive.arrays.push_back(std::move(a));
    }
  }
  return archive;
}

template <typename T>
void archive_to_network(const Archive& archive, Network<T>& net, bool backbone_only) {
  auto reg = net.registry();
  for (auto* list : {&reg.params, &reg.buffers}) {
    for (auto& e : *list) {
      if (backbone_only && !e.name.starts_with("backbone.")) continue;
      const ArrayEntry* a = archive.find(e.name);
      if (!a) throw ValidationError("weight archive lacks " + e.name);
      copy_into(*a, *e.value, e.name);
    }
  }
}

template <typename T>
void load_backbone_weights(Network<T>& net, const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("missing pretrained weight file: " + path.string());
  archive_to_network(read_archive(path), net, /*backbone_only=*/true);
}

void save_checkpoint(Network<float>& net, const CheckpointMetadata& meta, const std::filesystem::path& path) {
  if (!meta.class_names.empty() && static_cast<int>(meta.class_names.size()) != net.num_classes()) {
    throw InvalidArgument("checkpoint metadata lists " + std::to_string(meta.class_names.size()) +
                          " classes but the head has " + std::to_string(net.num_classes()));
  }
  Archive archive = network_to_archive(net);
  CheckpointMetadata m = meta;
  m.model = net.config();
  archive.metadata = to_json(m);
  write_archive(path, archive);
}

LoadedModel load_checkpoint(const std::filesystem::path& path) {
  Archive archive = read_archive(path);
  CheckpointMetadata meta = metadata_from_json(archive.metadata);
  const ArrayEntry* head = archive.find("head.b");
  if (!head || head->shape.size() != 1) throw FormatError("checkpoint lacks head.b: " + path.string());
  if (head->shape[0] != meta.model.num_classes) {
    throw FormatError("checkpoint model config says " + std::to_string(meta.model.num_classes) +
                      " classes but head.b has " + std::to_string(head->shape[0]));
  }
  if (static_cast<std::int64_t>(meta.class_names.size()) != head->shape[0]) {
    throw ValidationError("checkpoint lists " + std::to_string(meta.class_names.size()) +
                          " class names but the head has " + std::to_string(head->shape[0]) + " outputs");
  }
  Network<float> net(meta.model, std::make_unique<nn::ResNetBackbone<float>>(meta.model.backbone));
  archive_to_network(archive, net, /*backbone_only=*/false);
  return LoadedModel{std::move(net), std::move(meta)};
}

void check_spectrogram_config(const CheckpointMetadata& meta, const SpectrogramConfig& active, bool strict) {
  if (meta.spectrogram.hash() == active.hash()) return;
  const std::string msg = "spectrogram constants differ: checkpoint [" + meta.spectrogram.canonical_string() +
                          "] vs active [" + active.canonical_string() + "]";
  if (strict) throw ValidationError(msg);
  warn(msg);
}

template Archive network_to_archive<float>(Network<float>&);
template Archive network_to_archive<double>(Network<double>&);
template void archive_to_network<float>(const Archive&, Network<float>&, bool);
template void archive_to_network<double>(const Archive&, Network<double>&, bool);
template void load_backbone_weights<float>(Network<float>&, const std::filesystem::path&);
template void load_backbone_weights<double>(Network<double>&, const std::filesystem::path&);

}  // namespace birdxfer
