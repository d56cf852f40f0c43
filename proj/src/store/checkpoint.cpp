#include "mpath/store/checkpoint.hpp"

#include <openssl/evp.h>

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <sstream>

#include "mpath/errors.hpp"
#include "mpath/store/serialization.hpp"

namespace mpath::store {

namespace fs = std::filesystem;

namespace {

constexpr char kBlobMagic[4] = {'M', 'P', 'T', 'B'};
constexpr std::uint8_t kDtypeF64 = 1;
constexpr const char* kFormatTag = "mpath-checkpoint";

static_assert(std::endian::native == std::endian::little, "blob encoding assumes a little-endian host");

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) { bytes(&v, 4); }
  void u64(std::uint64_t v) { bytes(&v, 8); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& in, std::string context) : in_(in), context_(std::move(context)) {}
  void bytes(void* p, std::size_t n) {
    if (n > in_.size() - pos_) throw FormatError("truncated blob for " + context_);
    std::memcpy(p, in_.data() + pos_, n);
    pos_ += n;
  }
  std::uint8_t u8() {
    std::uint8_t v;
    bytes(&v, 1);
    return v;
  }
  std::uint32_t u32() {
    std::uint32_t v;
    bytes(&v, 4);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v;
    bytes(&v, 8);
    return v;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  const std::vector<std::uint8_t>& in_;
  std::size_t pos_ = 0;
  std::string context_;
};

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

}  // namespace

std::vector<std::uint8_t> encode_blob(const std::vector<NamedTensor>& tensors) {
  Writer w;
  w.bytes(kBlobMagic, 4);
  w.u32(kBlobVersion);
  w.u32(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    w.u32(static_cast<std::uint32_t>(name.size()));
    w.bytes(name.data(), name.size());
    w.u8(kDtypeF64);
    w.u32(static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) w.u64(d);
    w.bytes(t.data().data(), t.size() * sizeof(double));
  }
  return w.take();
}

std::vector<NamedTensor> decode_blob(const std::vector<std::uint8_t>& bytes, const std::string& context) {
  Reader r(bytes, context);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kBlobMagic, 4) != 0) throw FormatError("bad blob magic for " + context);
  const std::uint32_t version = r.u32();
  if (version != kBlobVersion)
    throw FormatError("unsupported blob version " + std::to_string(version) + " for " + context);
  const std::uint32_t count = r.u32();
  std::vector<NamedTensor> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name(r.u32(), '\0');
    r.bytes(name.data(), name.size());
    if (r.u8() != kDtypeF64) throw FormatError("unknown dtype tag in blob for " + context);
    const std::uint32_t rank = r.u32();
    if (rank == 0 || rank > 8) throw FormatError("implausible tensor rank in blob for " + context);
    ad::Shape shape(rank);
    std::size_t volume = 1;
    for (auto& d : shape) {
      d = r.u64();
      if (d == 0 || d > (std::size_t{1} << 32)) throw FormatError("implausible tensor dim in blob for " + context);
      volume *= d;
    }
    std::vector<double> data(volume);
    r.bytes(data.data(), volume * sizeof(double));
    out.emplace_back(std::move(name), ad::Tensor(std::move(shape), std::move(data)));
  }
  if (!r.done()) throw FormatError("trailing bytes in blob for " + context);
  return out;
}

std::string sha256_hex(const std::vector<std::uint8_t>& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 computation failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int{digest[i]};
  return os.str();
}

bool checkpoint_exists(const std::string& dir) { return fs::exists(fs::path(dir) / "manifest.json"); }

void save_checkpoint(const SystemStore& store, const std::string& dir) {
  const fs::path root(dir);
  fs::create_directories(root / "blobs");

  Json manifest;
  manifest["format"] = kFormatTag;
  manifest["version"] = kCheckpointVersion;
  manifest["tasks"] = Json::array();
  for (const auto& id : store.task_ids()) manifest["tasks"].push_back(task_to_json(store.task(id)));

  manifest["modules"] = Json::array();
  for (const auto& id : store.module_ids()) {
    const ModuleDef& m = store.module(id);
    const auto blob = encode_blob({{"kernel", m.kernel}, {"bias", m.bias}});
    const std::string rel = "blobs/" + m.module_id + ".bin";
    write_bytes(root / rel, blob);
    manifest["modules"].push_back({{"module_id", m.module_id},
                                   {"kind", std::string(kind_name(m.kind))},
                                   {"frozen", m.frozen},
                                   {"parent_module_id", m.parent_module_id ? Json(*m.parent_module_id) : Json()},
                                   {"last_trained_task", m.last_trained_task},
                                   {"blob", rel},
                                   {"sha256", sha256_hex(blob)}});
  }
  manifest["paths"] = Json::array();
  for (const auto& id : store.path_ids()) manifest["paths"].push_back(path_to_json(store.path(id)));
  manifest["models"] = Json::array();
  for (const auto& id : store.model_ids()) manifest["models"].push_back(model_to_json(store.model(id)));

  const std::string text = manifest.dump(2) + "\n";
  write_bytes(root / "manifest.json", std::vector<std::uint8_t>(text.begin(), text.end()));
}

SystemStore load_checkpoint(const std::string& dir) {
  const fs::path root(dir);
  const auto raw = read_bytes(root / "manifest.json");
  Json manifest;
  try {
    manifest = Json::parse(raw.begin(), raw.end());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("unparseable checkpoint manifest: " + std::string(e.what()));
  }
  if (!manifest.is_object() || manifest.value("format", "") != kFormatTag)
    throw FormatError("not an mpath checkpoint: " + dir);
  const int version = manifest.value("version", -1);
  if (version != kCheckpointVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(version) + " (this build reads version " +
                      std::to_string(kCheckpointVersion) + ")");

  SystemStore store;
  for (const auto& t : manifest.at("tasks")) store.register_task(task_from_json(t));

  // Modules are grouped back into the publication that introduced them.
  std::map<std::string, ModuleDef> modules;
  for (const auto& entry : manifest.at("modules")) {
    const std::string id = entry.at("module_id").get<std::string>();
    if (!valid_id(id)) throw FormatError("invalid module id in manifest: " + id);
    const auto blob = read_bytes(root / entry.at("blob").get<std::string>());
    if (sha256_hex(blob) != entry.at("sha256").get<std::string>())
      throw FormatError("hash mismatch for module '" + id + "'");
    ModuleDef m;
    m.module_id = id;
    m.kind = parse_kind(entry.at("kind").get<std::string>());
    m.frozen = entry.at("frozen").get<bool>();
    if (!entry.at("parent_module_id").is_null()) m.parent_module_id = entry.at("parent_module_id").get<std::string>();
    m.last_trained_task = entry.at("last_trained_task").get<std::string>();
    for (auto& [name, tensor] : decode_blob(blob, "module '" + id + "'")) {
      if (name == "kernel")
        m.kernel = std::move(tensor);
      else if (name == "bias")
        m.bias = std::move(tensor);
      else
        throw FormatError("unexpected tensor '" + name + "' in module '" + id + "'");
    }
    modules.emplace(id, std::move(m));
  }

  // Replay publications in manifest order; a module belongs to the first
  // path or model that references it.
  auto claim = [&](const std::string& id, std::vector<ModuleDef>& out) {
    auto it = modules.find(id);
    if (it == modules.end()) return;
    out.push_back(std::move(it->second));
    modules.erase(it);
  };
  std::vector<Json> paths(manifest.at("paths").begin(), manifest.at("paths").end());
  std::vector<Json> models(manifest.at("models").begin(), manifest.at("models").end());
  for (const auto& pj : paths) {
    PathSpec p = path_from_json(pj);
    std::vector<ModuleDef> fresh;
    for (const auto& mid : p.module_ids) claim(mid, fresh);
    store.publish_path(std::move(p), std::move(fresh));
  }
  for (const auto& mj : models) {
    PublishedModel m = model_from_json(mj);
    std::vector<ModuleDef> fresh;
    for (const auto& cid : m.connector_ids) claim(cid, fresh);
    if (m.router_id) claim(*m.router_id, fresh);
    store.publish_model(std::move(m), std::move(fresh));
  }
  if (!modules.empty()) throw FormatError("checkpoint has unreferenced module '" + modules.begin()->first + "'");

  // Publication order differs from module listing order only when modules
  // were introduced by a later path; verify nothing was reordered.
  const auto& listed = manifest.at("modules");
  const auto order = store.module_ids();
  for (std::size_t i = 0; i < order.size(); ++i)
    if (listed[i].at("module_id").get<std::string>() != order[i])
      throw FormatError("module order in manifest is inconsistent with publications");
  return store;
}

}  // namespace mpath::store
