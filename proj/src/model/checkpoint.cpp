// SPDX-License-Identifier: Apache-2.0

#include "lct/model/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace lct {
inline namespace LCT_PRECISION_NS {
namespace model {
namespace {

static_assert(std::endian::native == std::endian::little, "archive payloads are little-endian");

constexpr const char* kMagic = "LCT-ARCHIVE";

std::string kind_name(ArchiveKind k) { return k == ArchiveKind::kGenerator ? "generator" : "full-gan"; }

std::string dims_str(const Shape& shape) {
  std::string s;
  for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? "x" : "") + std::to_string(shape[i]);
  return s.empty() ? "scalar" : s;
}

Shape parse_dims(const std::string& s) {
  Shape shape;
  if (s == "scalar") return shape;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, 'x')) {
    try {
      shape.push_back(std::stoll(part));
    } catch (const std::exception&) {
      throw IoError("bad tensor shape '" + s + "' in archive manifest");
    }
  }
  return shape;
}

template <typename Stored>
void read_payload(std::istream& in, Tensor& t) {
  std::vector<Stored> buf(static_cast<std::size_t>(t.numel()));
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(Stored)));
  if (!in) throw IoError("archive payload is truncated");
  for (Index i = 0; i < t.numel(); ++i) t[i] = static_cast<Real>(buf[static_cast<std::size_t>(i)]);
}

}  // namespace

const Tensor* Archive::find(const std::string& name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return &t;
  return nullptr;
}

void save_archive(const std::filesystem::path& path, const Archive& archive) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write archive " + path.string());
  out << kMagic << ' ' << kArchiveVersion << '\n';
  out << "kind " << kind_name(archive.kind) << '\n';
  out << "dtype " << (sizeof(Real) == 8 ? "f64" : "f32") << '\n';
  out << "config " << archive.config.dump() << '\n';
  Index offset = 0;
  for (const auto& [name, t] : archive.tensors) {
    check_config(!name.empty() && name.find_first_of(" \n") == std::string::npos,
                 "tensor names may not contain spaces: '" + name + "'");
    out << "tensor " << name << ' ' << dims_str(t.shape()) << ' ' << offset << ' ' << t.numel() << '\n';
    offset += t.numel();
  }
  out << "end\n";
  for (const auto& entry : archive.tensors)
    out.write(reinterpret_cast<const char*>(entry.second.data()),
              static_cast<std::streamsize>(entry.second.numel() * static_cast<Index>(sizeof(Real))));
  if (!out) throw IoError("failed while writing archive " + path.string());
}

Archive load_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open archive " + path.string());
  std::string line;
  std::getline(in, line);
  {
    std::istringstream head(line);
    std::string magic;
    int version = 0;
    head >> magic >> version;
    if (magic != kMagic) throw IoError(path.string() + " is not an LCT archive");
    if (version != kArchiveVersion)
      throw IoError("unsupported archive version " + std::to_string(version));
  }
  Archive archive;
  std::string dtype;
  struct Entry {
    std::string name;
    Shape shape;
    Index offset, count;
  };
  std::vector<Entry> entries;
  bool ended = false;
  while (!ended && std::getline(in, line)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "kind") {
      std::string k;
      ls >> k;
      if (k == "generator") archive.kind = ArchiveKind::kGenerator;
      else if (k == "full-gan") archive.kind = ArchiveKind::kFullGan;
      else throw IoError("unknown archive kind '" + k + "'");
    } else if (key == "dtype") {
      ls >> dtype;
    } else if (key == "config") {
      try {
        archive.config = nlohmann::json::parse(line.substr(7));
      } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("archive config is not valid JSON: ") + e.what());
      }
    } else if (key == "tensor") {
      Entry e;
      std::string dims;
      ls >> e.name >> dims >> e.offset >> e.count;
      if (!ls) throw IoError("malformed manifest line: " + line);
      e.shape = parse_dims(dims);
      if (shape_numel(e.shape) != e.count)
        throw IoError("tensor " + e.name + " lists " + std::to_string(e.count) +
                      " elements for shape " + dims);
      entries.push_back(std::move(e));
    } else if (key == "end") {
      ended = true;
    } else {
      throw IoError("unexpected manifest line: " + line);
    }
  }
  if (!ended) throw IoError("archive manifest has no end marker");
  if (dtype != "f32" && dtype != "f64") throw IoError("unsupported archive dtype '" + dtype + "'");
  Index expected = 0;
  for (const auto& e : entries) {
    if (e.offset != expected) throw IoError("tensor " + e.name + " has an inconsistent offset");
    expected += e.count;
    Tensor t(e.shape);
    if (dtype == "f32") read_payload<float>(in, t);
    else read_payload<double>(in, t);
    archive.tensors.emplace_back(e.name, std::move(t));
  }
  return archive;
}

void add_params(Archive& archive, const nn::ParamStore& params, const std::string& prefix) {
  for (const auto& [name, v] : params.entries()) archive.tensors.emplace_back(prefix + name, v.value());
}

void restore_params(const Archive& archive, nn::ParamStore& params, const std::string& prefix) {
  for (auto& [name, v] : params.entries()) {
    const Tensor* t = archive.find(prefix + name);
    if (!t) throw IoError("archive is missing tensor " + prefix + name);
    if (t->shape() != v.shape())
      throw IoError("tensor " + prefix + name + " has shape " + shape_str(t->shape()) +
                    ", the model expects " + shape_str(v.shape()));
    v.mutable_value() = *t;
  }
}

void save_generator(const std::filesystem::path& path, const Generator& gen) {
  Archive a;
  a.kind = ArchiveKind::kGenerator;
  a.config = {{"model", gen.config().to_json()}};
  add_params(a, gen.params(), kGeneratorPrefix);
  save_archive(path, a);
}

Generator generator_from_archive(const Archive& archive) {
  if (!archive.config.contains("model")) throw IoError("archive has no model config");
  Generator gen(ModelConfig::from_json(archive.config["model"]));
  restore_params(archive, gen.params(), kGeneratorPrefix);
  return gen;
}

Generator load_generator(const std::filesystem::path& path) {
  return generator_from_archive(load_archive(path));
}

}  // namespace model
}  // namespace LCT_PRECISION_NS
}  // namespace lct
