#include "hnsf/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace hnsf {

namespace {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

void write_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint64_t read_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

struct Entry {
  std::string name;
  std::vector<std::size_t> shape;
  const double* data;
  std::size_t count;
};

void write_container(const std::string& path, const std::vector<Entry>& entries,
                     const std::string& meta_json) {
  json manifest;
  manifest["format"] = "NSFCKPT1";
  manifest["meta"] = json::parse(meta_json);
  json plist = json::array();
  std::uint64_t offset = 0;
  for (const auto& e : entries) {
    json p;
    p["name"] = e.name;
    p["shape"] = e.shape;
    p["offset"] = offset;
    plist.push_back(std::move(p));
    offset += e.count * sizeof(double);
  }
  manifest["params"] = std::move(plist);
  const std::string mtext = manifest.dump();

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  os.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  write_u64(os, mtext.size());
  os.write(mtext.data(), static_cast<std::streamsize>(mtext.size()));
  for (const auto& e : entries) {
    os.write(reinterpret_cast<const char*>(e.data),
             static_cast<std::streamsize>(e.count * sizeof(double)));
  }
  if (!os) throw std::runtime_error("checkpoint write failed: " + path);
}

struct LoadedContainer {
  json manifest;
  std::vector<char> payload;
};

LoadedContainer read_container(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw std::runtime_error("not a checkpoint file (bad magic): " + path);
  }
  const std::uint64_t mlen = read_u64(is);
  std::string mtext(mlen, '\0');
  is.read(mtext.data(), static_cast<std::streamsize>(mlen));
  if (!is) throw std::runtime_error("truncated checkpoint manifest: " + path);
  LoadedContainer out;
  out.manifest = json::parse(mtext);
  out.payload.assign(std::istreambuf_iterator<char>(is),
                     std::istreambuf_iterator<char>());
  return out;
}

std::vector<double> extract_array(const LoadedContainer& c, const json& entry) {
  const std::uint64_t offset = entry.at("offset").get<std::uint64_t>();
  std::size_t count = 1;
  for (auto d : entry.at("shape")) count *= d.get<std::size_t>();
  if (offset + count * sizeof(double) > c.payload.size()) {
    throw std::runtime_error("checkpoint payload truncated at parameter " +
                             entry.at("name").get<std::string>());
  }
  std::vector<double> v(count);
  std::memcpy(v.data(), c.payload.data() + offset, count * sizeof(double));
  return v;
}

constexpr const char* kOptimPrefix = "optim.adam.";

}  // namespace

void save_checkpoint(const std::string& path, const nn::ParameterStore& params,
                     const nn::Adam* optim, const std::string& meta_json) {
  std::vector<Entry> entries;
  for (const auto& p : params.items()) {
    entries.push_back(
        {p.name, p.tensor.shape(), p.tensor.values().data(), p.tensor.size()});
  }
  std::vector<double> counters;
  std::vector<std::vector<double>> moments;
  if (optim) {
    auto* opt = const_cast<nn::Adam*>(optim);
    moments.reserve(2 * params.items().size());
    for (std::size_t i = 0; i < params.items().size(); ++i) {
      moments.push_back(opt->moment1(i));
      moments.push_back(opt->moment2(i));
      const auto& name = params.items()[i].name;
      const auto shape = params.items()[i].tensor.shape();
      const auto& m1 = moments[moments.size() - 2];
      const auto& m2 = moments[moments.size() - 1];
      entries.push_back({std::string(kOptimPrefix) + "m." + name, shape,
                         m1.data(), m1.size()});
      entries.push_back({std::string(kOptimPrefix) + "v." + name, shape,
                         m2.data(), m2.size()});
    }
    counters = {static_cast<double>(optim->step_count()),
                static_cast<double>(optim->skipped_steps())};
    entries.push_back({std::string(kOptimPrefix) + "counters", {2},
                       counters.data(), counters.size()});
  }
  write_container(path, entries, meta_json);
}

std::string load_checkpoint(const std::string& path, nn::ParameterStore& params,
                            nn::Adam* optim) {
  LoadedContainer c = read_container(path);
  const json& plist = c.manifest.at("params");

  auto find_entry = [&](const std::string& name) -> const json* {
    for (const auto& e : plist) {
      if (e.at("name").get<std::string>() == name) return &e;
    }
    return nullptr;
  };

  for (auto& p : params.items()) {
    const json* e = find_entry(p.name);
    if (!e) {
      throw std::runtime_error("checkpoint is missing parameter '" + p.name +
                               "'");
    }
    std::vector<std::size_t> shape =
        e->at("shape").get<std::vector<std::size_t>>();
    if (shape != p.tensor.shape()) {
      throw std::runtime_error("checkpoint parameter '" + p.name +
                               "' has shape " + ad::shape_str(shape) +
                               ", model expects " +
                               ad::shape_str(p.tensor.shape()));
    }
    p.tensor.mutable_values() = extract_array(c, *e);
  }

  if (optim) {
    for (std::size_t i = 0; i < params.items().size(); ++i) {
      const auto& name = params.items()[i].name;
      const json* me = find_entry(std::string(kOptimPrefix) + "m." + name);
      const json* ve = find_entry(std::string(kOptimPrefix) + "v." + name);
      if (me && ve) {
        optim->moment1(i) = extract_array(c, *me);
        optim->moment2(i) = extract_array(c, *ve);
      }
    }
    if (const json* ce = find_entry(std::string(kOptimPrefix) + "counters")) {
      auto cv = extract_array(c, *ce);
      optim->set_counters(static_cast<std::int64_t>(cv[0]),
                          static_cast<std::int64_t>(cv[1]));
    }
  }
  return c.manifest.at("meta").dump();
}

std::string read_checkpoint_meta(const std::string& path) {
  LoadedContainer c = read_container(path);
  return c.manifest.at("meta").dump();
}

}  // namespace hnsf
