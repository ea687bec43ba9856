#include "ascsw/weights_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

#include <json.hpp>

#include "ascsw/error.hpp"

namespace ascsw::nn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;
constexpr const char* kFormatName = "ascsw-weights";

class BlobWriter {
 public:
  void add(const std::string& name, std::vector<int> shape, const std::vector<float>& values) {
    json t;
    t["name"] = name;
    t["shape"] = shape;
    t["offset"] = bytes_.size();
    t["count"] = values.size();
    tensors_.push_back(std::move(t));
    for (float f : values) {
      const auto bits = std::bit_cast<std::uint32_t>(f);
      for (int b = 0; b < 4; ++b) bytes_.push_back(static_cast<std::uint8_t>((bits >> (8 * b)) & 0xFF));
    }
  }

  void add_conv(const std::string& prefix, const ConvWeights& w) {
    add(prefix + ".weight", {w.out_channels, w.in_channels, w.kernel_h, w.kernel_w}, w.weights);
    add(prefix + ".bias", {w.out_channels}, w.bias);
  }

  void add_strip(const std::string& prefix, const StripKernel& k) {
    add(prefix + ".weight", {k.out_channels, k.in_channels, k.length}, k.weights);
    add(prefix + ".bias", {k.out_channels}, k.bias);
  }

  const json& tensors() const { return tensors_; }
  const std::vector<std::uint8_t>& bytes() const { return bytes_; }

 private:
  json tensors_ = json::array();
  std::vector<std::uint8_t> bytes_;
};

class BlobReader {
 public:
  BlobReader(const json& tensors, std::vector<std::uint8_t> bytes) : bytes_(std::move(bytes)) {
    for (const auto& t : tensors) index_[t.at("name").get<std::string>()] = t;
  }

  std::vector<float> get(const std::string& name, const std::vector<int>& expected_shape) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ValidationError("weights: missing tensor '" + name + "'");
    const json& t = it->second;
    const auto shape = t.at("shape").get<std::vector<int>>();
    if (shape != expected_shape) throw ValidationError("weights: tensor '" + name + "' has unexpected shape");
    const auto offset = t.at("offset").get<std::size_t>();
    const auto count = t.at("count").get<std::size_t>();
    std::size_t expected_count = 1;
    for (int d : shape) expected_count *= static_cast<std::size_t>(d);
    if (count != expected_count) throw ValidationError("weights: tensor '" + name + "' count disagrees with shape");
    if (offset % 4 != 0 || offset + 4 * count > bytes_.size()) {
      throw ValidationError("weights: tensor '" + name + "' lies outside the blob");
    }
    std::vector<float> out(count);
    for (std::size_t i = 0; i < count; ++i) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(bytes_[offset + 4 * i + b]) << (8 * b);
      out[i] = std::bit_cast<float>(bits);
    }
    return out;
  }

  ConvWeights conv(const std::string& prefix, int out, int in, int kh, int kw) const {
    ConvWeights w(out, in, kh, kw);
    w.weights = get(prefix + ".weight", {out, in, kh, kw});
    w.bias = get(prefix + ".bias", {out});
    return w;
  }

  StripKernel strip(const std::string& prefix, StripOrientation o, int length, int d, int out, int in) const {
    StripKernel k(o, length, d, out, in);
    k.weights = get(prefix + ".weight", {out, in, length});
    k.bias = get(prefix + ".bias", {out});
    return k;
  }

 private:
  std::vector<std::uint8_t> bytes_;
  std::map<std::string, json> index_;
};

json asconv_topology(const ASConvParams& p) {
  json t;
  t["in_channels"] = p.in_channels();
  t["out_channels"] = p.out_channels();
  t["strip_length"] = p.branches.front().vertical.length;
  json rates = json::array();
  for (const auto& b : p.branches) rates.push_back(b.dilation);
  t["dilations"] = rates;
  return t;
}

void write_asconv(BlobWriter& w, const std::string& prefix, const ASConvParams& p) {
  for (std::size_t j = 0; j < p.branches.size(); ++j) {
    const std::string b = prefix + "branch." + std::to_string(j);
    w.add_strip(b + ".vertical", p.branches[j].vertical);
    w.add_strip(b + ".horizontal", p.branches[j].horizontal);
  }
  w.add_conv(prefix + "fusion", p.fusion);
}

ASConvParams read_asconv(const BlobReader& r, const std::string& prefix, const json& topo) {
  const int in = topo.at("in_channels").get<int>();
  const int out = topo.at("out_channels").get<int>();
  const int len = topo.at("strip_length").get<int>();
  ASConvParams p;
  const auto rates = topo.at("dilations").get<std::vector<int>>();
  for (std::size_t j = 0; j < rates.size(); ++j) {
    const std::string b = prefix + "branch." + std::to_string(j);
    ASConvBranch branch;
    branch.dilation = rates[j];
    branch.vertical = r.strip(b + ".vertical", StripOrientation::kVertical, len, rates[j], out, in);
    branch.horizontal = r.strip(b + ".horizontal", StripOrientation::kHorizontal, len, rates[j], out, out);
    p.branches.push_back(std::move(branch));
  }
  p.fusion = r.conv(prefix + "fusion", out, out, 1, 1);
  p.check();
  return p;
}

}  // namespace

std::string block_type_name(const BlockParams& block) {
  switch (block.index()) {
    case 0:
      return "asconv";
    case 1:
      return "ascspp";
    default:
      return "channel_attention";
  }
}

void save_weights(const fs::path& manifest_path, const BlockParams& block) {
  BlobWriter writer;
  json topo;
  if (const auto* a = std::get_if<ASConvParams>(&block)) {
    a->check();
    topo = asconv_topology(*a);
    write_asconv(writer, "", *a);
  } else if (const auto* s = std::get_if<ASCSPPParams>(&block)) {
    s->check();
    topo["channels"] = s->in_channels();
    topo["branch_channels"] = s->branch_channels();
    topo["atrous"] = json::array();
    writer.add_conv("pointwise", s->pointwise);
    for (std::size_t i = 0; i < s->atrous.size(); ++i) {
      topo["atrous"].push_back(asconv_topology(s->atrous[i]));
      write_asconv(writer, "atrous." + std::to_string(i) + ".", s->atrous[i]);
    }
    writer.add_conv("pool", s->pool);
    writer.add_conv("projection", s->projection);
  } else {
    const auto& c = std::get<ChannelAttentionParams>(block);
    topo["channels"] = c.conv.out_channels;
    writer.add_conv("conv", c.conv);
  }

  fs::path blob_path = manifest_path;
  blob_path.replace_extension(".bin");
  json manifest;
  manifest["format"] = kFormatName;
  manifest["version"] = kFormatVersion;
  manifest["dtype"] = "float32";
  manifest["byte_order"] = "little";
  manifest["blob"] = blob_path.filename().string();
  manifest["blob_bytes"] = writer.bytes().size();
  manifest["block"] = block_type_name(block);
  manifest["topology"] = topo;
  manifest["tensors"] = writer.tensors();

  if (manifest_path.has_parent_path()) fs::create_directories(manifest_path.parent_path());
  std::ofstream blob(blob_path, std::ios::binary | std::ios::trunc);
  if (!blob) throw IoError("cannot write " + blob_path.string());
  blob.write(reinterpret_cast<const char*>(writer.bytes().data()), static_cast<std::streamsize>(writer.bytes().size()));
  std::ofstream js(manifest_path, std::ios::trunc);
  if (!js) throw IoError("cannot write " + manifest_path.string());
  js << manifest.dump(2) << '\n';
  if (!blob || !js) throw IoError("failed writing weight container " + manifest_path.string());
}

BlockParams load_weights(const fs::path& manifest_path) {
  std::ifstream js(manifest_path);
  if (!js) throw IoError("cannot open " + manifest_path.string());
  json manifest;
  try {
    manifest = json::parse(js);
  } catch (const json::exception& e) {
    throw ValidationError(manifest_path.string() + ": " + e.what());
  }

  try {
    if (manifest.value("format", "") != kFormatName) throw ValidationError("weights: unknown container format");
    if (manifest.at("version").get<int>() != kFormatVersion) throw ValidationError("weights: unsupported version");
    if (manifest.at("dtype").get<std::string>() != "float32") throw ValidationError("weights: dtype must be float32");

    const fs::path blob_path = manifest_path.parent_path() / manifest.at("blob").get<std::string>();
    std::ifstream blob(blob_path, std::ios::binary);
    if (!blob) throw IoError("cannot open " + blob_path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(blob)), std::istreambuf_iterator<char>());
    if (bytes.size() != manifest.at("blob_bytes").get<std::size_t>()) {
      throw ValidationError("weights: blob size disagrees with manifest");
    }
    const BlobReader reader(manifest.at("tensors"), std::move(bytes));
    const json& topo = manifest.at("topology");
    const std::string type = manifest.at("block").get<std::string>();

    if (type == "asconv") return read_asconv(reader, "", topo);
    if (type == "ascspp") {
      ASCSPPParams p;
      const int c = topo.at("channels").get<int>();
      const int b = topo.at("branch_channels").get<int>();
      p.pointwise = reader.conv("pointwise", b, c, 1, 1);
      const auto& atrous = topo.at("atrous");
      for (std::size_t i = 0; i < atrous.size(); ++i) {
        p.atrous.push_back(read_asconv(reader, "atrous." + std::to_string(i) + ".", atrous[i]));
      }
      p.pool = reader.conv("pool", b, c, 1, 1);
      p.projection = reader.conv("projection", c, b * static_cast<int>(2 + p.atrous.size()), 1, 1);
      p.check();
      return p;
    }
    if (type == "channel_attention") {
      const int c = topo.at("channels").get<int>();
      return ChannelAttentionParams{reader.conv("conv", c, c, 1, 1)};
    }
    throw ValidationError("weights: unknown block type '" + type + "'");
  } catch (const json::exception& e) {
    throw ValidationError(manifest_path.string() + ": " + e.what());
  }
}

}  // namespace ascsw::nn
