#include "azlab/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace azlab {

bool operator==(const Checkpoint& a, const Checkpoint& b) {
  return a.model == b.model && a.text.max_seq_length == b.text.max_seq_length &&
         a.text.doc_stride == b.text.doc_stride && a.text.max_query_length == b.text.max_query_length &&
         a.text.lowercase == b.text.lowercase && a.vocab == b.vocab && a.params == b.params &&
         a.metadata == b.metadata;
}

namespace {

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_u64(std::string_view in, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  return v;
}

[[noreturn]] void fail(const std::string& what) { throw std::runtime_error("checkpoint: " + what); }

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  check_parameters(ckpt.model, ckpt.params);
  nlohmann::json header;
  header["model"] = ckpt.model;
  header["text"] = {{"max_seq_length", ckpt.text.max_seq_length},
                    {"doc_stride", ckpt.text.doc_stride},
                    {"max_query_length", ckpt.text.max_query_length},
                    {"lowercase", ckpt.text.lowercase}};
  header["vocab"] = ckpt.vocab.tokens();
  header["metadata"] = {{"seed", ckpt.metadata.seed}, {"steps", ckpt.metadata.steps}};
  nlohmann::json params = nlohmann::json::array();
  std::size_t total = 0;
  for (const auto& [name, t] : ckpt.params) {
    params.push_back({{"name", name}, {"shape", t.shape()}});
    total += t.numel();
  }
  header["params"] = std::move(params);
  const std::string text = header.dump();

  std::string out;
  out.reserve(kCheckpointMagic.size() + 9 + text.size() + total * 8);
  out.append(kCheckpointMagic);
  out.push_back(static_cast<char>(kCheckpointVersion));
  put_u64(out, text.size());
  out.append(text);
  for (const auto& [name, t] : ckpt.params)
    for (double v : t.data()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  return out;
}

Checkpoint parse_checkpoint(std::string_view bytes) {
  const std::size_t prefix = kCheckpointMagic.size() + 1 + 8;
  if (bytes.size() < kCheckpointMagic.size() || bytes.substr(0, kCheckpointMagic.size()) != kCheckpointMagic) {
    fail("bad magic bytes, expected \"" + std::string(kCheckpointMagic) + "\"");
  }
  if (bytes.size() < prefix) fail("truncated preamble");
  const auto version = static_cast<std::uint8_t>(bytes[kCheckpointMagic.size()]);
  if (version != kCheckpointVersion) {
    fail("unsupported version " + std::to_string(version) + ", expected " + std::to_string(kCheckpointVersion));
  }
  const std::uint64_t header_len = get_u64(bytes, kCheckpointMagic.size() + 1);
  if (header_len > bytes.size() - prefix) fail("truncated header");

  Checkpoint ckpt;
  std::vector<std::pair<std::string, Shape>> layout;
  try {
    const auto header = nlohmann::json::parse(bytes.substr(prefix, header_len));
    ckpt.model = header.at("model").get<ModelConfig>();
    const auto& text = header.at("text");
    text.at("max_seq_length").get_to(ckpt.text.max_seq_length);
    text.at("doc_stride").get_to(ckpt.text.doc_stride);
    text.at("max_query_length").get_to(ckpt.text.max_query_length);
    text.at("lowercase").get_to(ckpt.text.lowercase);
    ckpt.vocab = Vocab::from_tokens(header.at("vocab").get<std::vector<std::string>>());
    header.at("metadata").at("seed").get_to(ckpt.metadata.seed);
    header.at("metadata").at("steps").get_to(ckpt.metadata.steps);
    for (const auto& p : header.at("params")) {
      layout.emplace_back(p.at("name").get<std::string>(), p.at("shape").get<Shape>());
    }
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("malformed header: ") + e.what());
  } catch (const std::invalid_argument& e) {
    fail(std::string("malformed header: ") + e.what());
  }

  std::size_t at = prefix + header_len;
  for (auto& [name, shape] : layout) {
    const std::size_t count = shape_numel(shape);
    if ((bytes.size() - at) / 8 < count) fail("truncated payload at parameter '" + name + "'");
    Tensor t(shape);
    for (std::size_t i = 0; i < count; ++i, at += 8) t[i] = std::bit_cast<double>(get_u64(bytes, at));
    if (!ckpt.params.emplace(name, std::move(t)).second) fail("duplicate parameter '" + name + "'");
  }
  if (at != bytes.size()) fail(std::to_string(bytes.size() - at) + " unexpected trailing bytes");
  try {
    ckpt.model.validate();
    check_parameters(ckpt.model, ckpt.params);
  } catch (const std::invalid_argument& e) {
    fail(std::string("shape disagreement: ") + e.what());
  }
  if (ckpt.vocab.size() != ckpt.model.vocab_size) {
    fail("vocabulary has " + std::to_string(ckpt.vocab.size()) + " entries, model expects " +
         std::to_string(ckpt.model.vocab_size));
  }
  return ckpt;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw std::runtime_error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return parse_checkpoint(read_file(path)); }

}  // namespace azlab
