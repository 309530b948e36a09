#include "checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "error.hpp"

namespace aosr {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'A', 'O', 'S', 'R', 'P', 'A', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put_le(std::string& out, T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  out.append(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T get_le(const char* p) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void write_bytes_atomic(const std::filesystem::path& path, const std::string& bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::Io, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorCode::Io, "short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorCode::Io, "cannot rename " + tmp.string() + ": " + ec.message());
}

json ols_to_json(const OLSParams& p) { return json::array({p.p_min, p.p_max, p.p_a_min, p.p_a_max}); }

OLSParams ols_from_json(const json& j) {
  if (!j.is_array() || j.size() != 4)
    fail(ErrorCode::Format, "OLS parameters must be [p_min, p_max, p_a_min, p_a_max]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

}  // namespace

void require_known_keys(const json& j, std::initializer_list<const char*> known, const std::string& where) {
  if (!j.is_object()) fail(ErrorCode::Format, where + " must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; }))
      fail(ErrorCode::Format, "unknown key '" + key + "' in " + where);
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  write_bytes_atomic(path, text);
}

void write_container(const Container& c, const std::filesystem::path& path) {
  json header;
  header["meta"] = c.meta;
  json entries = json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, t] : c.tensors) {
    const Shape& s = t.shape();
    entries.push_back({{"name", name},
                       {"dtype", "f64"},
                       {"shape", {s.n, s.c, s.h, s.w}},
                       {"offset", offset},
                       {"count", t.numel()}});
    offset += t.numel() * sizeof(double);
  }
  header["tensors"] = std::move(entries);
  const std::string text = header.dump();

  std::string bytes(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(bytes, kVersion);
  put_le<std::uint64_t>(bytes, text.size());
  bytes += text;
  bytes.reserve(bytes.size() + offset);
  for (const auto& [name, t] : c.tensors)
    for (double v : t.values()) put_le<double>(bytes, v);
  write_bytes_atomic(path, bytes);
}

Container read_container(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(ErrorCode::Io, "no such file: " + path.string());
  const std::string bytes = read_file(path);
  constexpr std::size_t fixed = sizeof(kMagic) + 4 + 8;
  if (bytes.size() < fixed || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
    fail(ErrorCode::Format, path.string() + " is not a parameter container");
  const auto version = get_le<std::uint32_t>(bytes.data() + 8);
  if (version != kVersion)
    fail(ErrorCode::Format, "unsupported container version " + std::to_string(version));
  const auto hlen = get_le<std::uint64_t>(bytes.data() + 12);
  if (bytes.size() < fixed + hlen) fail(ErrorCode::Format, "truncated container header");

  json header;
  try {
    header = json::parse(bytes.substr(fixed, hlen));
  } catch (const json::exception& e) {
    fail(ErrorCode::Format, std::string("bad container header: ") + e.what());
  }
  const std::size_t payload = fixed + hlen;
  Container c;
  c.meta = header.value("meta", json::object());
  for (const auto& e : header.at("tensors")) {
    if (e.at("dtype") != "f64") fail(ErrorCode::Format, "unsupported dtype");
    const auto sh = e.at("shape").get<std::vector<int>>();
    if (sh.size() != 4) fail(ErrorCode::Format, "tensor shapes must have 4 dims");
    const Shape s{sh[0], sh[1], sh[2], sh[3]};
    const auto off = e.at("offset").get<std::uint64_t>();
    const auto count = e.at("count").get<std::uint64_t>();
    if (count != s.numel()) fail(ErrorCode::Format, "tensor count does not match shape");
    if (payload + off + count * sizeof(double) > bytes.size())
      fail(ErrorCode::Format, "truncated tensor payload");
    std::vector<double> v(count);
    const char* p = bytes.data() + payload + off;
    for (std::size_t i = 0; i < count; ++i) v[i] = get_le<double>(p + i * sizeof(double));
    c.tensors.emplace(e.at("name").get<std::string>(), Tensor(s, std::move(v)));
  }
  return c;
}

json config_to_json(const NetworkConfig& cfg) {
  json ols = json::array();
  for (const auto& t : cfg.ols_triples) ols.push_back(ols_to_json(t));
  return {{"base_channels", cfg.base_channels},
          {"gamma_bank", cfg.gamma_bank.gammas},
          {"gamma_epsilon", cfg.gamma_bank.epsilon},
          {"ols_triples", ols},
          {"atrous_rates", cfg.atrous_rates},
          {"edfm_channels", cfg.edfm_channels},
          {"prelu_init", cfg.prelu_init},
          {"use_dem", cfg.use_dem},
          {"use_crm", cfg.use_crm},
          {"use_mem", cfg.use_mem}};
}

NetworkConfig config_from_json(const json& j) {
  NetworkConfig cfg;
  require_known_keys(j,
                     {"base_channels", "gamma_bank", "gamma_epsilon", "ols_triples", "atrous_rates",
                      "edfm_channels", "prelu_init", "use_dem", "use_crm", "use_mem"},
                     "network config");
  try {
    cfg.base_channels = j.value("base_channels", cfg.base_channels);
    if (j.contains("gamma_bank")) cfg.gamma_bank.gammas = j.at("gamma_bank").get<std::vector<double>>();
    cfg.gamma_bank.epsilon = j.value("gamma_epsilon", cfg.gamma_bank.epsilon);
    if (j.contains("ols_triples")) {
      const auto& arr = j.at("ols_triples");
      if (!arr.is_array() || arr.size() != 3)
        fail(ErrorCode::InvalidArgument, "ols_triples must list exactly 3 parameter sets");
      for (std::size_t i = 0; i < 3; ++i) cfg.ols_triples[i] = ols_from_json(arr[i]);
    }
    if (j.contains("atrous_rates")) {
      const auto v = j.at("atrous_rates").get<std::vector<int>>();
      if (v.size() != 4) fail(ErrorCode::InvalidArgument, "atrous_rates must list exactly 4 rates");
      std::copy(v.begin(), v.end(), cfg.atrous_rates.begin());
    }
    if (j.contains("edfm_channels")) {
      const auto v = j.at("edfm_channels").get<std::vector<int>>();
      if (v.size() != 3) fail(ErrorCode::InvalidArgument, "edfm_channels must list exactly 3 widths");
      std::copy(v.begin(), v.end(), cfg.edfm_channels.begin());
    }
    cfg.prelu_init = j.value("prelu_init", cfg.prelu_init);
    cfg.use_dem = j.value("use_dem", cfg.use_dem);
    cfg.use_crm = j.value("use_crm", cfg.use_crm);
    cfg.use_mem = j.value("use_mem", cfg.use_mem);
  } catch (const json::exception& e) {
    fail(ErrorCode::Format, std::string("bad network config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  ck.validate();
  Container c;
  c.meta = {{"kind", "aosrnet"},
            {"config", config_to_json(ck.config)},
            {"training",
             {{"epochs", ck.meta.epochs},
              {"loss_weights", ck.meta.loss_weights},
              {"seed", ck.meta.seed}}}};
  c.tensors = ck.params;
  write_container(c, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  Container c = read_container(path);
  if (c.meta.value("kind", "") != "aosrnet")
    fail(ErrorCode::Format, path.string() + " is not a network checkpoint");
  Checkpoint ck;
  ck.config = config_from_json(c.meta.at("config"));
  const json& tr = c.meta.value("training", json::object());
  ck.meta.epochs = tr.value("epochs", 0);
  if (tr.contains("loss_weights")) {
    const auto w = tr.at("loss_weights").get<std::vector<double>>();
    if (w.size() == 3) std::copy(w.begin(), w.end(), ck.meta.loss_weights.begin());
  }
  ck.meta.seed = tr.value("seed", std::uint64_t{0});
  ck.params = std::move(c.tensors);
  ck.validate();
  return ck;
}

}  // namespace aosr
