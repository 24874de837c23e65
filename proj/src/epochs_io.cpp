#include "gazeeg/epochs_io.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>
#include <fstream>

namespace gazeeg {

using json = nlohmann::json;

namespace {

constexpr char kMagic[8] = {'G', 'Z', 'E', 'P', 'O', 'C', 'H', '1'};

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

}  // namespace

std::string_view to_string(EpochKind k) {
  return k == EpochKind::Fixation ? "fixation" : "saccade";
}

EpochKind epoch_kind_from_string(std::string_view s) {
  if (s == "fixation") return EpochKind::Fixation;
  if (s == "saccade") return EpochKind::Saccade;
  throw Error(ErrorCode::SchemaError, "unknown epoch kind '" + std::string(s) + "'");
}

void write_epochs(const EpochFile& file, const std::filesystem::path& path) {
  json header;
  header["format"] = "gazeeg-epochs/1";
  header["dtype"] = "float64-le";
  header["channels"] = file.channels;
  header["fs_hz"] = file.fs_hz;
  header["provenance"] = file.provenance;
  json list = json::array();
  std::uint64_t offset = 0;
  for (const auto& e : file.epochs) {
    if (e.n_channels() != static_cast<Eigen::Index>(file.channels.size())) {
      throw Error(ErrorCode::SchemaError, "epoch channel count differs from header");
    }
    list.push_back({{"kind", to_string(e.kind)},
                    {"participant_id", e.participant_id},
                    {"trial_id", e.trial_id},
                    {"label", to_string(e.label)},
                    {"scene_domain", to_string(e.scene_domain)},
                    {"onset_ms", e.onset_ms},
                    {"duration_ms", e.duration_ms},
                    {"source_index", e.source_index},
                    {"n_samples", e.n_samples()},
                    {"offset", offset}});
    offset += static_cast<std::uint64_t>(e.data.size());
  }
  header["epochs"] = list;
  header["n_values"] = offset;

  const std::string text = header.dump();
  std::string out(kMagic, sizeof kMagic);
  put_u64(out, text.size());
  out += text;
  out.reserve(out.size() + offset * 8);
  for (const auto& e : file.epochs) {
    for (Eigen::Index c = 0; c < e.data.rows(); ++c) {
      for (Eigen::Index s = 0; s < e.data.cols(); ++s) put_u64(out, std::bit_cast<std::uint64_t>(e.data(c, s)));
    }
  }

  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

EpochFile read_epochs(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::MissingFile, path.string());
  const std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 8) != 0) {
    throw Error(ErrorCode::SchemaError, path.string() + ": not an epochs container");
  }
  const auto* raw = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint64_t header_len = get_u64(raw + 8);
  if (header_len > bytes.size() - 16) throw Error(ErrorCode::IoError, path.string() + ": truncated header");

  EpochFile out;
  std::uint64_t n_values = 0;
  json header;
  try {
    header = json::parse(bytes.substr(16, header_len));
    if (header.at("format").get<std::string>() != "gazeeg-epochs/1") {
      throw Error(ErrorCode::SchemaError, path.string() + ": unsupported format");
    }
    out.channels = header.at("channels").get<std::vector<std::string>>();
    out.fs_hz = header.at("fs_hz").get<double>();
    out.provenance = header.value("provenance", std::map<std::string, std::string>{});
    n_values = header.at("n_values").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError, path.string() + ": " + e.what());
  }
  const std::size_t data_start = 16 + header_len;
  if ((bytes.size() - data_start) / 8 < n_values) {
    throw Error(ErrorCode::IoError, path.string() + ": truncated sample payload");
  }

  const auto n_ch = static_cast<Eigen::Index>(out.channels.size());
  try {
    for (const auto& je : header.at("epochs")) {
      Epoch e;
      e.kind = epoch_kind_from_string(je.at("kind").get<std::string>());
      e.participant_id = je.at("participant_id").get<std::string>();
      e.trial_id = je.at("trial_id").get<int>();
      e.label = label_from_string(je.at("label").get<std::string>());
      e.scene_domain = domain_from_string(je.at("scene_domain").get<std::string>());
      e.onset_ms = je.at("onset_ms").get<double>();
      e.duration_ms = je.at("duration_ms").get<double>();
      e.source_index = je.at("source_index").get<int>();
      const auto ns = je.at("n_samples").get<Eigen::Index>();
      const auto off = je.at("offset").get<std::uint64_t>();
      if (ns < 0 || off + static_cast<std::uint64_t>(ns * n_ch) > n_values) {
        throw Error(ErrorCode::SchemaError, path.string() + ": epoch outside sample payload");
      }
      e.data.resize(n_ch, ns);
      const auto* p = raw + data_start + off * 8;
      for (Eigen::Index c = 0; c < n_ch; ++c) {
        for (Eigen::Index s = 0; s < ns; ++s, p += 8) e.data(c, s) = std::bit_cast<double>(get_u64(p));
      }
      out.epochs.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError, path.string() + ": " + e.what());
  }
  return out;
}

}  // namespace gazeeg
