#pragma once

#include "gazeeg/eeg.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace gazeeg {

/// Contents of an epochs.bin container.
///
/// Layout: 8-byte magic "GZEPOCH1", uint64 little-endian header length, a
/// UTF-8 JSON header of that length, then float64 little-endian samples.
/// Each epoch occupies channels x n_samples values, channel-major, starting
/// at its `offset` (in values, relative to the first sample byte).
struct EpochFile {
  std::vector<std::string> channels;
  double fs_hz = 0.0;
  std::vector<Epoch> epochs;
  std::map<std::string, std::string> provenance;
};

void write_epochs(const EpochFile& file, const std::filesystem::path& path);

/// Throws MissingFile, SchemaError (bad magic, header or shapes) or IoError
/// (truncated payload).
EpochFile read_epochs(const std::filesystem::path& path);

std::string_view to_string(EpochKind k);
EpochKind epoch_kind_from_string(std::string_view s);

}  // namespace gazeeg
