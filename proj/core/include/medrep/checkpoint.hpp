#pragma once

#include <filesystem>
#include <string>

#include "medrep/config.hpp"
#include "medrep/model.hpp"

namespace medrep {

inline constexpr int kCheckpointVersion = 1;

struct VocabularyRef {
  std::string file;  // relative to the checkpoint's directory
  std::size_t size = 0;
};

/// On disk:
///   line 1  "MEDREP-CKPT"
///   line 2  compact JSON header: format_version, endianness ("little"),
///           gate_order, architecture, config echo, vocabulary refs and a
///           tensor table [{name, shape, offset}] (offset in doubles)
///   rest    every tensor's row-major values as little-endian IEEE-754
///           binary64, in table order
struct Checkpoint {
  ModelParams params;
  RunConfig config;
  VocabularyRef vocab;          // report vocabulary (V)
  VocabularyRef keyword_vocab;  // keyword-inclusive vocabulary (V_k)
};

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);

/// FileError when unreadable, ParseError on a bad magic/header, ShapeError
/// when a tensor disagrees with the recorded architecture or the payload
/// length does not add up.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace medrep
