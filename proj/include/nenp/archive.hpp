#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "nenp/corpus_stats.hpp"
#include "nenp/model.hpp"

namespace nenp {

/// Binary model container, little-endian:
///   "NENP1"
///   u32 length + configuration text (key=value lines, vocabularies, labels, lexicon path)
///   u32 tensor count, then per tensor: u32 name length, name, u32 rank, u32 dims, f32 payload
///   u64 checksum of the lexicon the model was trained with
/// Tensors are stored column-major in 32-bit floats.
struct ModelArchive {
    ModelParams params;
    std::string lexicon_path;
    std::uint64_t lexicon_checksum = 0;
};

inline constexpr char archive_magic[] = "NENP1";

void write_archive(std::ostream& os, ModelArchive const& archive);
ModelArchive read_archive(std::istream& is);
void save_archive(std::string const& path, ModelArchive const& archive);
ModelArchive load_archive(std::string const& path);

/// Throws a checksum error when `lexicon` is not the one recorded in the archive.
void verify_lexicon(ModelArchive const& archive, NGramLexicon const& lexicon);

} // namespace nenp
