#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fragkit/binary_io.hpp"

namespace fragkit {

/// A contiguous byte slice of a source file.
class Fragment {
 public:
  Fragment() = default;
  Fragment(Bytes bytes, std::uint32_t file_id = 0, std::uint64_t offset = 0)
      : bytes_(std::move(bytes)), file_id_(file_id), offset_(offset) {}

  std::span<const std::uint8_t> bytes() const { return bytes_; }
  std::size_t size() const { return bytes_.size(); }
  std::uint32_t file_id() const { return file_id_; }
  std::uint64_t offset() const { return offset_; }

  friend bool operator==(const Fragment&, const Fragment&) = default;

 private:
  Bytes bytes_;
  std::uint32_t file_id_ = 0;
  std::uint64_t offset_ = 0;
};

struct ExtractionParams {
  std::vector<std::size_t> sizes{1024};
  double head_discard = 0.0;
  double tail_discard = 0.0;
  std::size_t max_fragments = 1000;
  std::uint64_t rng_seed = 0;

  /// Throws a parameter error if any field is out of range.
  void validate() const;
};

/// Cuts a file into consecutive fragments with lengths drawn uniformly from
/// params.sizes, then drops floor(head_discard*N) leading and
/// floor(tail_discard*N) trailing fragments. A remainder shorter than the
/// drawn size ends the scan.
std::vector<Fragment> segment_file(std::span<const std::uint8_t> file_bytes,
                                   const ExtractionParams& params, std::uint32_t file_id = 0);

/// Uniform sample without replacement of up to params.max_fragments candidates,
/// returned in offset order.
std::vector<Fragment> extract_fragments(const std::vector<Fragment>& candidates,
                                        const ExtractionParams& params);

inline constexpr std::uint16_t kArchiveVersion = 1;

struct ArchiveRecord {
  std::uint32_t file_id = 0;
  Bytes bytes;

  friend bool operator==(const ArchiveRecord&, const ArchiveRecord&) = default;
};

/// All fragments of one class. Records of one file are contiguous.
struct FragmentArchive {
  std::string class_name;
  std::vector<ArchiveRecord> records;
  std::uint16_t format_version = kArchiveVersion;

  friend bool operator==(const FragmentArchive&, const FragmentArchive&) = default;
};

Bytes encode_archive(const FragmentArchive& archive);
FragmentArchive decode_archive(std::span<const std::uint8_t> data);

void write_archive(const FragmentArchive& archive, const std::filesystem::path& path);
FragmentArchive read_archive(const std::filesystem::path& path);

/// Legacy import: splits a raw concatenation of fixed-size fragments. Each
/// fragment is treated as coming from its own file.
FragmentArchive import_raw_concatenation(std::span<const std::uint8_t> data,
                                         std::size_t fragment_size, std::string class_name);

struct CorpusScan {
  std::vector<FragmentArchive> archives;
  std::vector<std::string> warnings;
};

/// One archive per immediate subfolder of `root`, in lexicographic folder
/// order. Files (recursive, sorted by path) get consecutive file ids across
/// the whole corpus. `out_dir` must not lie inside `root`.
CorpusScan scan_corpus(const std::filesystem::path& root, const std::filesystem::path& out_dir,
                       const ExtractionParams& params);

/// True when `inner` equals `outer` or lies beneath it (lexically, after
/// resolving what exists on disk).
bool path_is_within(const std::filesystem::path& inner, const std::filesystem::path& outer);

}  // namespace fragkit
