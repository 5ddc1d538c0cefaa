#include "fragkit/fragstore.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "fragkit/error.hpp"
#include "fragkit/parallel.hpp"

namespace fragkit {

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[4] = {'F', 'R', 'A', 'G'};

std::uint64_t segment_stream(std::uint32_t file_id) { return 2ULL * file_id; }
std::uint64_t sample_stream(std::uint32_t file_id) { return 2ULL * file_id + 1; }

}  // namespace

void ExtractionParams::validate() const {
  if (sizes.empty()) throw parameter_error("fragment sizes must not be empty");
  for (auto s : sizes) {
    if (s < 1) throw parameter_error("fragment sizes must be >= 1");
  }
  auto fraction_ok = [](double f) { return std::isfinite(f) && f >= 0.0 && f <= 0.25; };
  if (!fraction_ok(head_discard)) throw parameter_error("head discard must lie in [0, 0.25]");
  if (!fraction_ok(tail_discard)) throw parameter_error("tail discard must lie in [0, 0.25]");
  if (max_fragments < 1 || max_fragments > 1000) {
    throw parameter_error("max fragments per file must lie in [1, 1000]");
  }
}

std::vector<Fragment> segment_file(std::span<const std::uint8_t> file_bytes,
                                   const ExtractionParams& params, std::uint32_t file_id) {
  params.validate();
  std::vector<Fragment> segments;
  if (file_bytes.size() < *std::min_element(params.sizes.begin(), params.sizes.end())) {
    return segments;
  }
  std::mt19937_64 rng(derive_seed(params.rng_seed, segment_stream(file_id)));
  std::uniform_int_distribution<std::size_t> pick(0, params.sizes.size() - 1);
  std::size_t offset = 0;
  for (;;) {
    std::size_t len = params.sizes.size() == 1 ? params.sizes[0] : params.sizes[pick(rng)];
    if (file_bytes.size() - offset < len) break;
    auto slice = file_bytes.subspan(offset, len);
    segments.emplace_back(Bytes(slice.begin(), slice.end()), file_id, offset);
    offset += len;
  }
  const auto n = segments.size();
  const auto head = static_cast<std::size_t>(std::floor(params.head_discard * static_cast<double>(n)));
  const auto tail = static_cast<std::size_t>(std::floor(params.tail_discard * static_cast<double>(n)));
  if (head + tail >= n) return {};
  segments.erase(segments.end() - static_cast<std::ptrdiff_t>(tail), segments.end());
  segments.erase(segments.begin(), segments.begin() + static_cast<std::ptrdiff_t>(head));
  return segments;
}

std::vector<Fragment> extract_fragments(const std::vector<Fragment>& candidates,
                                        const ExtractionParams& params) {
  params.validate();
  if (candidates.size() <= params.max_fragments) {
    auto out = candidates;
    std::stable_sort(out.begin(), out.end(),
                     [](const Fragment& a, const Fragment& b) { return a.offset() < b.offset(); });
    return out;
  }
  std::vector<std::size_t> index(candidates.size());
  for (std::size_t i = 0; i < index.size(); ++i) index[i] = i;
  std::vector<std::size_t> chosen;
  chosen.reserve(params.max_fragments);
  std::mt19937_64 rng(derive_seed(params.rng_seed, sample_stream(candidates.front().file_id())));
  std::sample(index.begin(), index.end(), std::back_inserter(chosen), params.max_fragments, rng);
  std::vector<Fragment> out;
  out.reserve(chosen.size());
  for (auto i : chosen) out.push_back(candidates[i]);
  std::stable_sort(out.begin(), out.end(),
                   [](const Fragment& a, const Fragment& b) { return a.offset() < b.offset(); });
  return out;
}

Bytes encode_archive(const FragmentArchive& archive) {
  if (archive.class_name.size() > 0xFFFF) throw parameter_error("class name longer than 65535 bytes");
  if (archive.records.size() > 0xFFFFFFFFULL) throw parameter_error("too many records for one archive");
  ByteWriter w;
  w.raw(std::span(reinterpret_cast<const std::uint8_t*>(kMagic), 4));
  w.u16(archive.format_version);
  w.u16(static_cast<std::uint16_t>(archive.class_name.size()));
  w.raw(archive.class_name);
  w.u32(static_cast<std::uint32_t>(archive.records.size()));
  for (const auto& r : archive.records) {
    if (r.bytes.empty()) throw parameter_error("archive records must be non-empty");
    if (r.bytes.size() > 0xFFFFFFFFULL) throw parameter_error("record longer than u32 range");
    w.u32(r.file_id);
    w.u32(static_cast<std::uint32_t>(r.bytes.size()));
    w.raw(r.bytes);
  }
  return w.take();
}

FragmentArchive decode_archive(std::span<const std::uint8_t> data) {
  ByteReader r(data);
  auto magic = r.raw(4, "magic");
  if (!std::equal(magic.begin(), magic.end(), kMagic)) {
    throw format_error("bad archive magic at byte offset 0");
  }
  FragmentArchive archive;
  const auto version_offset = r.offset();
  archive.format_version = r.u16();
  if (archive.format_version != kArchiveVersion) {
    throw format_error("unsupported archive version " + std::to_string(archive.format_version) +
                       " at byte offset " + std::to_string(version_offset));
  }
  auto name_len = r.u16();
  auto name = r.raw(name_len, "class name");
  archive.class_name.assign(name.begin(), name.end());
  auto count = r.u32();
  archive.records.reserve(std::min<std::size_t>(count, r.remaining() / 8 + 1));
  std::vector<std::uint32_t> closed_ids;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto record_offset = r.offset();
    ArchiveRecord rec;
    rec.file_id = r.u32();
    const auto length_offset = r.offset();
    auto len = r.u32();
    if (len == 0) {
      throw format_error("zero-length record at byte offset " + std::to_string(length_offset));
    }
    if (len > r.remaining()) {
      throw format_error("record length " + std::to_string(len) + " at byte offset " +
                         std::to_string(length_offset) + " exceeds remaining " +
                         std::to_string(r.remaining()) + " bytes");
    }
    auto payload = r.raw(len, "record payload");
    rec.bytes.assign(payload.begin(), payload.end());
    if (!archive.records.empty() && archive.records.back().file_id != rec.file_id) {
      closed_ids.push_back(archive.records.back().file_id);
      if (std::find(closed_ids.begin(), closed_ids.end(), rec.file_id) != closed_ids.end()) {
        throw format_error("records of file " + std::to_string(rec.file_id) +
                           " are not contiguous (byte offset " + std::to_string(record_offset) + ")");
      }
    }
    archive.records.push_back(std::move(rec));
  }
  if (!r.done()) {
    throw format_error("trailing bytes after last record at byte offset " + std::to_string(r.offset()));
  }
  return archive;
}

void write_archive(const FragmentArchive& archive, const fs::path& path) {
  write_file_atomic(path, encode_archive(archive));
}

FragmentArchive read_archive(const fs::path& path) { return decode_archive(read_file(path)); }

FragmentArchive import_raw_concatenation(std::span<const std::uint8_t> data,
                                         std::size_t fragment_size, std::string class_name) {
  if (fragment_size == 0) throw parameter_error("fragment size must be >= 1");
  if (data.size() % fragment_size != 0) {
    throw format_error("raw file of " + std::to_string(data.size()) +
                       " bytes is not a whole number of " + std::to_string(fragment_size) +
                       "-byte fragments; truncated record at byte offset " +
                       std::to_string(data.size() - data.size() % fragment_size));
  }
  FragmentArchive archive;
  archive.class_name = std::move(class_name);
  for (std::size_t off = 0, id = 0; off < data.size(); off += fragment_size, ++id) {
    auto s = data.subspan(off, fragment_size);
    archive.records.push_back({static_cast<std::uint32_t>(id), Bytes(s.begin(), s.end())});
  }
  return archive;
}

bool path_is_within(const fs::path& inner, const fs::path& outer) {
  auto a = fs::weakly_canonical(fs::absolute(inner));
  auto b = fs::weakly_canonical(fs::absolute(outer));
  auto ai = a.begin();
  for (auto bi = b.begin(); bi != b.end(); ++bi, ++ai) {
    if (bi->empty()) continue;  // trailing separator
    if (ai == a.end() || *ai != *bi) return false;
  }
  return true;
}

CorpusScan scan_corpus(const fs::path& root, const fs::path& out_dir, const ExtractionParams& params) {
  params.validate();
  if (!fs::is_directory(root)) throw input_error("corpus root is not a directory: " + root.string());
  if (path_is_within(out_dir, root)) {
    throw parameter_error("output directory " + out_dir.string() + " lies inside the corpus root " +
                          root.string() + "; choose a completely different directory");
  }
  std::vector<fs::path> folders;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) folders.push_back(entry.path());
  }
  std::sort(folders.begin(), folders.end());
  if (folders.empty()) throw input_error("corpus root has no subfolders: " + root.string());

  CorpusScan scan;
  std::uint32_t next_id = 0;
  for (const auto& folder : folders) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(folder)) {
      if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());

    std::vector<std::vector<Fragment>> per_file(files.size());
    const std::uint32_t first_id = next_id;
    next_id += static_cast<std::uint32_t>(files.size());
    parallel_for(files.size(), [&](std::size_t i) {
      auto data = read_file(files[i]);
      auto id = first_id + static_cast<std::uint32_t>(i);
      per_file[i] = extract_fragments(segment_file(data, params, id), params);
    });

    FragmentArchive archive;
    archive.class_name = folder.filename().string();
    for (auto& frags : per_file) {
      for (auto& f : frags) {
        auto b = f.bytes();
        archive.records.push_back({f.file_id(), Bytes(b.begin(), b.end())});
      }
    }
    if (archive.records.empty()) {
      scan.warnings.push_back("class " + archive.class_name + " produced no fragments (" +
                              std::to_string(files.size()) + " files)");
    }
    scan.archives.push_back(std::move(archive));
  }
  return scan;
}

}  // namespace fragkit
