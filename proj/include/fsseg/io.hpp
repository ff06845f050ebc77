#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fsseg/episode.hpp"
#include "fsseg/head.hpp"
#include "fsseg/mask.hpp"
#include "fsseg/tensor.hpp"

namespace fsseg {

// Binary file formats, all little-endian:
//   feature map: "FSFM", version 0x01, dtype 0x01 (float32), rank 0x03,
//                three u32 dims (d, h, w), then d*h*w float32 row-major
//   mask:        "FSMK", version 0x01, two u32 dims (H, W), then H*W bytes
//                in {0, 1}
//   head params: "FSHP", version 0x01, u32 d, then the four parameter
//                tensors in declaration order, each as u8 rank, rank u32
//                dims, float32 data
// Readers throw FormatError (with byte offset) on bad magic, version or
// truncation. Writing then reading yields bit-identical contents.

void write_feature_map(const std::filesystem::path& path, const Tensor& features);
Tensor read_feature_map(const std::filesystem::path& path);

void write_mask(const std::filesystem::path& path, const BinaryMask& mask);
BinaryMask read_mask(const std::filesystem::path& path);

void write_head_params(const std::filesystem::path& path, const HeadParams& params);
HeadParams read_head_params(const std::filesystem::path& path);

// Episode manifest: UTF-8 JSON array of {"class_id", "features", "mask"}
// entries with paths relative to the manifest's directory.
struct ManifestEntry {
    int class_id = 0;
    std::string features;
    std::string mask;
};

void write_manifest(const std::filesystem::path& path,
                    const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

// Reads the manifest and loads every referenced file. Missing files raise
// DataError naming the path.
std::vector<LabeledExample> load_dataset(const std::filesystem::path& manifest_path);

// Fold files: JSON array of {"fold", "test_classes", "train_classes"}.
void write_folds(const std::filesystem::path& path, const std::vector<FoldSplit>& folds);
std::vector<FoldSplit> read_folds(const std::filesystem::path& path);

}  // namespace fsseg
