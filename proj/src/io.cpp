#include "fsseg/io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace fsseg {

namespace {

constexpr std::uint8_t kVersion = 0x01;
constexpr std::uint8_t kDtypeF32 = 0x01;

// Little-endian byte streams independent of host representation.
class ByteWriter {
public:
    explicit ByteWriter(const std::filesystem::path& path)
        : path_(path), out_(path, std::ios::binary) {
        if (!out_) {
            throw DataError("cannot open for writing: " + path.string());
        }
    }

    void bytes(const void* p, std::size_t n) {
        out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    }
    void u8(std::uint8_t v) { bytes(&v, 1); }
    void u32(std::uint32_t v) {
        const std::uint8_t b[4] = {
            static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v >> 8),
            static_cast<std::uint8_t>(v >> 16), static_cast<std::uint8_t>(v >> 24)};
        bytes(b, 4);
    }
    void f32(float v) {
        std::uint32_t u;
        std::memcpy(&u, &v, 4);
        u32(u);
    }
    void magic(const char m[4]) { bytes(m, 4); }

    void close() {
        out_.close();
        if (!out_) {
            throw DataError("write failed: " + path_.string());
        }
    }

private:
    std::filesystem::path path_;
    std::ofstream out_;
};

class ByteReader {
public:
    explicit ByteReader(const std::filesystem::path& path) : path_(path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) {
            throw DataError("cannot open for reading: " + path.string());
        }
        buf_.assign(std::istreambuf_iterator<char>(in),
                    std::istreambuf_iterator<char>());
    }

    std::size_t offset() const { return pos_; }

    void bytes(void* p, std::size_t n) {
        if (pos_ + n > buf_.size()) {
            throw FormatError(path_.string() + ": truncated file", pos_);
        }
        std::memcpy(p, buf_.data() + pos_, n);
        pos_ += n;
    }
    std::uint8_t u8() {
        std::uint8_t v;
        bytes(&v, 1);
        return v;
    }
    std::uint32_t u32() {
        std::uint8_t b[4];
        bytes(b, 4);
        return static_cast<std::uint32_t>(b[0]) |
               (static_cast<std::uint32_t>(b[1]) << 8) |
               (static_cast<std::uint32_t>(b[2]) << 16) |
               (static_cast<std::uint32_t>(b[3]) << 24);
    }
    float f32() {
        const std::uint32_t u = u32();
        float v;
        std::memcpy(&v, &u, 4);
        return v;
    }
    void expect_magic(const char m[4]) {
        char got[4];
        bytes(got, 4);
        if (std::memcmp(got, m, 4) != 0) {
            throw FormatError(path_.string() + ": bad magic, expected " +
                                  std::string(m, 4),
                              pos_ - 4);
        }
    }
    void expect_u8(std::uint8_t want, const char* what) {
        const std::uint8_t got = u8();
        if (got != want) {
            throw FormatError(path_.string() + ": unsupported " + what + " " +
                                  std::to_string(got),
                              pos_ - 1);
        }
    }
    void expect_eof() {
        if (pos_ != buf_.size()) {
            throw FormatError(path_.string() + ": trailing bytes", pos_);
        }
    }

private:
    std::filesystem::path path_;
    std::vector<std::uint8_t> buf_;
    std::size_t pos_ = 0;
};

void write_tensor_payload(ByteWriter& w, const Tensor& t) {
    w.u8(static_cast<std::uint8_t>(t.rank()));
    for (int i = 0; i < t.rank(); ++i) {
        w.u32(static_cast<std::uint32_t>(t.dim(i)));
    }
    for (float v : t.data()) w.f32(v);
}

Tensor read_tensor_payload(ByteReader& r) {
    const int rank = r.u8();
    if (rank < 1 || rank > 4) {
        throw FormatError("tensor rank " + std::to_string(rank) +
                              " out of range",
                          r.offset() - 1);
    }
    std::vector<int> shape(static_cast<std::size_t>(rank));
    std::int64_t numel = 1;
    for (int i = 0; i < rank; ++i) {
        shape[static_cast<std::size_t>(i)] = static_cast<int>(r.u32());
        numel *= shape[static_cast<std::size_t>(i)];
    }
    if (numel <= 0 || numel > (1ll << 31)) {
        throw FormatError("tensor dims out of range", r.offset());
    }
    std::vector<float> data(static_cast<std::size_t>(numel));
    for (float& v : data) v = r.f32();
    return Tensor(std::move(shape), std::move(data));
}

nlohmann::json parse_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open for reading: " + path.string());
    }
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(path.string() + ": invalid JSON: " + e.what(),
                          static_cast<std::size_t>(e.byte));
    }
}

}  // namespace

void write_feature_map(const std::filesystem::path& path, const Tensor& features) {
    if (features.rank() != 3) {
        throw ShapeError("write_feature_map: features must be rank-3 [d,h,w]");
    }
    ByteWriter w(path);
    w.magic("FSFM");
    w.u8(kVersion);
    w.u8(kDtypeF32);
    w.u8(3);
    for (int i = 0; i < 3; ++i) w.u32(static_cast<std::uint32_t>(features.dim(i)));
    for (float v : features.data()) w.f32(v);
    w.close();
}

Tensor read_feature_map(const std::filesystem::path& path) {
    ByteReader r(path);
    r.expect_magic("FSFM");
    r.expect_u8(kVersion, "version");
    r.expect_u8(kDtypeF32, "dtype");
    r.expect_u8(3, "rank");
    std::vector<int> shape(3);
    std::int64_t numel = 1;
    for (int i = 0; i < 3; ++i) {
        shape[static_cast<std::size_t>(i)] = static_cast<int>(r.u32());
        numel *= shape[static_cast<std::size_t>(i)];
    }
    if (numel <= 0 || numel > (1ll << 31)) {
        throw FormatError(path.string() + ": dims out of range", r.offset());
    }
    std::vector<float> data(static_cast<std::size_t>(numel));
    for (float& v : data) v = r.f32();
    r.expect_eof();
    return Tensor(std::move(shape), std::move(data));
}

void write_mask(const std::filesystem::path& path, const BinaryMask& mask) {
    validate_mask(mask, "write_mask");
    ByteWriter w(path);
    w.magic("FSMK");
    w.u8(kVersion);
    w.u32(static_cast<std::uint32_t>(mask.height));
    w.u32(static_cast<std::uint32_t>(mask.width));
    w.bytes(mask.values.data(), mask.values.size());
    w.close();
}

BinaryMask read_mask(const std::filesystem::path& path) {
    ByteReader r(path);
    r.expect_magic("FSMK");
    r.expect_u8(kVersion, "version");
    const std::uint32_t h = r.u32();
    const std::uint32_t w = r.u32();
    if (h == 0 || w == 0 || static_cast<std::uint64_t>(h) * w > (1ull << 31)) {
        throw FormatError(path.string() + ": dims out of range", r.offset());
    }
    BinaryMask mask(static_cast<int>(h), static_cast<int>(w));
    r.bytes(mask.values.data(), mask.values.size());
    r.expect_eof();
    for (std::size_t i = 0; i < mask.values.size(); ++i) {
        if (mask.values[i] > 1) {
            throw FormatError(path.string() + ": mask byte not 0/1", 13 + i);
        }
    }
    return mask;
}

void write_head_params(const std::filesystem::path& path, const HeadParams& params) {
    validate_head_params(params);
    ByteWriter w(path);
    w.magic("FSHP");
    w.u8(kVersion);
    w.u32(static_cast<std::uint32_t>(params.feature_dim()));
    write_tensor_payload(w, params.conv1_weights);
    write_tensor_payload(w, params.conv1_bias);
    write_tensor_payload(w, params.conv2_weights);
    write_tensor_payload(w, params.conv2_bias);
    w.close();
}

HeadParams read_head_params(const std::filesystem::path& path) {
    ByteReader r(path);
    r.expect_magic("FSHP");
    r.expect_u8(kVersion, "version");
    const int d = static_cast<int>(r.u32());
    HeadParams params;
    params.conv1_weights = read_tensor_payload(r);
    params.conv1_bias = read_tensor_payload(r);
    params.conv2_weights = read_tensor_payload(r);
    params.conv2_bias = read_tensor_payload(r);
    r.expect_eof();
    validate_head_params(params);
    if (params.feature_dim() != d) {
        throw FormatError(path.string() + ": header dim " + std::to_string(d) +
                              " does not match conv1 shape",
                          9);
    }
    return params;
}

void write_manifest(const std::filesystem::path& path,
                    const std::vector<ManifestEntry>& entries) {
    nlohmann::json arr = nlohmann::json::array();
    for (const ManifestEntry& e : entries) {
        arr.push_back({{"class_id", e.class_id},
                       {"features", e.features},
                       {"mask", e.mask}});
    }
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot open for writing: " + path.string());
    }
    out << arr.dump(2) << "\n";
    if (!out) {
        throw DataError("write failed: " + path.string());
    }
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
    const nlohmann::json arr = parse_json_file(path);
    if (!arr.is_array()) {
        throw FormatError(path.string() + ": manifest must be a JSON array", 0);
    }
    std::vector<ManifestEntry> entries;
    entries.reserve(arr.size());
    for (const auto& item : arr) {
        if (!item.is_object() || !item.contains("class_id") ||
            !item.contains("features") || !item.contains("mask")) {
            throw FormatError(path.string() +
                                  ": manifest entries need class_id/features/mask",
                              0);
        }
        ManifestEntry e;
        e.class_id = item.at("class_id").get<int>();
        e.features = item.at("features").get<std::string>();
        e.mask = item.at("mask").get<std::string>();
        entries.push_back(std::move(e));
    }
    return entries;
}

std::vector<LabeledExample> load_dataset(const std::filesystem::path& manifest_path) {
    const std::vector<ManifestEntry> entries = read_manifest(manifest_path);
    const std::filesystem::path base = manifest_path.parent_path();
    std::vector<LabeledExample> dataset;
    dataset.reserve(entries.size());
    for (const ManifestEntry& e : entries) {
        const std::filesystem::path fpath = base / e.features;
        const std::filesystem::path mpath = base / e.mask;
        if (!std::filesystem::exists(fpath)) {
            throw DataError("manifest references missing file: " + fpath.string());
        }
        if (!std::filesystem::exists(mpath)) {
            throw DataError("manifest references missing file: " + mpath.string());
        }
        LabeledExample ex;
        ex.class_id = e.class_id;
        ex.features = read_feature_map(fpath);
        ex.mask = read_mask(mpath);
        dataset.push_back(std::move(ex));
    }
    validate_dataset(dataset);
    return dataset;
}

void write_folds(const std::filesystem::path& path,
                 const std::vector<FoldSplit>& folds) {
    nlohmann::json arr = nlohmann::json::array();
    for (const FoldSplit& f : folds) {
        arr.push_back({{"fold", f.fold_index},
                       {"test_classes", f.test_classes},
                       {"train_classes", f.train_classes}});
    }
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot open for writing: " + path.string());
    }
    out << arr.dump(2) << "\n";
    if (!out) {
        throw DataError("write failed: " + path.string());
    }
}

std::vector<FoldSplit> read_folds(const std::filesystem::path& path) {
    const nlohmann::json doc = parse_json_file(path);
    // Accept either one fold object or an array of them.
    nlohmann::json arr = doc.is_array() ? doc : nlohmann::json::array({doc});
    std::vector<FoldSplit> folds;
    folds.reserve(arr.size());
    for (const auto& item : arr) {
        if (!item.is_object() || !item.contains("fold") ||
            !item.contains("test_classes") || !item.contains("train_classes")) {
            throw FormatError(
                path.string() + ": fold entries need fold/test_classes/train_classes",
                0);
        }
        FoldSplit f;
        f.fold_index = item.at("fold").get<int>();
        for (int c : item.at("test_classes")) f.test_classes.insert(c);
        for (int c : item.at("train_classes")) f.train_classes.insert(c);
        validate_fold(f);
        folds.push_back(std::move(f));
    }
    if (folds.empty()) {
        throw DataError(path.string() + ": no folds defined");
    }
    return folds;
}

}  // namespace fsseg
