#include "cfd/data.hpp"

#include "cfd/error.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>

namespace cfd {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& buf, std::size_t offset, const std::string& file) {
    if (offset + 4 > buf.size()) throw FormatError(file + ": truncated header", offset);
    return (std::uint32_t{buf[offset]} << 24) | (std::uint32_t{buf[offset + 1]} << 16) |
           (std::uint32_t{buf[offset + 2]} << 8) | std::uint32_t{buf[offset + 3]};
}

}  // namespace

Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                 std::optional<int> num_classes) {
    const auto images = read_file(images_path);
    const auto labels = read_file(labels_path);
    const std::string img_name = images_path.filename().string();
    const std::string lbl_name = labels_path.filename().string();

    if (read_be32(images, 0, img_name) != kImageMagic) {
        throw FormatError(img_name + ": bad magic for IDX image file", 0);
    }
    if (read_be32(labels, 0, lbl_name) != kLabelMagic) {
        throw FormatError(lbl_name + ": bad magic for IDX label file", 0);
    }
    const std::uint32_t count = read_be32(images, 4, img_name);
    const std::uint32_t rows = read_be32(images, 8, img_name);
    const std::uint32_t cols = read_be32(images, 12, img_name);
    const std::uint32_t label_count = read_be32(labels, 4, lbl_name);
    if (count != label_count) {
        throw FormatError("image count " + std::to_string(count) + " != label count " +
                              std::to_string(label_count),
                          4);
    }

    const std::size_t pixels = std::size_t{rows} * cols;
    const std::size_t image_bytes = 16 + std::size_t{count} * pixels;
    if (images.size() < image_bytes) throw FormatError(img_name + ": truncated pixel data", images.size());
    if (labels.size() < 8 + std::size_t{count}) {
        throw FormatError(lbl_name + ": truncated label data", labels.size());
    }

    Dataset out;
    out.provenance = Provenance::idx_file;
    out.features.resize(count, static_cast<Eigen::Index>(pixels));
    for (std::size_t i = 0; i < count; ++i) {
        const unsigned char* px = images.data() + 16 + i * pixels;
        for (std::size_t j = 0; j < pixels; ++j) {
            out.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = px[j] / 255.0;
        }
    }
    out.labels.assign(labels.begin() + 8, labels.begin() + 8 + count);
    const int max_label = out.labels.empty() ? 1 : *std::max_element(out.labels.begin(), out.labels.end());
    out.num_classes = num_classes.value_or(std::max(2, max_label + 1));
    out.validate();
    return out;
}

}  // namespace cfd
