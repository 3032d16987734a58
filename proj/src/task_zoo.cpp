#include "aqc/mlp.hpp"

#include "aqc/error.hpp"
#include "aqc/wire.hpp"

#include <cstring>
#include <fstream>
#include <numbers>

namespace aqc {

Activation activation_from_string(const std::string& name) {
    if (name == "tanh") {
        return Activation::Tanh;
    }
    if (name == "relu") {
        return Activation::Relu;
    }
    throw ArgumentError("unknown activation: " + name);
}

std::string to_string(Activation act) {
    return act == Activation::Tanh ? "tanh" : "relu";
}

TensorArchive export_model(const TaskModel<float>& model) {
    TensorArchive archive;
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        const Mat<float>& w = model.weights[l];
        TensorEntry we;
        we.name = "layer" + std::to_string(l) + ".weight";
        we.shape = {w.rows(), w.cols()};
        we.data.assign(w.data(), w.data() + w.size());  // row-major
        archive.entries.push_back(std::move(we));

        const Vec<float>& b = model.biases[l];
        TensorEntry be;
        be.name = "layer" + std::to_string(l) + ".bias";
        be.shape = {b.size()};
        be.data.assign(b.data(), b.data() + b.size());
        archive.entries.push_back(std::move(be));
    }
    return archive;
}

MlpSpec infer_spec(
    const std::vector<std::pair<std::string, std::vector<std::int64_t>>>& names_and_shapes,
    Activation act) {
    MlpSpec spec;
    spec.act = act;
    if (names_and_shapes.empty() || names_and_shapes.size() % 2 != 0) {
        throw StructuralError("archive does not look like an exported MLP");
    }
    for (std::size_t l = 0; l * 2 < names_and_shapes.size(); ++l) {
        const auto& [wname, wshape] = names_and_shapes[l * 2];
        const auto& [bname, bshape] = names_and_shapes[l * 2 + 1];
        const std::string prefix = "layer" + std::to_string(l);
        if (wname != prefix + ".weight" || bname != prefix + ".bias" ||
            wshape.size() != 2 || bshape.size() != 1 || wshape[1] != bshape[0]) {
            throw StructuralError("archive does not look like an exported MLP at " + prefix);
        }
        if (l == 0) {
            spec.widths.push_back(static_cast<std::int32_t>(wshape[0]));
        } else if (spec.widths.back() != wshape[0]) {
            throw StructuralError("layer widths do not chain at " + prefix);
        }
        spec.widths.push_back(static_cast<std::int32_t>(wshape[1]));
    }
    spec.check();
    return spec;
}

TaskModel<float> import_model(const TensorArchive& archive, Activation act) {
    std::vector<std::pair<std::string, std::vector<std::int64_t>>> layout;
    for (const TensorEntry& e : archive.entries) {
        layout.emplace_back(e.name, e.shape);
    }
    TaskModel<float> model;
    model.spec = infer_spec(layout, act);
    for (std::size_t l = 0; l < model.spec.layers(); ++l) {
        const TensorEntry& we = archive.entries[l * 2];
        const TensorEntry& be = archive.entries[l * 2 + 1];
        Mat<float> w(we.shape[0], we.shape[1]);
        std::memcpy(w.data(), we.data.data(), we.data.size() * sizeof(float));
        model.weights.push_back(std::move(w));
        Vec<float> b(be.shape[0]);
        std::memcpy(b.data(), be.data.data(), be.data.size() * sizeof(float));
        model.biases.push_back(std::move(b));
    }
    return model;
}

Dataset make_blobs(std::int32_t n_per_class, std::int32_t classes, std::int32_t dim,
                   double spread, std::uint64_t seed) {
    if (n_per_class < 1 || classes < 1 || dim < 1 || spread < 0.0) {
        throw ArgumentError("make_blobs arguments must be positive (spread >= 0)");
    }
    constexpr double kRadius = 4.0;

    MatF centers = MatF::Zero(classes, dim);
    for (std::int32_t c = 0; c < classes; ++c) {
        if (dim == 1) {
            centers(c, 0) = static_cast<float>(
                classes == 1 ? 0.0
                             : -kRadius + 2.0 * kRadius * c / (classes - 1));
        } else {
            const double angle = 2.0 * std::numbers::pi * c / classes;
            centers(c, 0) = static_cast<float>(kRadius * std::cos(angle));
            centers(c, 1) = static_cast<float>(kRadius * std::sin(angle));
        }
    }

    Rng rng(seed);
    Dataset data;
    data.classes = classes;
    data.x.resize(static_cast<Eigen::Index>(n_per_class) * classes, dim);
    data.y.resize(static_cast<std::size_t>(data.x.rows()));
    Eigen::Index row = 0;
    for (std::int32_t c = 0; c < classes; ++c) {
        for (std::int32_t i = 0; i < n_per_class; ++i, ++row) {
            for (std::int32_t j = 0; j < dim; ++j) {
                data.x(row, j) =
                    centers(c, j) + static_cast<float>(spread * rng.normal());
            }
            data.y[static_cast<std::size_t>(row)] = c;
        }
    }
    return data;
}

namespace {

std::uint32_t read_be_u32(std::istream& in, const char* what) {
    unsigned char b[4];
    wire::read_exact(in, b, 4, what);
    return (static_cast<std::uint32_t>(b[0]) << 24) | (static_cast<std::uint32_t>(b[1]) << 16) |
           (static_cast<std::uint32_t>(b[2]) << 8) | static_cast<std::uint32_t>(b[3]);
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) {
        throw IoError("cannot open: " + images_path);
    }
    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) {
        throw IoError("cannot open: " + labels_path);
    }

    if (read_be_u32(img, "image magic") != 0x00000803) {
        throw ParseError(ParseError::Kind::BadMagic, "not an IDX3 image file");
    }
    const std::uint32_t n = read_be_u32(img, "image count");
    const std::uint32_t rows = read_be_u32(img, "image rows");
    const std::uint32_t cols = read_be_u32(img, "image cols");

    if (read_be_u32(lab, "label magic") != 0x00000801) {
        throw ParseError(ParseError::Kind::BadMagic, "not an IDX1 label file");
    }
    if (read_be_u32(lab, "label count") != n) {
        throw ParseError(ParseError::Kind::BadHeader,
                         "image and label files disagree on sample count");
    }
    if (n == 0) {
        throw ArgumentError("IDX dataset is empty");
    }

    Dataset data;
    const std::uint64_t dim = static_cast<std::uint64_t>(rows) * cols;
    data.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
    data.y.resize(n);
    std::vector<unsigned char> pixel(dim);
    for (std::uint32_t i = 0; i < n; ++i) {
        wire::read_exact(img, pixel.data(), pixel.size(), "image pixels");
        for (std::uint64_t j = 0; j < dim; ++j) {
            data.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                static_cast<float>(pixel[j]) / 255.0f;
        }
        unsigned char label = 0;
        wire::read_exact(lab, &label, 1, "labels");
        data.y[i] = label;
    }
    data.classes = *std::max_element(data.y.begin(), data.y.end()) + 1;
    return data;
}

}  // namespace aqc
