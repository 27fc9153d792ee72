#include "pmf/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

namespace pmf::data {

namespace {

std::uint32_t read_be32(std::ifstream& f, const std::string& path, const char* field) {
    unsigned char b[4];
    if (!f.read(reinterpret_cast<char*>(b), 4))
        throw FormatError(path + ": truncated " + field + " at offset " +
                          std::to_string(static_cast<long>(f.tellg())));
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

}  // namespace

DatasetSplit load_mnist_idx(const std::string& images_path,
                            const std::string& labels_path) {
    std::ifstream fi(images_path, std::ios::binary);
    if (!fi) throw IoError("cannot open: " + images_path);
    if (read_be32(fi, images_path, "magic") != 0x00000803u)
        throw FormatError(images_path + ": bad magic (expected 0x00000803)");
    const std::uint32_t n = read_be32(fi, images_path, "count");
    const std::uint32_t rows = read_be32(fi, images_path, "rows");
    const std::uint32_t cols = read_be32(fi, images_path, "cols");
    if (n == 0) throw FormatError(images_path + ": empty image set");
    const std::size_t dim = std::size_t(rows) * cols;
    std::vector<unsigned char> raw(std::size_t(n) * dim);
    if (!fi.read(reinterpret_cast<char*>(raw.data()),
                 static_cast<std::streamsize>(raw.size())))
        throw FormatError(images_path + ": truncated payload (expected " +
                          std::to_string(raw.size()) + " bytes)");

    std::ifstream fl(labels_path, std::ios::binary);
    if (!fl) throw IoError("cannot open: " + labels_path);
    if (read_be32(fl, labels_path, "magic") != 0x00000801u)
        throw FormatError(labels_path + ": bad magic (expected 0x00000801)");
    const std::uint32_t nl = read_be32(fl, labels_path, "count");
    if (nl != n)
        throw FormatError(labels_path + ": label count " + std::to_string(nl) +
                          " does not match image count " + std::to_string(n));
    std::vector<unsigned char> lab(n);
    if (!fl.read(reinterpret_cast<char*>(lab.data()), n))
        throw FormatError(labels_path + ": truncated payload");

    DatasetSplit out;
    out.images = nn::Tensor(n, dim);
    for (std::size_t i = 0; i < raw.size(); ++i)
        out.images.data[i] = static_cast<double>(raw[i]) / 255.0;
    out.labels.assign(lab.begin(), lab.end());
    out.name = images_path;
    return out;
}

namespace {

DatasetSplit slice(const DatasetSplit& s, std::size_t begin, std::size_t count,
                   const std::string& name) {
    DatasetSplit out;
    const std::size_t dim = s.images.cols;
    out.images = nn::Tensor(count, dim);
    std::copy_n(s.images.data.begin() + begin * dim, count * dim,
                out.images.data.begin());
    out.labels.assign(s.labels.begin() + begin, s.labels.begin() + begin + count);
    out.name = name;
    return out;
}

void standardize(DatasetSplit& s, double mean, double stddev) {
    for (double& v : s.images.data) v = (v - mean) / stddev;
    s.mean = mean;
    s.stddev = stddev;
}

}  // namespace

MnistSplits load_mnist(const std::string& dir) {
    DatasetSplit full = load_mnist_idx(dir + "/train-images-idx3-ubyte",
                                       dir + "/train-labels-idx1-ubyte");
    if (full.size() != 60000)
        throw FormatError(dir + ": expected 60000 training samples, got " +
                          std::to_string(full.size()));
    MnistSplits out;
    out.train = slice(full, 0, 50000, "mnist-train");
    out.val = slice(full, 50000, 10000, "mnist-val");
    out.test = load_mnist_idx(dir + "/t10k-images-idx3-ubyte",
                              dir + "/t10k-labels-idx1-ubyte");
    out.test.name = "mnist-test";

    // Scalar standardization over the 50k training pixels only.
    double mean = std::accumulate(out.train.images.data.begin(),
                                  out.train.images.data.end(), 0.0) /
                  static_cast<double>(out.train.images.data.size());
    double var = 0.0;
    for (double v : out.train.images.data) var += (v - mean) * (v - mean);
    var /= static_cast<double>(out.train.images.data.size());
    const double stddev = std::sqrt(var);
    standardize(out.train, mean, stddev);
    standardize(out.val, mean, stddev);
    standardize(out.test, mean, stddev);
    return out;
}

DatasetSplit synthetic_blobs(std::size_t classes, std::size_t per_class,
                             std::size_t dim, std::uint64_t seed) {
    if (classes < 1 || per_class < 1 || dim < 1)
        throw std::invalid_argument("synthetic_blobs: all counts must be >= 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    // Class means on a sphere of radius 4.
    std::vector<std::vector<double>> means(classes, std::vector<double>(dim));
    for (auto& mu : means) {
        double norm2 = 0.0;
        for (double& v : mu) {
            v = gauss(rng);
            norm2 += v * v;
        }
        const double scale = 4.0 / std::sqrt(norm2);
        for (double& v : mu) v *= scale;
    }

    DatasetSplit out;
    const std::size_t n = classes * per_class;
    out.images = nn::Tensor(n, dim);
    out.labels.resize(n);
    out.name = "blobs";
    std::size_t i = 0;
    for (std::size_t c = 0; c < classes; ++c)
        for (std::size_t k = 0; k < per_class; ++k, ++i) {
            double* row = out.images.row(i);
            for (std::size_t dd = 0; dd < dim; ++dd) row[dd] = means[c][dd] + gauss(rng);
            out.labels[i] = static_cast<int>(c);
        }
    return out;
}

MnistSplits blob_splits(std::size_t classes, std::size_t per_class,
                        std::size_t dim, std::uint64_t seed) {
    const std::size_t eval_pc = std::max<std::size_t>(1, per_class / 5);
    const std::size_t total_pc = per_class + 2 * eval_pc;
    DatasetSplit pool = synthetic_blobs(classes, total_pc, dim, seed);

    auto slice = [&](std::size_t offset, std::size_t count,
                     const char* name) {
        DatasetSplit s;
        s.images = nn::Tensor(classes * count, dim);
        s.labels.resize(classes * count);
        s.name = name;
        std::size_t i = 0;
        for (std::size_t c = 0; c < classes; ++c)
            for (std::size_t k = 0; k < count; ++k, ++i) {
                const double* src = pool.images.row(c * total_pc + offset + k);
                std::copy(src, src + dim, s.images.row(i));
                s.labels[i] = static_cast<int>(c);
            }
        return s;
    };

    MnistSplits out;
    out.train = slice(0, per_class, "blobs-train");
    out.val = slice(per_class, eval_pc, "blobs-val");
    out.test = slice(per_class + eval_pc, eval_pc, "blobs-test");
    return out;
}

BatchIterator::BatchIterator(const DatasetSplit& split, std::size_t batch_size,
                             std::uint64_t seed, std::uint64_t epoch)
    : split_(split), batch_size_(batch_size), order_(split.size()) {
    if (batch_size_ == 0 || batch_size_ > split.size())
        throw std::invalid_argument("BatchIterator: batch_size must be in [1, n]");
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::mt19937_64 rng(seed ^ epoch);
    std::shuffle(order_.begin(), order_.end(), rng);
}

bool BatchIterator::next(nn::Tensor& batch, std::vector<int>& labels) {
    if (pos_ >= order_.size()) return false;
    const std::size_t count = std::min(batch_size_, order_.size() - pos_);
    const std::size_t dim = split_.images.cols;
    batch = nn::Tensor(count, dim);
    labels.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t src = order_[pos_ + i];
        std::copy_n(split_.images.row(src), dim, batch.row(i));
        labels[i] = split_.labels[src];
    }
    pos_ += count;
    return true;
}

}  // namespace pmf::data
