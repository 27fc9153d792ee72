#pragma once

#include <string>
#include <vector>

#include "pmf/nn.hpp"

// MNIST IDX ingestion, normalization, seeded batching, and synthetic blob
// datasets for fast deterministic tests.

namespace pmf::data {

struct DatasetSplit {
    nn::Tensor images;        // [n, dim]
    std::vector<int> labels;  // each < class_count
    std::string name;
    // Standardization statistics recorded with the split (train stats are
    // reused verbatim for val/test).
    double mean = 0.0, stddev = 1.0;

    std::size_t size() const { return labels.size(); }
};

// Parses one IDX image/label file pair (big-endian headers; image magic
// 0x00000803, label magic 0x00000801). Pixels are scaled by 1/255; no
// standardization is applied here.
DatasetSplit load_mnist_idx(const std::string& images_path,
                            const std::string& labels_path);

struct MnistSplits {
    DatasetSplit train;  // first 50k of the official training order
    DatasetSplit val;    // last 10k
    DatasetSplit test;   // the official 10k test set
};

// Loads the four official files from `dir` and standardizes all splits with
// the scalar mean/std of the 50k training pixels.
MnistSplits load_mnist(const std::string& dir);

// Gaussian clusters with unit within-class variance and class means on a
// seeded random sphere of radius 4; deterministic given the seed.
DatasetSplit synthetic_blobs(std::size_t classes, std::size_t per_class,
                             std::size_t dim, std::uint64_t seed);

// Draws one pooled blob set and slices it per class into train / val / test
// so all three splits share the same class means. Val and test each get
// max(1, per_class / 5) samples per class on top of the train allocation.
MnistSplits blob_splits(std::size_t classes, std::size_t per_class,
                        std::size_t dim, std::uint64_t seed);

// Seeded per-epoch shuffle (seed xor epoch); the final short batch is kept.
class BatchIterator {
public:
    BatchIterator(const DatasetSplit& split, std::size_t batch_size,
                  std::uint64_t seed, std::uint64_t epoch);

    // Returns false once the epoch is exhausted.
    bool next(nn::Tensor& batch, std::vector<int>& labels);
    const std::vector<std::size_t>& order() const { return order_; }

private:
    const DatasetSplit& split_;
    std::size_t batch_size_, pos_ = 0;
    std::vector<std::size_t> order_;
};

}  // namespace pmf::data
