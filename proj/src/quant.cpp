#include "pmf/quant.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace pmf {

QuantLevels::QuantLevels(std::vector<double> levels) : q(std::move(levels)) {
    if (q.size() < 2) throw std::invalid_argument("QuantLevels: need d >= 2");
    require_finite(q, "QuantLevels");
    for (std::size_t i = 1; i < q.size(); ++i)
        if (!(q[i] > q[i - 1]))
            throw std::invalid_argument("QuantLevels: levels must be strictly ascending");
}

void SimplexField::validate(double tol) const {
    for (std::size_t j = 0; j < m; ++j) {
        double sum = 0.0;
        for (double v : row(j)) {
            if (!(v >= 0.0)) throw std::invalid_argument("SimplexField: negative entry");
            sum += v;
        }
        if (std::abs(sum - 1.0) > tol)
            throw std::invalid_argument("SimplexField: row does not sum to 1");
    }
}

std::vector<double> QuantizedWeights::decode() const {
    std::vector<double> w(level_index.size());
    for (std::size_t j = 0; j < level_index.size(); ++j)
        w[j] = levels.q[level_index[j]];
    return w;
}

void collapse(const SimplexField& u, const QuantLevels& levels, std::span<double> w) {
    if (u.d != levels.d())
        throw ShapeError("collapse: field level dimension mismatch");
    const std::size_t d = u.d;
    const double* q = levels.q.data();
#pragma omp parallel for schedule(static)
    for (long j = 0; j < static_cast<long>(u.m); ++j) {
        const double* r = u.p.data() + static_cast<std::size_t>(j) * d;
        double acc = 0.0;
        for (std::size_t l = 0; l < d; ++l) acc += r[l] * q[l];
        w[static_cast<std::size_t>(j)] = acc;
    }
}

std::vector<double> collapse(const SimplexField& u, const QuantLevels& levels) {
    std::vector<double> w(u.m);
    collapse(u, levels, w);
    return w;
}

void lift_gradient(std::span<const double> g_w, const QuantLevels& levels,
                   AuxField& g_u) {
    const std::size_t d = levels.d();
    if (g_u.m != g_w.size() || g_u.d != d) g_u = AuxField(g_w.size(), d);
    const double* q = levels.q.data();
#pragma omp parallel for schedule(static)
    for (long j = 0; j < static_cast<long>(g_w.size()); ++j) {
        double* r = g_u.a.data() + static_cast<std::size_t>(j) * d;
        const double g = g_w[static_cast<std::size_t>(j)];
        for (std::size_t l = 0; l < d; ++l) r[l] = g * q[l];
    }
}

double ste_sign_jacobian(double w_tilde) {
    if (!std::isfinite(w_tilde))
        throw std::invalid_argument("ste_sign_jacobian: non-finite input");
    return std::abs(w_tilde) <= 1.0 ? 1.0 : 0.0;
}

std::array<double, 4> ste_hardmax_jacobian_binary(std::span<const double> row) {
    if (row.size() != 2)
        throw std::invalid_argument("ste_hardmax_jacobian_binary: defined only for d = 2");
    require_finite(row, "ste_hardmax_jacobian_binary");
    const double upsilon = row[0] - row[1];
    const double i = std::abs(upsilon) <= 1.0 ? 0.5 : 0.0;
    return {i, -i, -i, i};
}

std::size_t packed_bits_per_index(std::size_t d) {
    std::size_t bits = 1;
    while ((std::size_t{1} << bits) < d) ++bits;
    return bits;
}

namespace {

constexpr char kMagic[4] = {'P', 'Q', 'W', '1'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    for (int i = 0; i < 2; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

}  // namespace

std::vector<std::uint8_t> pack_quantized(const QuantizedWeights& w) {
    const std::size_t d = w.levels.d();
    const std::size_t m = w.m();
    const std::size_t bits = packed_bits_per_index(d);
    std::vector<std::uint8_t> out;
    out.reserve(10 + 8 * d + (m * bits + 7) / 8);
    out.insert(out.end(), kMagic, kMagic + 4);
    put_u32(out, static_cast<std::uint32_t>(m));
    put_u16(out, static_cast<std::uint16_t>(d));
    for (double q : w.levels.q) put_f64(out, q);

    const std::size_t payload_bytes = (m * bits + 7) / 8;
    const std::size_t base = out.size();
    out.resize(base + payload_bytes, 0);
    for (std::size_t j = 0; j < m; ++j) {
        const std::uint32_t idx = w.level_index[j];
        const std::size_t bit0 = j * bits;
        for (std::size_t b = 0; b < bits; ++b)
            if (idx & (1u << b))
                out[base + (bit0 + b) / 8] |= static_cast<std::uint8_t>(1u << ((bit0 + b) % 8));
    }
    return out;
}

QuantizedWeights unpack_quantized(std::span<const std::uint8_t> bytes) {
    std::size_t pos = 0;
    auto need = [&](std::size_t n, const char* field) {
        if (bytes.size() - pos < n)
            throw FormatError(std::string("pqw: truncated ") + field);
    };
    need(4, "magic");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw FormatError("pqw: bad magic (expected PQW1)");
    pos = 4;
    need(4, "m");
    std::uint32_t m = 0;
    for (int i = 0; i < 4; ++i) m |= static_cast<std::uint32_t>(bytes[pos + i]) << (8 * i);
    pos += 4;
    need(2, "d");
    std::uint16_t d = 0;
    for (int i = 0; i < 2; ++i) d |= static_cast<std::uint16_t>(bytes[pos + i]) << (8 * i);
    pos += 2;
    if (d < 2) throw FormatError("pqw: level count d must be >= 2");
    need(8 * d, "levels");
    std::vector<double> q(d);
    for (std::size_t l = 0; l < d; ++l) {
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i)
            bits |= static_cast<std::uint64_t>(bytes[pos + 8 * l + i]) << (8 * i);
        std::memcpy(&q[l], &bits, 8);
    }
    pos += 8 * d;

    const std::size_t bits = packed_bits_per_index(d);
    const std::size_t payload_bytes = (static_cast<std::size_t>(m) * bits + 7) / 8;
    need(payload_bytes, "payload");

    QuantizedWeights out{QuantLevels(std::move(q)), std::vector<std::uint32_t>(m, 0)};
    for (std::size_t j = 0; j < m; ++j) {
        std::uint32_t idx = 0;
        const std::size_t bit0 = j * bits;
        for (std::size_t b = 0; b < bits; ++b)
            if (bytes[pos + (bit0 + b) / 8] & (1u << ((bit0 + b) % 8)))
                idx |= 1u << b;
        if (idx >= d) throw FormatError("pqw: level index out of range");
        out.level_index[j] = idx;
    }
    return out;
}

void save_pqw(const QuantizedWeights& w, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path);
    auto bytes = pack_quantized(w);
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("write failed: " + path);
}

QuantizedWeights load_pqw(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());
    return unpack_quantized(bytes);
}

}  // namespace pmf
