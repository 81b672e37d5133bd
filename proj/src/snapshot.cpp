#include "skbsem/snapshot.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace skbsem {

namespace {

constexpr char kMagic[4] = {'S', 'K', 'B', 'M'};
constexpr std::uint16_t kVersion = 1;

void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& out, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, sizeof(bits));
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

class Reader {
public:
    Reader(const std::string& buf, const std::string& path) : buf_(buf), path_(path) {}

    std::uint64_t take_uint(std::size_t bytes) {
        if (pos_ + bytes > buf_.size()) fail("truncated");
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < bytes; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
        pos_ += bytes;
        return v;
    }

    double take_f64() {
        std::uint64_t bits = take_uint(8);
        double d;
        std::memcpy(&d, &bits, sizeof(d));
        return d;
    }

    std::string take_bytes(std::size_t n) {
        if (pos_ + n > buf_.size()) fail("truncated");
        std::string s = buf_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    std::size_t pos() const { return pos_; }

    [[noreturn]] void fail(const std::string& what) {
        throw std::runtime_error("snapshot: " + path_ + ": " + what + " at byte " + std::to_string(pos_));
    }

private:
    const std::string& buf_;
    std::string path_;
    std::size_t pos_ = 0;
};

}  // namespace

void save_snapshot(const std::string& path, const std::vector<std::pair<std::string, const Tensor*>>& arrays) {
    std::string out;
    out.append(kMagic, 4);
    put_u16(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(arrays.size()));
    for (const auto& [name, t] : arrays) {
        if (name.size() > 0xFFFF) throw std::invalid_argument("snapshot: array name too long: " + name);
        put_u16(out, static_cast<std::uint16_t>(name.size()));
        out.append(name);
        out.push_back(static_cast<char>(t->rank()));
        for (std::size_t d : t->shape) put_u32(out, static_cast<std::uint32_t>(d));
        for (double v : t->data) put_f64(out, v);
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("snapshot: cannot open for writing: " + path);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw std::runtime_error("snapshot: write failed: " + path);
}

NamedTensors load_snapshot(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("snapshot: cannot open: " + path);
    std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    Reader r(buf, path);
    if (r.take_bytes(4) != std::string(kMagic, 4)) r.fail("bad magic, expected SKBM");
    const auto version = r.take_uint(2);
    if (version != kVersion) r.fail("unsupported format version " + std::to_string(version));
    const auto count = r.take_uint(4);
    NamedTensors result;
    for (std::uint64_t a = 0; a < count; ++a) {
        const auto name_len = r.take_uint(2);
        std::string name = r.take_bytes(name_len);
        const auto rank = r.take_uint(1);
        std::vector<std::size_t> shape;
        std::size_t total = 1;
        for (std::uint64_t d = 0; d < rank; ++d) {
            shape.push_back(static_cast<std::size_t>(r.take_uint(4)));
            total *= shape.back();
        }
        Tensor t(shape);
        for (std::size_t i = 0; i < total; ++i) t.data[i] = r.take_f64();
        result.items.emplace_back(std::move(name), std::move(t));
    }
    return result;
}

const Tensor& snapshot_get(const NamedTensors& snap, const std::string& name,
                           const std::vector<std::size_t>& expect_shape) {
    for (const auto& [n, t] : snap.items) {
        if (n == name) {
            if (t.shape != expect_shape)
                throw std::runtime_error("snapshot: array '" + name + "' has shape " + t.shape_str() +
                                         ", model expects " + shape_to_string(expect_shape));
            return t;
        }
    }
    throw std::runtime_error("snapshot: missing array '" + name + "'");
}

}  // namespace skbsem
