#include "rgvae/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace rgvae {

namespace {

constexpr char kMagic[] = "RGVAE1\n";
constexpr size_t kMagicLen = 7;

void write_u32(std::ostream& os, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw format_error("truncated checkpoint");
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

void write_f32(std::ostream& os, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    write_u32(os, bits);
}

float read_f32(std::istream& is) {
    uint32_t bits = read_u32(is);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

}  // namespace

void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, Tensor>>& records) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw data_error("cannot write checkpoint " + path);
    os.write(kMagic, kMagicLen);
    for (const auto& [name, t] : records) {
        if (name.empty()) throw contract_error("checkpoint record name must be non-empty");
        write_u32(os, static_cast<uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_u32(os, static_cast<uint32_t>(t.rank()));
        for (size_t d : t.shape()) write_u32(os, static_cast<uint32_t>(d));
        for (double v : t.data()) write_f32(os, static_cast<float>(v));
    }
    // terminator: empty-name record
    write_u32(os, 0);
    write_u32(os, 0);
    if (!os) throw data_error("failed writing checkpoint " + path);
}

std::vector<std::pair<std::string, Tensor>> load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw data_error("cannot read checkpoint " + path);
    char magic[kMagicLen];
    is.read(magic, kMagicLen);
    if (!is || std::memcmp(magic, kMagic, kMagicLen) != 0)
        throw format_error("bad checkpoint magic in " + path);

    std::vector<std::pair<std::string, Tensor>> records;
    for (;;) {
        uint32_t name_len = read_u32(is);
        if (name_len == 0) {
            read_u32(is);  // rank of the terminator record
            break;
        }
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        if (!is) throw format_error("truncated checkpoint record name");
        uint32_t rank = read_u32(is);
        Shape shape;
        size_t numel = 1;
        for (uint32_t d = 0; d < rank; ++d) {
            shape.push_back(read_u32(is));
            numel *= shape.back();
        }
        std::vector<double> data(numel);
        for (size_t i = 0; i < numel; ++i) data[i] = static_cast<double>(read_f32(is));
        records.emplace_back(std::move(name), Tensor::from(std::move(shape), std::move(data)));
    }
    return records;
}

Tensor text_record(const std::string& text) {
    std::vector<double> data(text.size());
    for (size_t i = 0; i < text.size(); ++i)
        data[i] = static_cast<double>(static_cast<unsigned char>(text[i]));
    return Tensor::from({text.size()}, std::move(data));
}

std::string record_text(const Tensor& record) {
    std::string out;
    out.reserve(record.numel());
    for (double v : record.data()) out.push_back(static_cast<char>(static_cast<int>(v)));
    return out;
}

}  // namespace rgvae
