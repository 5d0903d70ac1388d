#include "iflow/serialize.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

namespace iflow {

namespace {

constexpr char kMagic[4] = {'I', 'F', 'T', 'N'};
constexpr uint32_t kVersion = 1;

void put_u16(std::ostream& out, uint16_t v) {
    unsigned char b[2] = {(unsigned char)(v & 0xff), (unsigned char)(v >> 8)};
    out.write(reinterpret_cast<const char*>(b), 2);
}

void put_u32(std::ostream& out, uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = (unsigned char)(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = (unsigned char)(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

void read_bytes(std::istream& in, void* dst, std::size_t n, std::size_t& offset,
                const std::string& context) {
    in.read(reinterpret_cast<char*>(dst), std::streamsize(n));
    if (std::size_t(in.gcount()) != n)
        data_error(context + ": truncated at byte " + std::to_string(offset + std::size_t(in.gcount())));
    offset += n;
}

uint16_t get_u16(std::istream& in, std::size_t& offset, const std::string& context) {
    unsigned char b[2];
    read_bytes(in, b, 2, offset, context);
    return uint16_t(b[0]) | uint16_t(b[1]) << 8;
}

uint32_t get_u32(std::istream& in, std::size_t& offset, const std::string& context) {
    unsigned char b[4];
    read_bytes(in, b, 4, offset, context);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= uint32_t(b[i]) << (8 * i);
    return v;
}

uint64_t get_u64(std::istream& in, std::size_t& offset, const std::string& context) {
    unsigned char b[8];
    read_bytes(in, b, 8, offset, context);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= uint64_t(b[i]) << (8 * i);
    return v;
}

} // namespace

void write_tensor(std::ostream& out, const Tensor& t) {
    out.write(kMagic, 4);
    put_u32(out, kVersion);
    put_u32(out, uint32_t(t.ndim()));
    for (std::size_t d = 0; d < t.ndim(); ++d) put_u64(out, t.extent(d));
    static_assert(sizeof(float) == 4);
    out.write(reinterpret_cast<const char*>(t.data()), std::streamsize(t.size() * 4));
}

Tensor read_tensor(std::istream& in, std::size_t& offset, const std::string& context) {
    const std::size_t magic_at = offset;
    char magic[4];
    read_bytes(in, magic, 4, offset, context);
    if (std::memcmp(magic, kMagic, 4) != 0)
        data_error(context + ": bad tensor magic at byte " + std::to_string(magic_at));
    const uint32_t version = get_u32(in, offset, context);
    if (version != kVersion)
        data_error(context + ": unsupported tensor version " + std::to_string(version) +
                   " at byte " + std::to_string(offset - 4));
    const uint32_t ndim = get_u32(in, offset, context);
    if (ndim > 8)
        data_error(context + ": implausible rank " + std::to_string(ndim) + " at byte " +
                   std::to_string(offset - 4));
    std::vector<std::size_t> shape(ndim);
    std::size_t n = 1;
    for (uint32_t d = 0; d < ndim; ++d) {
        shape[d] = std::size_t(get_u64(in, offset, context));
        n *= shape[d];
    }
    Tensor t(shape);
    read_bytes(in, t.data(), n * 4, offset, context);
    return t;
}

void save_tensor(const Tensor& t, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) data_error("cannot open " + path + " for writing");
    write_tensor(out, t);
    if (!out) data_error("write failed for " + path);
}

Tensor load_tensor(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) data_error("cannot open " + path);
    std::size_t offset = 0;
    Tensor t = read_tensor(in, offset, path);
    return t;
}

void save_checkpoint(const std::map<std::string, Tensor>& entries, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) data_error("cannot open " + path + " for writing");
    put_u32(out, uint32_t(entries.size()));
    for (const auto& [name, t] : entries) {
        if (name.size() > 0xffff) data_error("checkpoint entry name too long: " + name);
        put_u16(out, uint16_t(name.size()));
        out.write(name.data(), std::streamsize(name.size()));
        write_tensor(out, t);
    }
    if (!out) data_error("write failed for " + path);
}

std::map<std::string, Tensor> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) data_error("cannot open " + path);
    std::size_t offset = 0;
    const uint32_t count = get_u32(in, offset, path);
    std::map<std::string, Tensor> entries;
    for (uint32_t i = 0; i < count; ++i) {
        const uint16_t len = get_u16(in, offset, path);
        std::string name(len, '\0');
        read_bytes(in, name.data(), len, offset, path);
        entries.emplace(name, read_tensor(in, offset, path));
    }
    return entries;
}

KvMap parse_kv(const std::string& text) {
    KvMap kv;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        auto strip = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string stripped = strip(line);
        if (stripped.empty()) continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            config_error("line " + std::to_string(lineno) + ": expected key=value, got '" +
                         stripped + "'");
        const std::string key = strip(stripped.substr(0, eq));
        const std::string value = strip(stripped.substr(eq + 1));
        if (key.empty()) config_error("line " + std::to_string(lineno) + ": empty key");
        if (kv.count(key)) config_error("duplicate key '" + key + "'");
        kv[key] = value;
    }
    return kv;
}

std::string render_kv(const KvMap& kv) {
    std::string out;
    for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
    return out;
}

KvMap load_kv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) data_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return parse_kv(ss.str());
    } catch (const Error& e) {
        throw Error(e.kind(), path + ": " + e.what());
    }
}

void save_kv_file(const KvMap& kv, const std::string& path) {
    std::ofstream out(path);
    if (!out) data_error("cannot open " + path + " for writing");
    out << render_kv(kv);
    if (!out) data_error("write failed for " + path);
}

double kv_get_double(const KvMap& kv, const std::string& key, double fallback) {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    try {
        std::size_t pos = 0;
        const double v = std::stod(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        config_error("key '" + key + "': not a number: '" + it->second + "'");
    }
}

double kv_require_double(const KvMap& kv, const std::string& key) {
    if (!kv.count(key)) config_error("missing required key '" + key + "'");
    return kv_get_double(kv, key, 0.0);
}

long kv_get_long(const KvMap& kv, const std::string& key, long fallback) {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    try {
        std::size_t pos = 0;
        const long v = std::stol(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        config_error("key '" + key + "': not an integer: '" + it->second + "'");
    }
}

std::string kv_get_string(const KvMap& kv, const std::string& key, const std::string& fallback) {
    auto it = kv.find(key);
    return it == kv.end() ? fallback : it->second;
}

} // namespace iflow
