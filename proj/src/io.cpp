#include "dart/io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <string>

namespace dart::io {

namespace {

class Writer {
public:
    void bytes(const char* s, std::size_t len) { out_.insert(out_.end(), s, s + len); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f32(float f) { u32(std::bit_cast<std::uint32_t>(f)); }
    void u8(std::uint8_t v) { out_.push_back(v); }
    std::vector<std::uint8_t> take() { return std::move(out_); }

private:
    std::vector<std::uint8_t> out_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

    void need(std::size_t len) const {
        if (in_.size() - pos_ < len) throw Error(ErrorCode::Format, "file is truncated");
    }
    bool magic(const char* tag) {
        need(4);
        const bool ok = std::memcmp(in_.data() + pos_, tag, 4) == 0;
        pos_ += 4;
        return ok;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    std::uint8_t u8() {
        need(1);
        return in_[pos_++];
    }
    std::size_t remaining() const { return in_.size() - pos_; }

private:
    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

std::uint32_t checked_u32(std::size_t v, const char* what) {
    if (v > 0xFFFFFFFFu) throw Error(ErrorCode::Format, std::string(what) + " does not fit in 32 bits");
    return static_cast<std::uint32_t>(v);
}

}  // namespace

std::vector<std::uint8_t> encode_tokens(const TokenMatrix& tokens) {
    Writer w;
    w.bytes("DTOK", 4);
    w.u32(kFormatVersion);
    w.u32(checked_u32(tokens.n(), "n"));
    w.u32(checked_u32(tokens.d(), "d"));
    std::uint32_t flags = 0;
    if (tokens.has_modality()) flags |= kFlagModality;
    if (tokens.grid()) flags |= kFlagGrid;
    w.u32(flags);
    if (tokens.grid()) {
        w.u32(tokens.grid()->rows);
        w.u32(tokens.grid()->cols);
    }
    if (tokens.has_modality()) {
        for (Modality m : *tokens.modality()) w.u8(static_cast<std::uint8_t>(m));
    }
    for (float f : tokens.data()) w.f32(f);
    return w.take();
}

TokenMatrix decode_tokens(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    if (!r.magic("DTOK")) throw Error(ErrorCode::Format, "missing DTOK magic");
    if (const auto v = r.u32(); v != kFormatVersion) {
        throw Error(ErrorCode::Format, "unsupported DTOK version " + std::to_string(v));
    }
    const std::size_t n = r.u32();
    const std::size_t d = r.u32();
    const std::uint32_t flags = r.u32();
    if (flags & ~(kFlagModality | kFlagGrid)) throw Error(ErrorCode::Format, "unknown DTOK flag bits");
    std::optional<Grid> grid;
    if (flags & kFlagGrid) {
        Grid g;
        g.rows = r.u32();
        g.cols = r.u32();
        grid = g;
    }
    const std::size_t tag_bytes = (flags & kFlagModality) ? n : 0;
    if (d != 0 && n > r.remaining() / d / 4 + 1) throw Error(ErrorCode::Format, "DTOK header is larger than the file");
    if (r.remaining() != tag_bytes + n * d * 4) {
        throw Error(ErrorCode::Format, "DTOK payload is " + std::to_string(r.remaining()) + " bytes, header implies " +
                                           std::to_string(tag_bytes + n * d * 4));
    }
    std::optional<std::vector<Modality>> tags;
    if (flags & kFlagModality) {
        tags.emplace(n);
        for (auto& t : *tags) {
            const auto b = r.u8();
            if (b > 1) throw Error(ErrorCode::Format, "modality byte must be 0 or 1");
            t = static_cast<Modality>(b);
        }
    }
    std::vector<float> data(n * d);
    for (float& f : data) f = r.f32();
    TokenMatrix out(n, d, std::move(data), std::move(tags), grid);
    validate(out);
    return out;
}

std::vector<std::uint8_t> encode_attention(const AttentionMap& attn) {
    Writer w;
    w.bytes("DATT", 4);
    w.u32(kFormatVersion);
    w.u32(checked_u32(attn.n(), "n"));
    for (float f : attn.data()) w.f32(f);
    return w.take();
}

AttentionMap decode_attention(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    if (!r.magic("DATT")) throw Error(ErrorCode::Format, "missing DATT magic");
    if (const auto v = r.u32(); v != kFormatVersion) {
        throw Error(ErrorCode::Format, "unsupported DATT version " + std::to_string(v));
    }
    const std::size_t n = r.u32();
    if (r.remaining() != n * n * 4) throw Error(ErrorCode::Format, "DATT payload does not match n");
    std::vector<float> w(n * n);
    for (float& f : w) f = r.f32();
    AttentionMap out(n, std::move(w));
    validate(out);
    return out;
}

TokenMatrix parse_csv(std::string_view text) {
    auto next_line = [&text]() -> std::optional<std::string_view> {
        while (!text.empty()) {
            const auto end = text.find('\n');
            auto line = text.substr(0, end);
            text = end == std::string_view::npos ? std::string_view{} : text.substr(end + 1);
            if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
            if (!line.empty()) return line;
        }
        return std::nullopt;
    };
    const auto header = next_line();
    if (!header || header->substr(0, 2) != "d=") throw Error(ErrorCode::Format, "CSV must start with d=<int>");
    std::size_t d = 0;
    const auto h = header->substr(2);
    if (auto [p, ec] = std::from_chars(h.data(), h.data() + h.size(), d); ec != std::errc{} || p != h.data() + h.size()) {
        throw Error(ErrorCode::Format, "bad CSV dimension header");
    }
    std::vector<float> data;
    std::size_t n = 0;
    while (const auto line = next_line()) {
        std::size_t cols = 0;
        std::string_view rest = *line;
        for (;;) {
            const auto comma = rest.find(',');
            auto field = rest.substr(0, comma);
            while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
            while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
            float v = 0.0f;
            auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
            if (ec != std::errc{} || p != field.data() + field.size()) {
                throw Error(ErrorCode::Format, "bad CSV value on row " + std::to_string(n));
            }
            data.push_back(v);
            ++cols;
            if (comma == std::string_view::npos) break;
            rest = rest.substr(comma + 1);
        }
        if (cols != d) throw Error(ErrorCode::Format, "CSV row " + std::to_string(n) + " has the wrong width");
        ++n;
    }
    TokenMatrix out(n, d, std::move(data));
    validate(out);
    return out;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    const auto size = static_cast<std::size_t>(in.tellg());
    std::vector<std::uint8_t> bytes(size);
    in.seekg(0);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
    if (!in) throw Error(ErrorCode::Io, "read failed for " + path.string());
    return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

TokenMatrix read_tokens(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    if (path.extension() == ".csv") {
        return parse_csv(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    }
    return decode_tokens(bytes);
}

void write_tokens(const std::filesystem::path& path, const TokenMatrix& tokens) {
    write_file(path, encode_tokens(tokens));
}

AttentionMap read_attention(const std::filesystem::path& path) { return decode_attention(read_file(path)); }

void write_attention(const std::filesystem::path& path, const AttentionMap& attn) {
    write_file(path, encode_attention(attn));
}

}  // namespace dart::io
