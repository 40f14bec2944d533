#include "proprio/pnm.hpp"

#include <cctype>
#include <fstream>
#include <stdexcept>
#include <string>

namespace proprio {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw std::runtime_error(path + ": " + what);
}

// Reads one header token, skipping whitespace and '#' comment lines.
std::string next_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
            continue;
        }
        if (!std::isspace(c)) {
            tok.push_back(static_cast<char>(c));
            break;
        }
    }
    while ((c = in.get()) != EOF && !std::isspace(c) && c != '#') tok.push_back(static_cast<char>(c));
    if (c != EOF) in.unget();  // leave the terminator: after maxval it is the raster separator
    return tok;
}

int parse_dim(std::istream& in, const std::string& path, const char* name) {
    const std::string tok = next_token(in);
    if (tok.empty()) fail(path, std::string("truncated header, missing ") + name);
    std::size_t pos = 0;
    long v = 0;
    try {
        v = std::stol(tok, &pos);
    } catch (const std::exception&) {
        fail(path, std::string("bad ") + name + " '" + tok + "'");
    }
    if (pos != tok.size() || v <= 0 || v > 1 << 20)
        fail(path, std::string("bad ") + name + " '" + tok + "'");
    return static_cast<int>(v);
}

void read_header(std::istream& in, const std::string& path, const char* magic, int& w, int& h) {
    const std::string m = next_token(in);
    if (m != magic) fail(path, "expected " + std::string(magic) + " header, got '" + m + "'");
    w = parse_dim(in, path, "width");
    h = parse_dim(in, path, "height");
    const int maxval = parse_dim(in, path, "maxval");
    if (maxval != 255) fail(path, "unsupported maxval " + std::to_string(maxval));
    // The single whitespace byte separating header from raster.
    const int sep = in.get();
    if (sep == EOF || !std::isspace(sep)) fail(path, "missing raster separator");
}

}  // namespace

void write_pgm(const GrayImage& img, const std::string& path) {
    if (!img.valid()) throw std::invalid_argument("write_pgm: invalid image");
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(path, "cannot open for writing");
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.data.data()),
              static_cast<std::streamsize>(img.data.size()));
    if (!out) fail(path, "write failed");
}

GrayImage read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open");
    int w = 0, h = 0;
    read_header(in, path, "P5", w, h);
    GrayImage img(w, h);
    in.read(reinterpret_cast<char*>(img.data.data()), static_cast<std::streamsize>(img.data.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.data.size()))
        fail(path, "truncated raster");
    return img;
}

void write_ppm(const RgbImage& img, const std::string& path) {
    if (!img.valid()) throw std::invalid_argument("write_ppm: invalid image");
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(path, "cannot open for writing");
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.data.data()),
              static_cast<std::streamsize>(img.data.size()));
    if (!out) fail(path, "write failed");
}

RgbImage read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open");
    int w = 0, h = 0;
    read_header(in, path, "P6", w, h);
    RgbImage img(w, h);
    in.read(reinterpret_cast<char*>(img.data.data()), static_cast<std::streamsize>(img.data.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.data.size()))
        fail(path, "truncated raster");
    return img;
}

}  // namespace proprio
