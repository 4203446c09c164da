#include "mlbpgd/image_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mlbpgd/errors.hpp"

namespace mlbpgd {

namespace {

[[noreturn]] void fail(const std::string& what, std::size_t offset) {
    throw FormatError(what + " at byte " + std::to_string(offset));
}

// Cursor over the raw file bytes; header parsing tracks offsets so errors
// can point at the offending byte.
struct Scanner {
    const std::string& bytes;
    std::size_t pos = 0;

    bool eof() const { return pos >= bytes.size(); }

    void skip_space_and_comments() {
        while (!eof()) {
            char c = bytes[pos];
            if (c == '#') {
                while (!eof() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos;
            } else {
                break;
            }
        }
    }

    long next_int(const char* what) {
        skip_space_and_comments();
        if (eof() || !std::isdigit(static_cast<unsigned char>(bytes[pos])))
            fail(std::string("expected ") + what, pos);
        long v = 0;
        while (!eof() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
            v = v * 10 + (bytes[pos] - '0');
            if (v > 1'000'000'000L) fail(std::string(what) + " out of range", pos);
            ++pos;
        }
        return v;
    }
};

} // namespace

GridVector load_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string bytes = buf.str();

    Scanner sc{bytes};
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '2' && bytes[1] != '5'))
        fail("bad magic number (want P2 or P5)", 0);
    const bool binary = bytes[1] == '5';
    sc.pos = 2;

    long width = sc.next_int("width");
    long height = sc.next_int("height");
    long maxval = sc.next_int("maxval");
    if (width <= 0 || height <= 0) fail("nonpositive image size", sc.pos);
    if (maxval <= 0 || maxval > 65535) fail("maxval outside [1, 65535]", sc.pos);
    if (width != height)
        fail("image must be square, got " + std::to_string(width) + "x" +
                 std::to_string(height),
             sc.pos);

    GridVector img = GridVector::grid(static_cast<int>(width));
    const double scale = 1.0 / static_cast<double>(maxval);

    if (binary) {
        if (sc.eof() || !std::isspace(static_cast<unsigned char>(bytes[sc.pos])))
            fail("expected single whitespace before raster", sc.pos);
        ++sc.pos;
        const int bytes_per = maxval > 255 ? 2 : 1;
        const std::size_t need = img.size() * static_cast<std::size_t>(bytes_per);
        if (bytes.size() - sc.pos < need)
            fail("raster truncated", bytes.size());
        for (std::size_t i = 0; i < img.size(); ++i) {
            unsigned v = static_cast<unsigned char>(bytes[sc.pos++]);
            if (bytes_per == 2)
                v = (v << 8) | static_cast<unsigned char>(bytes[sc.pos++]);
            if (v > static_cast<unsigned>(maxval))
                fail("sample exceeds maxval", sc.pos - bytes_per);
            img[i] = static_cast<double>(v) * scale;
        }
    } else {
        for (std::size_t i = 0; i < img.size(); ++i) {
            long v = sc.next_int("sample");
            if (v > maxval) fail("sample exceeds maxval", sc.pos);
            img[i] = static_cast<double>(v) * scale;
        }
    }
    return img;
}

void save_pgm(const GridVector& x, const std::string& path) {
    int side = x.side;
    if (side == 0) {
        side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(x.size()))));
        if (static_cast<std::size_t>(side) * side != x.size())
            throw ShapeError("save_pgm: vector is not a square grid");
    }
    if (!all_finite(x)) throw ArgError("save_pgm: non-finite samples");

    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open " + path + " for writing");
    out << "P5\n" << side << " " << side << "\n255\n";
    for (std::size_t i = 0; i < x.size(); ++i) {
        double v = std::min(1.0, std::max(0.0, x[i]));
        out.put(static_cast<char>(static_cast<unsigned char>(std::floor(255.0 * v + 0.5))));
    }
    if (!out) throw FormatError("short write to " + path);
}

} // namespace mlbpgd
