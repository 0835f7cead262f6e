#include "glsim/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "glsim/errors.hpp"

namespace glsim {

namespace {

// cursor over the PPM header; tracks the byte offset for error reports
struct header_cursor {
    const std::vector<std::uint8_t>& bytes;
    std::size_t pos = 0;

    bool eof() const { return pos >= bytes.size(); }
    std::uint8_t peek() const { return bytes[pos]; }

    void skip_space_and_comments() {
        while (!eof()) {
            const std::uint8_t c = peek();
            if (c == '#') {
                while (!eof() && peek() != '\n') ++pos;
            } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                ++pos;
            } else {
                return;
            }
        }
    }

    int read_int(const char* what) {
        skip_space_and_comments();
        if (eof()) throw data_error(std::string("unexpected end of header before ") + what, pos);
        if (peek() < '0' || peek() > '9')
            throw data_error(std::string("expected digit for ") + what, pos);
        long v = 0;
        while (!eof() && peek() >= '0' && peek() <= '9') {
            v = v * 10 + (peek() - '0');
            if (v > 1 << 30) throw data_error(std::string(what) + " out of range", pos);
            ++pos;
        }
        return static_cast<int>(v);
    }
};

} // namespace

image_tensor decode_ppm(const std::vector<std::uint8_t>& bytes) {
    header_cursor cur{bytes};
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6')
        throw data_error("not a binary PPM (P6) file", 0);
    cur.pos = 2;

    const int width = cur.read_int("width");
    const int height = cur.read_int("height");
    const int maxval = cur.read_int("maxval");
    if (width < 1 || height < 1)
        throw data_error("image dimensions must be positive", cur.pos);
    if (maxval != 255)
        throw data_error("only maxval 255 is supported, got " + std::to_string(maxval), cur.pos);

    // exactly one whitespace byte separates the header from the raster
    if (cur.eof()) throw data_error("missing raster separator", cur.pos);
    const std::uint8_t sep = cur.peek();
    if (sep != '\n' && sep != ' ' && sep != '\t' && sep != '\r')
        throw data_error("expected whitespace before raster data", cur.pos);
    ++cur.pos;

    const std::size_t need = static_cast<std::size_t>(width) * height * 3;
    if (bytes.size() - cur.pos < need)
        throw data_error("raster truncated: need " + std::to_string(need) + " bytes, have " +
                             std::to_string(bytes.size() - cur.pos),
                         bytes.size());

    image_tensor img(width, height, 3);
    const std::uint8_t* p = bytes.data() + cur.pos;
    for (std::size_t i = 0; i < need; ++i)
        img.data[i] = static_cast<float>(p[i]) / 255.0f;
    return img;
}

std::vector<std::uint8_t> encode_ppm(const image_tensor& image) {
    std::string head = "P6\n" + std::to_string(image.width) + " " +
                       std::to_string(image.height) + "\n255\n";
    std::vector<std::uint8_t> out(head.begin(), head.end());
    out.reserve(out.size() + image.data.size());
    for (float v : image.data) {
        const double clamped = std::clamp(static_cast<double>(v), 0.0, 1.0);
        out.push_back(static_cast<std::uint8_t>(std::lround(clamped * 255.0)));
    }
    return out;
}

void normalize_image(image_tensor& image) {
    for (float& v : image.data) v = (v - 0.5f) / 0.5f;
}

std::vector<std::uint8_t> encode_pgm_heatmap(const std::vector<double>& scores,
                                             int rows, int cols,
                                             int out_w, int out_h) {
    if (rows < 1 || cols < 1 || scores.size() != static_cast<std::size_t>(rows) * cols)
        throw config_error("heatmap grid does not match score count");

    const auto [mn_it, mx_it] = std::minmax_element(scores.begin(), scores.end());
    const double mn = *mn_it, mx = *mx_it;

    std::vector<std::uint8_t> pixels(scores.size(), 0);
    if (mx > mn) {
        for (std::size_t i = 0; i < scores.size(); ++i)
            pixels[i] = static_cast<std::uint8_t>(
                std::lround(255.0 * (scores[i] - mn) / (mx - mn)));
    } // constant map stays all zeros

    int w = cols, h = rows;
    if (out_w > 0 && out_h > 0 && (out_w != cols || out_h != rows)) {
        std::vector<std::uint8_t> up(static_cast<std::size_t>(out_w) * out_h);
        for (int y = 0; y < out_h; ++y) {
            const int sy = std::min(rows - 1, y * rows / out_h);
            for (int x = 0; x < out_w; ++x) {
                const int sx = std::min(cols - 1, x * cols / out_w);
                up[static_cast<std::size_t>(y) * out_w + x] =
                    pixels[static_cast<std::size_t>(sy) * cols + sx];
            }
        }
        pixels = std::move(up);
        w = out_w;
        h = out_h;
    }

    std::string head = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
    std::vector<std::uint8_t> out(head.begin(), head.end());
    out.insert(out.end(), pixels.begin(), pixels.end());
    return out;
}

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw data_error("cannot open file: " + path);
    return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(f)),
                                     std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw data_error("cannot open file for writing: " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
    if (!f) throw data_error("short write: " + path);
}

void write_file(const std::string& path, const std::string& text) {
    std::vector<std::uint8_t> bytes(text.begin(), text.end());
    write_file(path, bytes);
}

} // namespace glsim
