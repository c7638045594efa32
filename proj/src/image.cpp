#include "dcv/image.hpp"

#include "dcv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

namespace dcv {

ScalarImage::ScalarImage(int width, int height, double fill)
    : width_(width), height_(height),
      data_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill),
      mask_(data_.size(), 1)
{
    if (width < 0 || height < 0)
        throw std::invalid_argument("image dimensions must be non-negative");
}

ScalarImage::ScalarImage(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)), mask_(data_.size(), 1)
{
    if (width < 0 || height < 0 ||
        data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
        throw std::invalid_argument("image data length does not match width * height");
}

GaussianKernel::GaussianKernel(double sigma, int radius) : sigma_(sigma), radius_(radius)
{
    if (!(sigma > 0.0) || radius < 0)
        throw std::invalid_argument("Gaussian kernel needs sigma > 0 and radius >= 0");
    weights_.resize(static_cast<std::size_t>(2 * radius + 1));
    double total = 0.0;
    for (int d = -radius; d <= radius; ++d) {
        const double w = std::exp(-0.5 * d * d / (sigma * sigma));
        weights_[static_cast<std::size_t>(d + radius)] = w;
        total += w;
    }
    for (double& w : weights_)
        w /= total;
}

std::vector<double> masked_convolve(std::span<const double> f, std::span<const std::uint8_t> mask,
                                    int width, int height, const GaussianKernel& kernel)
{
    const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    if (f.size() != n || mask.size() != n)
        throw std::invalid_argument("masked_convolve: buffer size mismatch");
    const int r = kernel.radius();
    std::vector<double> rows(n), out(n);

#pragma omp parallel for schedule(static)
    for (int y = 0; y < height; ++y) {
        const std::size_t base = static_cast<std::size_t>(y) * static_cast<std::size_t>(width);
        for (int x = 0; x < width; ++x) {
            double s = 0.0;
            const int lo = std::max(0, x - r), hi = std::min(width - 1, x + r);
            for (int q = lo; q <= hi; ++q)
                if (mask[base + static_cast<std::size_t>(q)])
                    s += kernel.weight(x - q) * f[base + static_cast<std::size_t>(q)];
            rows[base + static_cast<std::size_t>(x)] = s;
        }
    }
#pragma omp parallel for schedule(static)
    for (int y = 0; y < height; ++y) {
        const int lo = std::max(0, y - r), hi = std::min(height - 1, y + r);
        for (int x = 0; x < width; ++x) {
            double s = 0.0;
            for (int q = lo; q <= hi; ++q)
                s += kernel.weight(y - q) *
                     rows[static_cast<std::size_t>(q) * static_cast<std::size_t>(width) +
                          static_cast<std::size_t>(x)];
            out[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                static_cast<std::size_t>(x)] = s;
        }
    }
    return out;
}

BilinearSample sample_bilinear(const ScalarImage& img, double x, double y)
{
    BilinearSample s;
    const int w = img.width(), h = img.height();
    if (!(x >= 0.0 && y >= 0.0 && x <= w - 1 && y <= h - 1))
        return s;
    int x0 = static_cast<int>(std::floor(x));
    int y0 = static_cast<int>(std::floor(y));
    x0 = std::min(x0, std::max(w - 2, 0));
    y0 = std::min(y0, std::max(h - 2, 0));
    const int x1 = std::min(x0 + 1, w - 1);
    const int y1 = std::min(y0 + 1, h - 1);
    const double fx = x - x0, fy = y - y0;
    const double v00 = img(x0, y0), v10 = img(x1, y0), v01 = img(x0, y1), v11 = img(x1, y1);
    const double top = v00 + fx * (v10 - v00);
    const double bottom = v01 + fx * (v11 - v01);
    s.value = top + fy * (bottom - top);
    s.dx = (1.0 - fy) * (v10 - v00) + fy * (v11 - v01);
    s.dy = bottom - top;
    s.inside = true;
    return s;
}

ScalarImage downsample_half(const ScalarImage& img)
{
    static constexpr double taps[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
    const int w = img.width(), h = img.height();
    const int ow = (w + 1) / 2, oh = (h + 1) / 2;
    ScalarImage out(ow, oh);
#pragma omp parallel for schedule(static)
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            const int cx = 2 * ox, cy = 2 * oy;
            double s = 0.0, wsum = 0.0;
            for (int dy = -2; dy <= 2; ++dy) {
                const int y = cy + dy;
                if (y < 0 || y >= h)
                    continue;
                for (int dx = -2; dx <= 2; ++dx) {
                    const int x = cx + dx;
                    if (x < 0 || x >= w || !img.valid(x, y))
                        continue;
                    const double wt = taps[dx + 2] * taps[dy + 2];
                    s += wt * img(x, y);
                    wsum += wt;
                }
            }
            out(ox, oy) = wsum > 0.0 ? s / wsum : 0.0;
            out.set_valid(ox, oy, wsum > 0.0 && img.valid(cx, cy));
        }
    }
    return out;
}

std::vector<ScalarImage> build_pyramid(const ScalarImage& img, int levels)
{
    if (levels < 1)
        throw std::invalid_argument("pyramid needs at least one level");
    std::vector<ScalarImage> pyr{img};
    for (int k = 1; k < levels; ++k)
        pyr.push_back(downsample_half(pyr.back()));
    return pyr;
}

namespace {

// Reads one header token of a netpbm file, skipping whitespace and comments.
std::string pnm_token(std::istream& in)
{
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n')
                ;
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty())
                break;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    return tok;
}

int pnm_int(std::istream& in, const char* what)
{
    const std::string tok = pnm_token(in);
    try {
        std::size_t used = 0;
        const int v = std::stoi(tok, &used);
        if (used != tok.size() || v <= 0)
            throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw IoError(std::string("netpbm: bad ") + what + " '" + tok + "'");
    }
}

void write_u32(std::ostream& out, std::uint32_t v)
{
    const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v >> 16),
                                static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& in)
{
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
        throw IoError("truncated header");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

constexpr char kF64Magic[8] = {'D', 'C', 'V', 'F', '6', '4', '\0', '\0'};

} // namespace

ScalarImage read_image(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open '" + path.string() + "'");
    const std::string magic = pnm_token(in);
    int channels = 0;
    if (magic == "P5")
        channels = 1;
    else if (magic == "P6")
        channels = 3;
    else
        throw IoError("'" + path.string() + "' is not a binary PGM/PPM (magic '" + magic + "')");
    const int w = pnm_int(in, "width");
    const int h = pnm_int(in, "height");
    const int maxval = pnm_int(in, "maxval");
    if (maxval > 65535)
        throw IoError("netpbm: maxval above 65535");
    const int bytes = maxval < 256 ? 1 : 2;
    const std::size_t count = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) *
                              static_cast<std::size_t>(channels);
    std::vector<unsigned char> raw(count * static_cast<std::size_t>(bytes));
    if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size())))
        throw IoError("'" + path.string() + "': truncated pixel data");

    const auto sample = [&](std::size_t i) {
        const double v = bytes == 1 ? raw[i] : (raw[2 * i] << 8 | raw[2 * i + 1]);
        return v / maxval;
    };
    ScalarImage img(w, h);
    for (std::size_t p = 0; p < img.size(); ++p) {
        if (channels == 1)
            img.data()[p] = sample(p);
        else
            img.data()[p] = 0.299 * sample(3 * p) + 0.587 * sample(3 * p + 1) +
                            0.114 * sample(3 * p + 2);
    }
    return img;
}

void write_pgm(const std::filesystem::path& path, const ScalarImage& img, int bits)
{
    if (bits != 8 && bits != 16)
        throw std::invalid_argument("PGM bit depth must be 8 or 16");
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot open '" + path.string() + "' for writing");
    const int maxval = bits == 8 ? 255 : 65535;
    out << "P5\n" << img.width() << ' ' << img.height() << '\n' << maxval << '\n';
    for (double v : img.data()) {
        const auto q = static_cast<unsigned>(std::lround(std::clamp(v, 0.0, 1.0) * maxval));
        if (bits == 8) {
            out.put(static_cast<char>(q));
        } else {
            out.put(static_cast<char>(q >> 8));
            out.put(static_cast<char>(q & 0xFF));
        }
    }
    if (!out)
        throw IoError("write error on '" + path.string() + "'");
}

void write_raw_f64(const std::filesystem::path& path, const ScalarImage& img)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(kF64Magic, 8);
    write_u32(out, static_cast<std::uint32_t>(img.width()));
    write_u32(out, static_cast<std::uint32_t>(img.height()));
    for (double v : img.data()) {
        std::uint64_t bitsv;
        std::memcpy(&bitsv, &v, 8);
        for (int k = 0; k < 8; ++k)
            out.put(static_cast<char>((bitsv >> (8 * k)) & 0xFF));
    }
    if (!out)
        throw IoError("write error on '" + path.string() + "'");
}

ScalarImage read_raw_f64(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open '" + path.string() + "'");
    char magic[8];
    if (!in.read(magic, 8) || std::memcmp(magic, kF64Magic, 8) != 0)
        throw IoError("'" + path.string() + "' is not a float64 raster");
    const auto w = read_u32(in);
    const auto h = read_u32(in);
    ScalarImage img(static_cast<int>(w), static_cast<int>(h));
    for (double& v : img.data()) {
        unsigned char b[8];
        if (!in.read(reinterpret_cast<char*>(b), 8))
            throw IoError("'" + path.string() + "': truncated data");
        std::uint64_t bitsv = 0;
        for (int k = 7; k >= 0; --k)
            bitsv = (bitsv << 8) | b[k];
        std::memcpy(&v, &bitsv, 8);
    }
    return img;
}

namespace reference {

std::vector<double> masked_convolve(std::span<const double> f, std::span<const std::uint8_t> mask,
                                    int width, int height, const GaussianKernel& kernel)
{
    const int r = kernel.radius();
    std::vector<double> out(f.size(), 0.0);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            double s = 0.0;
            for (int dy = -r; dy <= r; ++dy) {
                for (int dx = -r; dx <= r; ++dx) {
                    const int qx = x + dx, qy = y + dy;
                    if (qx < 0 || qy < 0 || qx >= width || qy >= height)
                        continue;
                    const std::size_t q = static_cast<std::size_t>(qy) * width + qx;
                    if (mask[q])
                        s += kernel.weight(dx, dy) * f[q];
                }
            }
            out[static_cast<std::size_t>(y) * width + x] = s;
        }
    }
    return out;
}

} // namespace reference

} // namespace dcv
