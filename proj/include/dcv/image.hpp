#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace dcv {

/// Row-major scalar raster with a per-pixel validity mask. Masked-out
/// pixels take no part in any windowed sum.
class ScalarImage {
  public:
    ScalarImage() = default;
    ScalarImage(int width, int height, double fill = 0.0);
    /// Throws std::invalid_argument when data.size() != width * height.
    ScalarImage(int width, int height, std::vector<double> data);

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(int x, int y) { return data_[index(x, y)]; }
    double operator()(int x, int y) const { return data_[index(x, y)]; }
    std::size_t index(int x, int y) const
    {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(x);
    }

    bool valid(int x, int y) const { return mask_[index(x, y)] != 0; }
    void set_valid(int x, int y, bool v) { mask_[index(x, y)] = v ? 1 : 0; }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }
    std::span<std::uint8_t> mask() { return mask_; }
    std::span<const std::uint8_t> mask() const { return mask_; }

    bool same_shape(const ScalarImage& other) const
    {
        return width_ == other.width_ && height_ == other.height_;
    }

  private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> data_;
    std::vector<std::uint8_t> mask_;
};

/// Truncated, normalized Gaussian window. The 2D weights are the outer
/// product of the 1D weights and sum to one.
class GaussianKernel {
  public:
    explicit GaussianKernel(double sigma = 1.5, int radius = 3);

    int radius() const { return radius_; }
    double sigma() const { return sigma_; }
    /// 1D weight at offset d in [-radius, radius].
    double weight(int d) const { return weights_[static_cast<std::size_t>(d + radius_)]; }
    double weight(int dx, int dy) const { return weight(dx) * weight(dy); }

  private:
    double sigma_;
    int radius_;
    std::vector<double> weights_;
};

/// out(p) = sum_q G(p - q) mask(q) f(q) over pixels q inside the image.
/// Separable two-pass OpenMP kernel.
std::vector<double> masked_convolve(std::span<const double> f, std::span<const std::uint8_t> mask,
                                    int width, int height, const GaussianKernel& kernel);

/// Bilinear interpolation at continuous pixel coordinates (pixel centres at
/// integers), with the partial derivatives of the interpolant.
struct BilinearSample {
    double value = 0.0;
    double dx = 0.0;
    double dy = 0.0;
    bool inside = false;
};

/// inside is false when (x, y) lies outside [0, w-1] x [0, h-1].
BilinearSample sample_bilinear(const ScalarImage& img, double x, double y);

/// Binomial (1 4 6 4 1)/16 blur followed by 2x decimation; output size is
/// ((w+1)/2, (h+1)/2). Masked pixels are excluded from the blur.
ScalarImage downsample_half(const ScalarImage& img);

/// Levels finest first; level k has (roughly) 2^-k resolution.
std::vector<ScalarImage> build_pyramid(const ScalarImage& img, int levels);

/// Binary PGM (P5, 8 or 16 bit) or PPM (P6, 8 or 16 bit, converted to
/// luminance 0.299 R + 0.587 G + 0.114 B). Values are scaled to [0, 1].
/// Throws IoError on malformed files.
ScalarImage read_image(const std::filesystem::path& path);

/// 8- or 16-bit binary PGM; values are clamped to [0, 1].
void write_pgm(const std::filesystem::path& path, const ScalarImage& img, int bits = 8);

/// Raw float64 dump: 8-byte magic "DCVF64\0\0", uint32 width, uint32 height
/// (little endian), then width*height doubles row-major.
void write_raw_f64(const std::filesystem::path& path, const ScalarImage& img);
ScalarImage read_raw_f64(const std::filesystem::path& path);

namespace reference {

/// Direct 2D evaluation of masked_convolve, serial.
std::vector<double> masked_convolve(std::span<const double> f, std::span<const std::uint8_t> mask,
                                    int width, int height, const GaussianKernel& kernel);

} // namespace reference

} // namespace dcv
