#include "core/image_io.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "core/errors.hpp"

namespace linecolor {

void save_rgb8(const std::string& path, const Image& img) {
    cv::Mat m(img.h, img.w, CV_8UC3);
    for (int y = 0; y < img.h; ++y) {
        auto* row = m.ptr<cv::Vec3b>(y);
        for (int x = 0; x < img.w; ++x) {
            // OpenCV stores BGR.
            row[x] = cv::Vec3b(to_u8(img.at(y, x, 2)), to_u8(img.at(y, x, 1)), to_u8(img.at(y, x, 0)));
        }
    }
    if (!cv::imwrite(path, m)) throw DataError("failed to write image: " + path);
}

Image load_rgb8(const std::string& path) {
    cv::Mat m = cv::imread(path, cv::IMREAD_COLOR);
    if (m.empty()) throw DataError("failed to read image: " + path);
    Image img(m.rows, m.cols);
    for (int y = 0; y < m.rows; ++y) {
        const auto* row = m.ptr<cv::Vec3b>(y);
        for (int x = 0; x < m.cols; ++x) {
            img.at(y, x, 0) = from_u8(row[x][2]);
            img.at(y, x, 1) = from_u8(row[x][1]);
            img.at(y, x, 2) = from_u8(row[x][0]);
        }
    }
    return img;
}

void save_gray8(const std::string& path, const Grid<std::uint8_t>& g) {
    cv::Mat m(g.h, g.w, CV_8UC1);
    for (int y = 0; y < g.h; ++y)
        for (int x = 0; x < g.w; ++x) m.at<std::uint8_t>(y, x) = g.at(y, x);
    if (!cv::imwrite(path, m)) throw DataError("failed to write image: " + path);
}

Grid<std::uint8_t> load_gray8(const std::string& path) {
    cv::Mat m = cv::imread(path, cv::IMREAD_GRAYSCALE);
    if (m.empty()) throw DataError("failed to read image: " + path);
    Grid<std::uint8_t> g(m.rows, m.cols);
    for (int y = 0; y < m.rows; ++y)
        for (int x = 0; x < m.cols; ++x) g.at(y, x) = m.at<std::uint8_t>(y, x);
    return g;
}

void save_gray16(const std::string& path, const Grid<std::int32_t>& g) {
    cv::Mat m(g.h, g.w, CV_16UC1);
    for (int y = 0; y < g.h; ++y)
        for (int x = 0; x < g.w; ++x) {
            std::int32_t v = g.at(y, x);
            if (v < 0 || v > 65535) throw DataError("label out of 16-bit range at (" + std::to_string(x) + "," + std::to_string(y) + "): " + std::to_string(v));
            m.at<std::uint16_t>(y, x) = static_cast<std::uint16_t>(v);
        }
    if (!cv::imwrite(path, m)) throw DataError("failed to write image: " + path);
}

Grid<std::int32_t> load_gray16(const std::string& path) {
    cv::Mat m = cv::imread(path, cv::IMREAD_UNCHANGED);
    if (m.empty()) throw DataError("failed to read image: " + path);
    if (m.type() != CV_16UC1) throw DataError("expected 16-bit single channel image: " + path);
    Grid<std::int32_t> g(m.rows, m.cols);
    for (int y = 0; y < m.rows; ++y)
        for (int x = 0; x < m.cols; ++x) g.at(y, x) = m.at<std::uint16_t>(y, x);
    return g;
}

}  // namespace linecolor
