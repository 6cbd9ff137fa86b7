#include "geff/export.hpp"

#include <algorithm>
#include <cmath>

#include "geff/image_io.hpp"
#include "geff/ply_io.hpp"

namespace geff {

std::vector<std::uint8_t> pca_colors(const Tensor& features) {
    const int n = features.rows;
    const int d = features.cols;
    std::vector<std::uint8_t> out(static_cast<std::size_t>(n) * 3, 0);
    if (n == 0) return out;

    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    for (int i = 0; i < n; ++i)
        mean += Eigen::Map<const Eigen::VectorXd>(features.row_ptr(i), d);
    mean /= n;

    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd x =
            Eigen::Map<const Eigen::VectorXd>(features.row_ptr(i), d) - mean;
        cov += x * x.transpose();
    }
    cov /= std::max(1, n - 1);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    Eigen::MatrixXd basis(d, 3);
    for (int k = 0; k < 3; ++k)
        basis.col(k) = solver.eigenvectors().col(d - 1 - std::min(k, d - 1));

    Eigen::MatrixXd projected(n, 3);
    for (int i = 0; i < n; ++i)
        projected.row(i) =
            ((Eigen::Map<const Eigen::VectorXd>(features.row_ptr(i), d) - mean).transpose() *
             basis);

    for (int k = 0; k < 3; ++k) {
        const double lo = projected.col(k).minCoeff();
        const double hi = projected.col(k).maxCoeff();
        const double span = hi - lo > 1e-12 ? hi - lo : 1.0;
        for (int i = 0; i < n; ++i)
            out[static_cast<std::size_t>(i) * 3 + k] = static_cast<std::uint8_t>(
                std::lround(255.0 * (projected(i, k) - lo) / span));
    }
    return out;
}

void export_decoded_cloud_ply(const std::string& path, const DecodedPointCloud& dpc) {
    const auto colors = pca_colors(dpc.features);
    PlyData ply;
    ply.vertex_count = dpc.size();
    ply.properties = {"x", "y", "z", "sdf"};
    ply.uchar_properties = {"red", "green", "blue"};
    ply.floats.resize(dpc.size() * 4);
    ply.uchars = colors;
    for (std::size_t i = 0; i < dpc.size(); ++i) {
        float* row = &ply.floats[i * 4];
        row[0] = static_cast<float>(dpc.points[i].x());
        row[1] = static_cast<float>(dpc.points[i].y());
        row[2] = static_cast<float>(dpc.points[i].z());
        row[3] = static_cast<float>(dpc.sdf[i]);
    }
    write_ply(path, ply);
}

void export_score_ply(const std::string& path, const DecodedPointCloud& dpc,
                      const std::vector<double>& scores) {
    if (scores.size() != dpc.size()) throw ShapeError("score count mismatch");
    PlyData ply;
    ply.vertex_count = dpc.size();
    ply.properties = {"x", "y", "z", "score"};
    ply.uchar_properties = {"red", "green", "blue"};
    ply.floats.resize(dpc.size() * 4);
    ply.uchars.resize(dpc.size() * 3);
    for (std::size_t i = 0; i < dpc.size(); ++i) {
        float* row = &ply.floats[i * 4];
        row[0] = static_cast<float>(dpc.points[i].x());
        row[1] = static_cast<float>(dpc.points[i].y());
        row[2] = static_cast<float>(dpc.points[i].z());
        row[3] = static_cast<float>(scores[i]);
        // Blue -> red score ramp.
        const double s = std::clamp(scores[i], 0.0, 1.0);
        ply.uchars[i * 3 + 0] = static_cast<std::uint8_t>(std::lround(255 * s));
        ply.uchars[i * 3 + 1] = 32;
        ply.uchars[i * 3 + 2] = static_cast<std::uint8_t>(std::lround(255 * (1 - s)));
    }
    write_ply(path, ply);
}

void export_grid_pgm(const std::string& path, const OccupancyGrid& grid) {
    std::vector<std::uint8_t> img(grid.occupied.size());
    for (std::size_t i = 0; i < img.size(); ++i) img[i] = grid.occupied[i] ? 255 : 0;
    write_pgm8(path, grid.width, grid.height, img);
}

void export_cost_pgm(const std::string& path, const OccupancyGrid& grid) {
    std::vector<std::uint16_t> img(grid.cost.size());
    for (std::size_t i = 0; i < img.size(); ++i)
        img[i] = static_cast<std::uint16_t>(
            std::min(65535.0, std::max(0.0, grid.cost[i] * 1000.0)));
    write_pgm16(path, grid.width, grid.height, img);
}

void export_path_ppm(const std::string& path, const OccupancyGrid& grid,
                     const PlanResult& plan) {
    std::vector<std::uint8_t> rgb(grid.occupied.size() * 3);
    for (std::size_t i = 0; i < grid.occupied.size(); ++i) {
        const std::uint8_t v = grid.occupied[i] ? 0 : 255;
        rgb[i * 3] = rgb[i * 3 + 1] = rgb[i * 3 + 2] = v;
    }
    auto paint = [&](const GridCell& c, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
        if (!grid.in_bounds(c)) return;
        const std::size_t i = grid.index(c);
        rgb[i * 3] = r;
        rgb[i * 3 + 1] = g;
        rgb[i * 3 + 2] = b;
    };
    for (const GridCell& c : plan.cells) paint(c, 220, 40, 40);
    if (!plan.cells.empty()) {
        paint(plan.cells.front(), 40, 200, 40);
        paint(plan.cells.back(), 40, 40, 220);
    }
    write_ppm(path, grid.width, grid.height, rgb);
}

void export_render(const std::string& prefix, const RenderedImage& image) {
    std::vector<std::uint8_t> rgb(static_cast<std::size_t>(image.width) * image.height * 3);
    for (std::size_t i = 0; i < rgb.size(); ++i)
        rgb[i] = static_cast<std::uint8_t>(
            std::lround(std::clamp(image.color[i], 0.f, 1.f) * 255.f));
    write_png_rgb8(prefix + "_color.png", image.width, image.height, rgb);

    std::vector<std::uint16_t> depth(static_cast<std::size_t>(image.width) * image.height);
    for (std::size_t i = 0; i < depth.size(); ++i)
        depth[i] = static_cast<std::uint16_t>(
            std::min(65535.0, std::max(0.0, static_cast<double>(image.depth_z[i]) * 1000.0)));
    write_pgm16(prefix + "_depth.pgm", image.width, image.height, depth);

    Tensor feats(image.width * image.height, image.feature_dim);
    for (int i = 0; i < feats.rows; ++i)
        for (int k = 0; k < image.feature_dim; ++k)
            feats.at(i, k) = image.feature[static_cast<std::size_t>(i) * image.feature_dim + k];
    const auto pca = pca_colors(feats);
    write_png_rgb8(prefix + "_feature.png", image.width, image.height, pca);
}

}  // namespace geff
