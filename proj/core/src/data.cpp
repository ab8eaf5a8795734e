#include "hamball/data.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "hamball/binary_io.hpp"
#include "hamball/error.hpp"

namespace hamball {

void FeatureDataset::validate() const {
    if (labels && labels->size() != features.rows()) {
        throw UsageError("FeatureDataset: " + std::to_string(labels->size()) + " labels for " +
                         std::to_string(features.rows()) + " rows");
    }
    if (!features.all_finite()) throw UsageError("FeatureDataset: non-finite feature value");
}

FeatureDataset FeatureDataset::slice(std::size_t begin, std::size_t end) const {
    if (begin > end || end > size()) throw UsageError("FeatureDataset::slice: bad range");
    FeatureDataset out;
    out.domain = domain;
    const std::size_t d = dim();
    std::vector<double> data(features.data().begin() + static_cast<std::ptrdiff_t>(begin * d),
                             features.data().begin() + static_cast<std::ptrdiff_t>(end * d));
    out.features = Matrix(end - begin, d, std::move(data));
    if (labels) {
        out.labels = std::vector<std::uint32_t>(labels->begin() + static_cast<std::ptrdiff_t>(begin),
                                                labels->begin() + static_cast<std::ptrdiff_t>(end));
    }
    return out;
}

void ShiftSpec::validate() const {
    if (classes < 2) throw UsageError("ShiftSpec: need at least 2 classes");
    if (dim < 2) throw UsageError("ShiftSpec: need dim >= 2");
    if (!(spread > 0.0) || !(center_scale >= 0.0)) throw UsageError("ShiftSpec: spread must be > 0, center_scale >= 0");
    if (!(scale > 0.0)) throw UsageError("ShiftSpec: scale must be > 0");
    if (!std::isfinite(rotation_deg) || !std::isfinite(translation)) throw UsageError("ShiftSpec: non-finite shift");
    if (rotation_planes * 2 > dim) throw UsageError("ShiftSpec: too many rotation planes for dim");
}

namespace {

using Vec = std::vector<double>;

double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

// Orthonormal vectors by Gram-Schmidt on Gaussian draws.
std::vector<Vec> random_orthonormal(std::size_t count, std::size_t dim, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<Vec> basis;
    while (basis.size() < count) {
        Vec v(dim);
        for (double& x : v) x = normal(rng);
        for (const auto& u : basis) {
            const double p = dot(v, u);
            for (std::size_t k = 0; k < dim; ++k) v[k] -= p * u[k];
        }
        const double norm = std::sqrt(dot(v, v));
        if (norm < 1e-8) continue;
        for (double& x : v) x /= norm;
        basis.push_back(std::move(v));
    }
    return basis;
}

struct AffineShift {
    std::vector<std::pair<Vec, Vec>> planes;
    double cos_t = 1.0;
    double sin_t = 0.0;
    double scale = 1.0;
    Vec translation;

    void apply(std::span<double> x) const {
        for (const auto& [u, v] : planes) {
            double xu = 0.0, xv = 0.0;
            for (std::size_t k = 0; k < x.size(); ++k) {
                xu += x[k] * u[k];
                xv += x[k] * v[k];
            }
            const double ru = cos_t * xu - sin_t * xv;
            const double rv = sin_t * xu + cos_t * xv;
            for (std::size_t k = 0; k < x.size(); ++k) x[k] += (ru - xu) * u[k] + (rv - xv) * v[k];
        }
        for (std::size_t k = 0; k < x.size(); ++k) x[k] = scale * x[k] + translation[k];
    }
};

FeatureDataset sample_clusters(const std::vector<Vec>& centers, double spread, std::size_t n, const AffineShift* shift,
                               Domain domain, std::mt19937_64& rng) {
    const std::size_t d = centers.front().size();
    std::uniform_int_distribution<std::size_t> pick(0, centers.size() - 1);
    std::normal_distribution<double> noise(0.0, spread);
    FeatureDataset ds;
    ds.domain = domain;
    ds.features = Matrix(n, d);
    ds.labels = std::vector<std::uint32_t>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = pick(rng);
        (*ds.labels)[i] = static_cast<std::uint32_t>(c);
        auto row = ds.features.row(i);
        for (std::size_t k = 0; k < d; ++k) row[k] = centers[c][k] + noise(rng);
        if (shift) shift->apply(row);
        // Stored as f32 on disk; keep memory identical to what a reload sees.
        for (double& x : row) x = static_cast<double>(static_cast<float>(x));
    }
    return ds;
}

}  // namespace

DomainPair generate(const ShiftSpec& spec, std::size_t n_source, std::size_t n_target, std::uint64_t seed) {
    spec.validate();
    std::seed_seq structure_seq{seed, std::uint64_t{0x5eed}, std::uint64_t{1}};
    std::seed_seq source_seq{seed, std::uint64_t{0x5eed}, std::uint64_t{2}};
    std::seed_seq target_seq{seed, std::uint64_t{0x5eed}, std::uint64_t{3}};
    std::mt19937_64 structure_rng(structure_seq);
    std::mt19937_64 source_rng(source_seq);
    std::mt19937_64 target_rng(target_seq);

    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<Vec> centers(spec.classes, Vec(spec.dim));
    for (auto& c : centers) {
        for (double& x : c) x = spec.center_scale * normal(structure_rng);
    }

    AffineShift shift;
    const auto basis = random_orthonormal(2 * spec.rotation_planes + 1, spec.dim, structure_rng);
    for (std::size_t p = 0; p < spec.rotation_planes; ++p) shift.planes.emplace_back(basis[2 * p], basis[2 * p + 1]);
    const double theta = spec.rotation_deg * std::numbers::pi / 180.0;
    shift.cos_t = std::cos(theta);
    shift.sin_t = std::sin(theta);
    shift.scale = spec.scale;
    // Translation direction is drawn independently of the rotation planes.
    Vec dir(spec.dim);
    for (double& x : dir) x = normal(structure_rng);
    const double dn = std::sqrt(dot(dir, dir));
    const double norm = spec.translation * spec.spread * std::sqrt(static_cast<double>(spec.dim));
    shift.translation.resize(spec.dim);
    for (std::size_t k = 0; k < spec.dim; ++k) shift.translation[k] = norm * dir[k] / dn;

    DomainPair out;
    out.source = sample_clusters(centers, spec.spread, n_source, nullptr, Domain::kSource, source_rng);
    out.target = sample_clusters(centers, spec.spread, n_target, &shift, Domain::kTarget, target_rng);
    return out;
}

void save_features(const FeatureDataset& ds, const std::string& path) {
    ds.validate();
    io::Writer w(path);
    w.magic("HFV1");
    w.put<std::uint32_t>(static_cast<std::uint32_t>(ds.dim()));
    w.put<std::uint64_t>(ds.size());
    w.put<std::uint8_t>(ds.has_labels() ? 1 : 0);
    std::vector<float> row(ds.dim());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto src = ds.features.row(i);
        for (std::size_t k = 0; k < row.size(); ++k) row[k] = static_cast<float>(src[k]);
        w.raw(row.data(), row.size() * sizeof(float));
    }
    if (ds.labels) w.raw(ds.labels->data(), ds.labels->size() * sizeof(std::uint32_t));
    w.close();
}

FeatureDataset load_features(const std::string& path, Domain domain) {
    io::Reader r(path);
    r.expect_magic("HFV1");
    const auto d = r.get<std::uint32_t>("d");
    const auto n = r.get<std::uint64_t>("n");
    std::size_t at = r.offset();
    const auto has_labels = r.get<std::uint8_t>("has_labels");
    if (has_labels > 1) r.fail("has_labels", "flag must be 0 or 1", at);
    if (n > 0 && d == 0) r.fail("d", "zero dimension with nonzero rows", 4);

    FeatureDataset ds;
    ds.domain = domain;
    ds.features = Matrix(static_cast<std::size_t>(n), d);
    std::vector<float> row(d);
    for (std::uint64_t i = 0; i < n; ++i) {
        at = r.offset();
        r.raw(row.data(), row.size() * sizeof(float), "features");
        auto dst = ds.features.row(static_cast<std::size_t>(i));
        for (std::size_t k = 0; k < row.size(); ++k) {
            if (!std::isfinite(row[k])) r.fail("features", "non-finite value", at + k * sizeof(float));
            dst[k] = row[k];
        }
    }
    if (has_labels) {
        ds.labels = std::vector<std::uint32_t>(static_cast<std::size_t>(n));
        r.raw(ds.labels->data(), ds.labels->size() * sizeof(std::uint32_t), "labels");
    }
    r.expect_end();
    return ds;
}

FeatureDataset load_features_csv(const std::string& path, Domain domain, const std::string& label_column) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw IoError(path + ": missing header row");

    auto split = [](const std::string& s) {
        std::vector<std::string> cells;
        std::stringstream ss(s);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
            cells.push_back(cell);
        }
        return cells;
    };
    const auto header = split(line);
    std::ptrdiff_t label_at = -1;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == label_column) label_at = static_cast<std::ptrdiff_t>(c);
    }
    const std::size_t d = header.size() - (label_at >= 0 ? 1 : 0);

    std::vector<double> values;
    std::vector<std::uint32_t> labels;
    std::size_t rows = 0;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto cells = split(line);
        if (cells.size() != header.size()) {
            throw IoError(path + ": line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                          " cells, expected " + std::to_string(header.size()));
        }
        for (std::size_t c = 0; c < cells.size(); ++c) {
            try {
                if (static_cast<std::ptrdiff_t>(c) == label_at) {
                    labels.push_back(static_cast<std::uint32_t>(std::stoul(cells[c])));
                } else {
                    values.push_back(static_cast<double>(static_cast<float>(std::stod(cells[c]))));
                }
            } catch (const std::exception&) {
                throw IoError(path + ": line " + std::to_string(line_no) + " column '" + header[c] +
                              "' is not numeric");
            }
        }
        ++rows;
    }
    FeatureDataset ds;
    ds.domain = domain;
    ds.features = Matrix(rows, d, std::move(values));
    if (label_at >= 0) ds.labels = std::move(labels);
    ds.validate();
    return ds;
}

}  // namespace hamball
