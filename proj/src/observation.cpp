#include "paramtrack/observation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "paramtrack/csv.hpp"
#include "paramtrack/errors.hpp"
#include "paramtrack/rng.hpp"

namespace paramtrack {

void ObservationSpec::validate(int dimension, double dt) const {
    if (mask.empty()) throw ConfigError("observation: mask must be non-empty");
    for (int idx : mask)
        if (idx < 0 || idx >= dimension)
            throw ConfigError("observation: mask index " + std::to_string(idx) +
                              " out of range for dimension " + std::to_string(dimension));
    if (!(sampling_interval > 0.0)) throw ConfigError("observation: sampling_interval must be > 0");
    double ratio = sampling_interval / dt;
    auto stride = std::llround(ratio);
    if (stride < 1 || std::abs(ratio - static_cast<double>(stride)) > 1e-9 * std::max(1.0, ratio))
        throw ConfigError("observation: sampling_interval must be a positive multiple of dt");
    if (sigma_meas < 0.0) throw ConfigError("observation: sigma_meas must be >= 0");
}

ObservationSeries observe(const Trajectory& traj, const ObservationSpec& spec) {
    spec.validate(traj.dimension, traj.dt);
    double ratio = spec.sampling_interval / traj.dt;
    auto stride = static_cast<std::size_t>(std::llround(ratio));
    if (traj.size() < stride) throw ConfigError("observation: trajectory shorter than one sample");

    const std::size_t count = traj.size() / stride;
    const int channels = spec.channels();

    ObservationSeries series;
    series.t0 = traj.t0;
    series.dt = spec.sampling_interval;
    series.samples.resize(static_cast<Eigen::Index>(count), channels);
    for (std::size_t k = 0; k < count; ++k) {
        const double* s = traj.state(k * stride);
        for (int c = 0; c < channels; ++c)
            series.samples(static_cast<Eigen::Index>(k), c) = s[spec.mask[c]];
    }

    if (spec.sigma_meas > 0.0) {
        auto rng = make_rng(mix_seed(spec.seed, "measurement-noise"));
        for (int c = 0; c < channels; ++c) {
            const auto col = series.samples.col(c);
            double mean = col.mean();
            double var = (col.array() - mean).square().sum() / static_cast<double>(col.size());
            double scale = spec.sigma_meas * std::sqrt(var);
            if (scale > 0.0)
                for (Eigen::Index k = 0; k < col.size(); ++k)
                    series.samples(k, c) += scale * standard_normal(rng);
        }
    }
    return series;
}

std::vector<std::vector<int>> enumerate_masks(int dimension) {
    if (dimension < 1) throw ConfigError("enumerate_masks: dimension must be >= 1");
    std::vector<std::vector<int>> masks;
    for (int size = 1; size <= dimension; ++size) {
        // lexicographic subsets of the given size
        std::vector<int> idx(size);
        for (int i = 0; i < size; ++i) idx[i] = i;
        while (true) {
            masks.push_back(idx);
            int i = size - 1;
            while (i >= 0 && idx[i] == dimension - size + i) --i;
            if (i < 0) break;
            ++idx[i];
            for (int j = i + 1; j < size; ++j) idx[j] = idx[j - 1] + 1;
        }
    }
    return masks;
}

std::string mask_label(const std::vector<int>& mask) {
    std::string label = "x";
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (i) label += "+x";
        label += std::to_string(mask[i] + 1);
    }
    return label;
}

void write_csv(const ObservationSeries& series, const std::filesystem::path& path) {
    std::vector<std::string> header{"t"};
    for (int c = 0; c < series.samples.cols(); ++c)
        header.push_back("y" + std::to_string(c + 1));
    CsvWriter csv(path, header);
    for (std::size_t k = 0; k < series.size(); ++k) {
        std::vector<double> row{series.time(k)};
        for (int c = 0; c < series.samples.cols(); ++c)
            row.push_back(series.samples(static_cast<Eigen::Index>(k), c));
        csv.row(row);
    }
}

} // namespace paramtrack
