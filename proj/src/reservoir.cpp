#include "paramtrack/reservoir.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "paramtrack/csv.hpp"
#include "paramtrack/errors.hpp"
#include "paramtrack/rng.hpp"

namespace paramtrack {

namespace {

// Shared state-evolution loop; visit(k, r) sees the state after sample k.
template <class Visit>
void drive_visit(const ReservoirMatrices& matrices, const ReservoirHyperparams& hyper,
                 const ObservationSeries& series, const InputStats& stats,
                 const Eigen::VectorXd& initial_state, Visit&& visit) {
    const int d_r = matrices.size();
    const int channels = matrices.channels();
    if (series.samples.cols() != channels)
        throw ConfigError("drive: series channel count does not match input matrix");
    if (initial_state.size() != d_r)
        throw ConfigError("drive: initial state size does not match reservoir size");
    if (stats.mean.size() != channels || stats.std.size() != channels)
        throw ConfigError("drive: normalization stats do not match channel count");

    const double alpha = hyper.leakage;
    Eigen::VectorXd r = initial_state;
    Eigen::VectorXd pre(d_r);
    Eigen::VectorXd y(channels);
    const auto n = static_cast<Eigen::Index>(series.size());
    for (Eigen::Index k = 0; k < n; ++k) {
        for (int c = 0; c < channels; ++c)
            y(c) = (series.samples(k, c) - stats.mean(c)) / stats.std(c);
        pre.noalias() = matrices.recurrent * r;
        pre.noalias() += matrices.input * y;
        pre += matrices.bias;
        r = (1.0 - alpha) * r + alpha * pre.array().tanh().matrix();
        if (!std::isfinite(r.sum()))
            throw NumericError("drive: non-finite reservoir state at sample " + std::to_string(k));
        visit(k, r);
    }
}

} // namespace

void ReservoirHyperparams::validate() const {
    if (size < 1) throw ConfigError("reservoir: size must be >= 1");
    if (!(spectral_radius >= 0.0)) throw ConfigError("reservoir: spectral_radius must be >= 0");
    if (!(input_scaling > 0.0)) throw ConfigError("reservoir: input_scaling must be > 0");
    if (!(leakage > 0.0 && leakage <= 1.0)) throw ConfigError("reservoir: leakage must be in (0,1]");
    if (!(density > 0.0 && density <= 1.0)) throw ConfigError("reservoir: density must be in (0,1]");
    if (bias_scaling < 0.0) throw ConfigError("reservoir: bias_scaling must be >= 0");
    if (ridge < 0.0) throw ConfigError("reservoir: ridge must be >= 0");
    if (washout < 0) throw ConfigError("reservoir: washout must be >= 0");
}

InputStats InputStats::identity(int channels) {
    InputStats s;
    s.mean = Eigen::VectorXd::Zero(channels);
    s.std = Eigen::VectorXd::Ones(channels);
    return s;
}

InputStats InputStats::compute(const Eigen::MatrixXd& samples) {
    InputStats s;
    const auto n = static_cast<double>(samples.rows());
    s.mean = samples.colwise().mean();
    s.std.resize(samples.cols());
    for (Eigen::Index c = 0; c < samples.cols(); ++c) {
        double var = (samples.col(c).array() - s.mean(c)).square().sum() / n;
        double sd = std::sqrt(var);
        s.std(c) = sd > 1e-12 ? sd : 1.0; // constant channels pass through unscaled
    }
    return s;
}

double estimate_spectral_radius(const Eigen::SparseMatrix<double, Eigen::RowMajor>& m,
                                int iters, std::uint64_t seed) {
    const auto n = m.rows();
    if (n == 0) return 0.0;
    auto rng = make_rng(mix_seed(seed, "power-iteration"));
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = uniform(rng, -1.0, 1.0);
    double norm = v.norm();
    if (norm == 0.0) return 0.0;
    v /= norm;

    // Geometric-mean growth over the trailing half; robust when the dominant
    // eigenvalue is a complex pair.
    double log_sum = 0.0;
    int log_count = 0;
    Eigen::VectorXd w(n);
    for (int i = 1; i <= iters; ++i) {
        w.noalias() = m * v;
        double s = w.norm();
        if (s == 0.0 || !std::isfinite(s)) return 0.0;
        v = w / s;
        if (i > iters / 2) {
            log_sum += std::log(s);
            ++log_count;
        }
    }
    return std::exp(log_sum / log_count);
}

ReservoirMatrices init_reservoir(const ReservoirHyperparams& hyper, int channels,
                                 std::uint64_t seed) {
    hyper.validate();
    if (channels < 1) throw ConfigError("init_reservoir: channels must be >= 1");
    const int d_r = hyper.size;

    ReservoirMatrices mats;
    mats.seed = seed;

    constexpr int kMaxAttempts = 5;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        auto rng = make_rng(mix_seed(seed, "recurrent", {static_cast<std::uint64_t>(attempt)}));
        std::vector<Eigen::Triplet<double>> triplets;
        triplets.reserve(static_cast<std::size_t>(hyper.density * d_r * d_r * 1.2) + 16);
        for (int i = 0; i < d_r; ++i)
            for (int j = 0; j < d_r; ++j)
                if (uniform(rng, 0.0, 1.0) < hyper.density)
                    triplets.emplace_back(i, j, uniform(rng, -1.0, 1.0));

        Eigen::SparseMatrix<double, Eigen::RowMajor> w(d_r, d_r);
        w.setFromTriplets(triplets.begin(), triplets.end());
        double est = estimate_spectral_radius(
            w, 200, mix_seed(seed, "radius-probe", {static_cast<std::uint64_t>(attempt)}));
        if (est > 1e-12) {
            w *= hyper.spectral_radius / est;
            mats.recurrent = std::move(w);
            break;
        }
        if (attempt == kMaxAttempts - 1)
            throw NumericError("init_reservoir: zero spectral radius after 5 draws; "
                               "increase density or size");
    }

    auto rng = make_rng(mix_seed(seed, "input-bias"));
    mats.input.resize(d_r, channels);
    for (int i = 0; i < d_r; ++i)
        for (int c = 0; c < channels; ++c)
            mats.input(i, c) = uniform(rng, -hyper.input_scaling, hyper.input_scaling);
    mats.bias.resize(d_r);
    for (int i = 0; i < d_r; ++i)
        mats.bias(i) = uniform(rng, -hyper.bias_scaling, hyper.bias_scaling);
    return mats;
}

Eigen::MatrixXd drive(const ReservoirMatrices& matrices, const ReservoirHyperparams& hyper,
                      const ObservationSeries& series, const InputStats& stats,
                      const Eigen::VectorXd& initial_state) {
    Eigen::MatrixXd states(static_cast<Eigen::Index>(series.size()), matrices.size());
    drive_visit(matrices, hyper, series, stats, initial_state,
                [&states](Eigen::Index k, const Eigen::VectorXd& r) {
                    states.row(k) = r.transpose();
                });
    return states;
}

Eigen::RowVectorXd train_readout(const Eigen::MatrixXd& states, const Eigen::VectorXd& targets,
                                 double ridge, int washout) {
    if (states.rows() != targets.size())
        throw ConfigError("train_readout: states and targets length mismatch");
    if (states.rows() <= washout)
        throw ConfigError("train_readout: series not longer than washout");
    if (ridge < 0.0) throw ConfigError("train_readout: ridge must be >= 0");

    const auto t = states.rows() - washout;
    const auto d = states.cols();
    const auto s = states.bottomRows(t);
    const auto y = targets.tail(t);

    // Normal equations on [S 1] without materializing the augmented matrix.
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(d + 1, d + 1);
    gram.topLeftCorner(d, d).selfadjointView<Eigen::Lower>().rankUpdate(s.transpose());
    gram.topLeftCorner(d, d).triangularView<Eigen::Upper>() =
        gram.topLeftCorner(d, d).triangularView<Eigen::Lower>().transpose();
    gram.block(0, d, d, 1) = s.colwise().sum().transpose();
    gram.block(d, 0, 1, d) = gram.block(0, d, d, 1).transpose();
    gram(d, d) = static_cast<double>(t);

    Eigen::VectorXd rhs(d + 1);
    rhs.head(d).noalias() = s.transpose() * y;
    rhs(d) = y.sum();

    gram.diagonal().array() += ridge;
    auto ldlt = gram.ldlt();
    if (ridge == 0.0) {
        Eigen::VectorXd d = ldlt.vectorD().cwiseAbs();
        if (d.minCoeff() < 1e-12 * d.maxCoeff())
            throw NumericError("train_readout: singular normal matrix; use a positive ridge");
    }
    Eigen::VectorXd w = ldlt.solve(rhs);

    const bool finite = w.allFinite();
    if (!finite || (gram * w - rhs).norm() > 1e-6 * (rhs.norm() + 1.0)) {
        if (ridge == 0.0)
            throw NumericError("train_readout: singular normal matrix; use a positive ridge");
        throw NumericError("train_readout: normal-equation solve failed");
    }
    return w.transpose();
}

Eigen::VectorXd track_raw(const TrainedTracker& tracker, const ObservationSeries& series) {
    const int d_r = tracker.matrices.size();
    if (tracker.readout.size() != d_r + 1)
        throw ConfigError("track: readout size does not match reservoir");
    Eigen::VectorXd out(static_cast<Eigen::Index>(series.size()));
    const auto head = tracker.readout.head(d_r);
    const double bias_w = tracker.readout(d_r);
    drive_visit(tracker.matrices, tracker.hyper, series, tracker.input_stats,
                Eigen::VectorXd::Zero(d_r),
                [&](Eigen::Index k, const Eigen::VectorXd& r) { out(k) = head.dot(r) + bias_w; });
    return out;
}

Eigen::VectorXd track(const TrainedTracker& tracker, const ObservationSeries& series) {
    Eigen::VectorXd raw = track_raw(tracker, series);
    for (Eigen::Index k = 0; k < raw.size(); ++k) raw(k) = tracker.calib.apply(raw(k));
    return raw;
}

Calibration calibrate(double p_true_1, double o_mean_1, double p_true_2, double o_mean_2) {
    double dp = p_true_1 - p_true_2;
    double d_o = o_mean_1 - o_mean_2;
    double scale = std::max({1.0, std::abs(o_mean_1), std::abs(o_mean_2)});
    if (dp == 0.0 || std::abs(d_o) < 1e-12 * scale)
        throw CalibrationError("calibrate: degenerate pair of calibration runs");
    Calibration c;
    c.gain = dp / d_o;
    c.offset = p_true_1 - c.gain * o_mean_1;
    return c;
}

Calibration calibrate_offset(double p_true, double o_mean) {
    return Calibration{1.0, p_true - o_mean};
}

namespace {

void expect_tag(std::istream& in, const std::string& tag) {
    std::string got;
    in >> got;
    if (got != tag)
        throw ConfigError("tracker bundle: expected '" + tag + "', found '" + got + "'");
}

} // namespace

void save_tracker(const TrainedTracker& tracker, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
    out << "paramtrack-tracker v1\n";
    out << "system " << tracker.system << ' ' << tracker.tracked_param << '\n';
    const auto& h = tracker.hyper;
    out << "hyper " << h.size << ' ' << format_exact(h.spectral_radius) << ' '
        << format_exact(h.input_scaling) << ' ' << format_exact(h.leakage) << ' '
        << format_exact(h.density) << ' ' << format_exact(h.bias_scaling) << ' '
        << format_exact(h.ridge) << ' ' << h.washout << '\n';
    out << "mask " << tracker.mask.size();
    for (int i : tracker.mask) out << ' ' << i;
    out << '\n';
    out << "sampling_interval " << format_exact(tracker.sampling_interval) << '\n';
    out << "seed " << tracker.matrices.seed << '\n';

    const int channels = tracker.matrices.channels();
    out << "input_stats " << channels << '\n';
    for (int c = 0; c < channels; ++c) out << format_exact(tracker.input_stats.mean(c)) << ' ';
    out << '\n';
    for (int c = 0; c < channels; ++c) out << format_exact(tracker.input_stats.std(c)) << ' ';
    out << '\n';

    const auto& w_in = tracker.matrices.input;
    out << "W_in " << w_in.rows() << ' ' << w_in.cols() << '\n';
    for (Eigen::Index i = 0; i < w_in.rows(); ++i) {
        for (Eigen::Index j = 0; j < w_in.cols(); ++j) {
            if (j) out << ' ';
            out << format_exact(w_in(i, j));
        }
        out << '\n';
    }

    const auto& w_r = tracker.matrices.recurrent;
    out << "W_r " << w_r.rows() << ' ' << w_r.nonZeros() << '\n';
    for (int i = 0; i < w_r.outerSize(); ++i)
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(w_r, i); it; ++it)
            out << it.row() << ' ' << it.col() << ' ' << format_exact(it.value()) << '\n';

    out << "bias " << tracker.matrices.bias.size() << '\n';
    for (Eigen::Index i = 0; i < tracker.matrices.bias.size(); ++i)
        out << format_exact(tracker.matrices.bias(i)) << (i + 1 < tracker.matrices.bias.size() ? ' ' : '\n');

    out << "readout " << tracker.readout.size() << '\n';
    for (Eigen::Index i = 0; i < tracker.readout.size(); ++i)
        out << format_exact(tracker.readout(i)) << (i + 1 < tracker.readout.size() ? ' ' : '\n');

    out << "calib " << format_exact(tracker.calib.gain) << ' '
        << format_exact(tracker.calib.offset) << '\n';
    if (!out) throw NumericError("tracker bundle: write failed for " + path.string());
}

TrainedTracker load_tracker(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open tracker bundle " + path.string());
    std::string magic, version;
    in >> magic >> version;
    if (magic != "paramtrack-tracker" || version != "v1")
        throw ConfigError("not a paramtrack tracker bundle: " + path.string());

    TrainedTracker t;
    expect_tag(in, "system");
    in >> t.system >> t.tracked_param;
    expect_tag(in, "hyper");
    auto& h = t.hyper;
    in >> h.size >> h.spectral_radius >> h.input_scaling >> h.leakage >> h.density >>
        h.bias_scaling >> h.ridge >> h.washout;
    expect_tag(in, "mask");
    std::size_t mask_size;
    in >> mask_size;
    t.mask.resize(mask_size);
    for (auto& i : t.mask) in >> i;
    expect_tag(in, "sampling_interval");
    in >> t.sampling_interval;
    expect_tag(in, "seed");
    in >> t.matrices.seed;

    expect_tag(in, "input_stats");
    int channels;
    in >> channels;
    t.input_stats.mean.resize(channels);
    t.input_stats.std.resize(channels);
    for (int c = 0; c < channels; ++c) in >> t.input_stats.mean(c);
    for (int c = 0; c < channels; ++c) in >> t.input_stats.std(c);

    expect_tag(in, "W_in");
    Eigen::Index rows, cols;
    in >> rows >> cols;
    t.matrices.input.resize(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) in >> t.matrices.input(i, j);

    expect_tag(in, "W_r");
    Eigen::Index size, nnz;
    in >> size >> nnz;
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(nnz));
    for (Eigen::Index k = 0; k < nnz; ++k) {
        Eigen::Index r, c;
        double v;
        in >> r >> c >> v;
        triplets.emplace_back(static_cast<int>(r), static_cast<int>(c), v);
    }
    t.matrices.recurrent.resize(size, size);
    t.matrices.recurrent.setFromTriplets(triplets.begin(), triplets.end());

    expect_tag(in, "bias");
    Eigen::Index n;
    in >> n;
    t.matrices.bias.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) in >> t.matrices.bias(i);

    expect_tag(in, "readout");
    in >> n;
    t.readout.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) in >> t.readout(i);

    expect_tag(in, "calib");
    in >> t.calib.gain >> t.calib.offset;
    if (!in) throw ConfigError("tracker bundle truncated: " + path.string());
    return t;
}

} // namespace paramtrack
