#include "paramtrack/hyperopt.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Cholesky>

#include "paramtrack/csv.hpp"
#include "paramtrack/errors.hpp"
#include "paramtrack/rng.hpp"

namespace paramtrack {

namespace {

constexpr int kInitialPoints = 10;
constexpr int kCandidatesPerIteration = 1000;
constexpr double kGpNoise = 1e-4; // on z-scored objectives
constexpr double kLengthscaleLo = 0.05;
constexpr double kLengthscaleHi = 3.0;
constexpr int kLikelihoodBudget = 200;

double halton(std::uint64_t index, std::uint64_t base) {
    double f = 1.0, r = 0.0;
    while (index > 0) {
        f /= static_cast<double>(base);
        r += f * static_cast<double>(index % base);
        index /= base;
    }
    return r;
}

constexpr std::uint64_t kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19};

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

/// Squared-exponential GP on the unit cube with fixed amplitude 1 and
/// fixed noise on z-scored targets. Lengthscales are fit by a budgeted
/// multi-start coordinate search on the log marginal likelihood.
class Surrogate {
public:
    void fit(const Eigen::MatrixXd& points_unit, const Eigen::VectorXd& values) {
        x_ = points_unit;
        const auto n = values.size();
        double mean = values.mean();
        double sd = std::sqrt((values.array() - mean).square().sum() / static_cast<double>(n));
        if (sd < 1e-15) sd = 1.0;
        mean_ = mean;
        sd_ = sd;
        y_ = (values.array() - mean) / sd;

        const int d = static_cast<int>(x_.cols());
        int evals = 0;
        double best_ll = -std::numeric_limits<double>::infinity();
        Eigen::VectorXd best_ell;
        for (double start : {0.5, 1.5}) {
            Eigen::VectorXd ell = Eigen::VectorXd::Constant(d, start);
            double ll = log_likelihood(ell);
            ++evals;
            if (ll > best_ll) {
                best_ll = ll;
                best_ell = ell;
            }
            for (double factor : {4.0, 2.0, 1.4, 1.15}) {
                for (int axis = 0; axis < d && evals < kLikelihoodBudget; ++axis) {
                    for (double mult : {factor, 1.0 / factor}) {
                        if (evals >= kLikelihoodBudget) break;
                        Eigen::VectorXd trial = ell;
                        trial(axis) = std::clamp(trial(axis) * mult, kLengthscaleLo, kLengthscaleHi);
                        if (trial(axis) == ell(axis)) continue;
                        double t_ll = log_likelihood(trial);
                        ++evals;
                        if (t_ll > ll) {
                            ll = t_ll;
                            ell = trial;
                        }
                    }
                }
                if (ll > best_ll) {
                    best_ll = ll;
                    best_ell = ell;
                }
            }
        }
        ell_ = best_ell;
        factorize(ell_);
    }

    /// Predictive mean and std in z-scored units.
    std::pair<double, double> predict(const Eigen::VectorXd& u) const {
        const auto n = x_.rows();
        Eigen::VectorXd k(n);
        for (Eigen::Index i = 0; i < n; ++i) k(i) = kernel(x_.row(i).transpose(), u);
        double mu = k.dot(alpha_);
        Eigen::VectorXd v = chol_.matrixL().solve(k);
        double var = 1.0 + kGpNoise - v.squaredNorm();
        return {mu, std::sqrt(std::max(var, 1e-12))};
    }

    double best_observed() const { return y_.minCoeff(); }
    double to_original(double z) const { return z * sd_ + mean_; }

private:
    double kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
        return kernel_with(a, b, ell_);
    }

    static double kernel_with(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                              const Eigen::VectorXd& ell) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < a.size(); ++i) {
            double t = (a(i) - b(i)) / ell(i);
            s += t * t;
        }
        return std::exp(-0.5 * s);
    }

    Eigen::MatrixXd gram(const Eigen::VectorXd& ell) const {
        const auto n = x_.rows();
        Eigen::MatrixXd k(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            k(i, i) = 1.0 + kGpNoise;
            for (Eigen::Index j = 0; j < i; ++j) {
                double v = kernel_with(x_.row(i).transpose(), x_.row(j).transpose(), ell);
                k(i, j) = v;
                k(j, i) = v;
            }
        }
        return k;
    }

    double log_likelihood(const Eigen::VectorXd& ell) const {
        Eigen::MatrixXd k = gram(ell);
        Eigen::LLT<Eigen::MatrixXd> llt(k);
        if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
        Eigen::VectorXd a = llt.solve(y_);
        double logdet = 0.0;
        for (Eigen::Index i = 0; i < k.rows(); ++i)
            logdet += std::log(llt.matrixLLT()(i, i));
        return -0.5 * y_.dot(a) - logdet -
               0.5 * static_cast<double>(k.rows()) * std::log(2.0 * std::numbers::pi);
    }

    void factorize(const Eigen::VectorXd& ell) {
        Eigen::MatrixXd k = gram(ell);
        chol_.compute(k);
        if (chol_.info() != Eigen::Success) {
            // escalate jitter until the factorization goes through
            double jitter = 1e-10;
            while (jitter < 1.0) {
                Eigen::MatrixXd kj = k;
                kj.diagonal().array() += jitter;
                chol_.compute(kj);
                if (chol_.info() == Eigen::Success) break;
                jitter *= 10.0;
            }
            if (chol_.info() != Eigen::Success)
                throw NumericError("surrogate: kernel matrix not factorizable");
        }
        alpha_ = chol_.solve(y_);
    }

    Eigen::MatrixXd x_;
    Eigen::VectorXd y_;
    Eigen::VectorXd ell_;
    Eigen::LLT<Eigen::MatrixXd> chol_;
    Eigen::VectorXd alpha_;
    double mean_ = 0.0;
    double sd_ = 1.0;
};

double expected_improvement(double mu, double sigma, double best) {
    if (sigma <= 0.0) return std::max(best - mu, 0.0);
    double z = (best - mu) / sigma;
    return (best - mu) * normal_cdf(z) + sigma * normal_pdf(z);
}

double clamp_objective(double v) {
    if (!std::isfinite(v)) return kPenaltyObjective;
    return v;
}

} // namespace

SearchSpace SearchSpace::reservoir_default() {
    SearchSpace s;
    s.axes = {
        {"spectral_radius", 0.1, 1.5, false},
        {"input_scaling", 0.01, 5.0, true},
        {"leakage", 0.05, 1.0, false},
        {"density", 0.005, 0.2, true},
        {"bias_scaling", 0.0, 2.0, false},
        {"ridge", 1e-9, 1e-1, true},
    };
    return s;
}

void SearchSpace::validate() const {
    if (axes.empty()) throw ConfigError("search space: no axes");
    for (const auto& a : axes) {
        if (!(a.lo < a.hi))
            throw ConfigError("search space: axis '" + a.name + "' needs lo < hi");
        if (a.log_scale && !(a.lo > 0.0))
            throw ConfigError("search space: log axis '" + a.name + "' must be positive");
    }
}

Eigen::VectorXd SearchSpace::to_unit(const Eigen::VectorXd& x) const {
    Eigen::VectorXd u(dims());
    for (int i = 0; i < dims(); ++i) {
        const auto& a = axes[i];
        u(i) = a.log_scale
                   ? (std::log(x(i)) - std::log(a.lo)) / (std::log(a.hi) - std::log(a.lo))
                   : (x(i) - a.lo) / (a.hi - a.lo);
    }
    return u;
}

Eigen::VectorXd SearchSpace::from_unit(const Eigen::VectorXd& u) const {
    Eigen::VectorXd x(dims());
    for (int i = 0; i < dims(); ++i) {
        const auto& a = axes[i];
        double t = std::clamp(u(i), 0.0, 1.0);
        x(i) = a.log_scale ? std::exp(std::log(a.lo) + t * (std::log(a.hi) - std::log(a.lo)))
                           : a.lo + t * (a.hi - a.lo);
        x(i) = std::clamp(x(i), a.lo, a.hi);
    }
    return x;
}

bool SearchSpace::contains(const Eigen::VectorXd& x) const {
    if (x.size() != dims()) return false;
    for (int i = 0; i < dims(); ++i)
        if (x(i) < axes[i].lo || x(i) > axes[i].hi) return false;
    return true;
}

OptRecord optimize(const SearchSpace& space, const Objective& f, int budget,
                   std::uint64_t seed, OptMode mode) {
    space.validate();
    if (budget < 10) throw ConfigError("optimize: budget must be >= 10");
    if (space.dims() > static_cast<int>(std::size(kPrimes)))
        throw ConfigError("optimize: too many axes for the quasi-random design");

    const int d = space.dims();
    OptRecord record;
    record.budget = budget;
    record.points.resize(budget, d);
    record.values.resize(budget);

    Eigen::MatrixXd unit_points(budget, d);
    int n = 0;

    auto evaluate_at = [&](const Eigen::VectorXd& u) {
        Eigen::VectorXd x = space.from_unit(u);
        unit_points.row(n) = u.transpose();
        record.points.row(n) = x.transpose();
        record.values(n) = clamp_objective(f(x));
        ++n;
    };

    // Quasi-random initial design: Halton sequence with a seeded rotation.
    auto shift_rng = make_rng(mix_seed(seed, "initial-design"));
    Eigen::VectorXd shift(d);
    for (int i = 0; i < d; ++i) shift(i) = uniform(shift_rng, 0.0, 1.0);
    const int n_init = std::min(kInitialPoints, budget);
    for (int k = 0; k < n_init; ++k) {
        Eigen::VectorXd u(d);
        for (int i = 0; i < d; ++i) {
            double v = halton(static_cast<std::uint64_t>(k + 1), kPrimes[i]) + shift(i);
            u(i) = v - std::floor(v);
        }
        evaluate_at(u);
    }

    while (n < budget) {
        auto cand_rng = make_rng(mix_seed(seed, "candidates", {static_cast<std::uint64_t>(n)}));
        if (mode == OptMode::RandomSearch) {
            Eigen::VectorXd u(d);
            for (int i = 0; i < d; ++i) u(i) = uniform(cand_rng, 0.0, 1.0);
            evaluate_at(u);
            continue;
        }
        Surrogate gp;
        gp.fit(unit_points.topRows(n), record.values.head(n));
        const double best = gp.best_observed();
        double best_ei = -1.0;
        Eigen::VectorXd best_u(d);
        for (int c = 0; c < kCandidatesPerIteration; ++c) {
            Eigen::VectorXd u(d);
            for (int i = 0; i < d; ++i) u(i) = uniform(cand_rng, 0.0, 1.0);
            auto [mu, sigma] = gp.predict(u);
            double ei = expected_improvement(mu, sigma, best);
            if (ei > best_ei) {
                best_ei = ei;
                best_u = u;
            }
        }
        evaluate_at(best_u);
    }

    record.values.minCoeff(&record.best_index);
    return record;
}

ReservoirHyperparams hyper_from_point(const SearchSpace& space, const Eigen::VectorXd& x,
                                      const ReservoirHyperparams& base) {
    if (x.size() != space.dims())
        throw ConfigError("hyper_from_point: dimension mismatch");
    ReservoirHyperparams h = base;
    for (int i = 0; i < space.dims(); ++i) {
        const std::string& name = space.axes[i].name;
        if (name == "spectral_radius") h.spectral_radius = x(i);
        else if (name == "input_scaling") h.input_scaling = x(i);
        else if (name == "leakage") h.leakage = x(i);
        else if (name == "density") h.density = x(i);
        else if (name == "bias_scaling") h.bias_scaling = x(i);
        else if (name == "ridge") h.ridge = x(i);
        else throw ConfigError("hyper_from_point: unknown axis '" + name + "'");
    }
    return h;
}

WaveformSpec validation_waveform(const RunConfig& config) {
    const auto& w = config.test_waveform;
    double base = w.kind == WaveformKind::Constant || w.kind == WaveformKind::PiecewiseConstant
                      ? 0.5 * (w.min_value() + w.max_value())
                      : w.base;
    double amplitude = w.kind == WaveformKind::Constant || w.kind == WaveformKind::PiecewiseConstant
                           ? 0.5 * (w.max_value() - w.min_value())
                           : std::abs(w.amplitude);
    double carrier = 180.0 * config.switch_interval;
    return WaveformSpec::fm(base, amplitude, carrier, 4.0 * carrier, 0.0);
}

double tracking_objective(const ReservoirHyperparams& hyper, const RunConfig& config,
                          int n_seeds) {
    if (n_seeds < 1) throw ConfigError("tracking_objective: n_seeds must be >= 1");
    RunConfig validation = config;
    validation.hyper = hyper;
    validation.test_waveform = validation_waveform(config);

    double total = 0.0;
    for (int i = 0; i < n_seeds; ++i) {
        validation.seed = mix_seed(config.seed, "hyperopt-validation",
                                   {static_cast<std::uint64_t>(i)});
        double score;
        try {
            score = clamp_objective(run_pipeline(validation).nrmse);
        } catch (const std::exception&) {
            score = kPenaltyObjective;
        }
        total += std::min(score, kPenaltyObjective);
    }
    return total / n_seeds;
}

void write_csv(const OptRecord& record, const SearchSpace& space,
               const std::filesystem::path& path) {
    std::vector<std::string> header{"evaluation"};
    for (const auto& a : space.axes) header.push_back(a.name);
    header.push_back("objective");
    header.push_back("best_so_far");
    CsvWriter csv(path, header);
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < record.values.size(); ++i) {
        best = std::min(best, record.values(i));
        std::vector<std::string> row{std::to_string(i)};
        for (int j = 0; j < space.dims(); ++j)
            row.push_back(format_num(record.points(i, j)));
        row.push_back(format_num(record.values(i)));
        row.push_back(format_num(best));
        csv.row(row);
    }
}

} // namespace paramtrack
