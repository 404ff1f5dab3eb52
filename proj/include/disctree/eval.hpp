#ifndef DISCTREE_EVAL_HPP
#define DISCTREE_EVAL_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "estimator.hpp"
#include "geometry.hpp"
#include "partition.hpp"

namespace disctree {

struct BetaParams {
    double a = 1.0;
    double b = 1.0;
};

// Mixture over [0,1]^d: truncated Gaussians with a shared diagonal covariance,
// or products of beta marginals.
struct MixtureSpec {
    enum class Family { Gaussian, BetaProduct };

    Family family = Family::Gaussian;
    std::size_t dim = 1;
    std::vector<double> weights;
    std::vector<std::vector<double>> means;        // Gaussian component means
    std::vector<double> variances;                 // shared diagonal covariance
    std::vector<std::vector<BetaParams>> betas;    // per component, per dimension

    void validate() const {
        if (dim == 0) throw std::invalid_argument("MixtureSpec: dim must be positive");
        if (weights.empty()) throw std::invalid_argument("MixtureSpec: no components");
        double sum = 0.0;
        for (double w : weights) {
            if (!(w > 0.0)) throw std::invalid_argument("MixtureSpec: weights must be positive");
            sum += w;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw std::invalid_argument("MixtureSpec: weights must sum to 1");
        if (family == Family::Gaussian) {
            if (means.size() != weights.size() || variances.size() != dim)
                throw std::invalid_argument("MixtureSpec: bad Gaussian parameters");
            for (double v : variances)
                if (!(v > 0.0))
                    throw std::invalid_argument("MixtureSpec: variances must be positive");
            for (const auto& mu : means)
                if (mu.size() != dim)
                    throw std::invalid_argument("MixtureSpec: mean dimension mismatch");
        } else {
            if (betas.size() != weights.size())
                throw std::invalid_argument("MixtureSpec: bad beta parameters");
            for (const auto& comp : betas) {
                if (comp.size() != dim)
                    throw std::invalid_argument("MixtureSpec: beta dimension mismatch");
                for (const auto& p : comp)
                    if (!(p.a > 0.0 && p.b > 0.0))
                        throw std::invalid_argument("MixtureSpec: beta shapes must be positive");
            }
        }
    }

    // Four Gaussians on the (1/4, 3/4) grid of the first two coordinates,
    // centered elsewhere, shared covariance 0.01*I.
    static MixtureSpec four_gaussian_grid(std::size_t d) {
        MixtureSpec spec;
        spec.family = Family::Gaussian;
        spec.dim = d;
        spec.weights.assign(4, 0.25);
        spec.variances.assign(d, 0.01);
        const double q[4][2] = {{0.25, 0.25}, {0.25, 0.75}, {0.75, 0.25}, {0.75, 0.75}};
        for (int i = 0; i < 4; ++i) {
            std::vector<double> mu(d, 0.5);
            mu[0] = q[i][0];
            if (d > 1) mu[1] = q[i][1];
            spec.means.push_back(std::move(mu));
        }
        return spec;
    }

    // 0.5 * prod beta(15,5) + 0.5 * prod beta(5,15).
    static MixtureSpec beta_bimodal(std::size_t d) {
        MixtureSpec spec;
        spec.family = Family::BetaProduct;
        spec.dim = d;
        spec.weights = {0.5, 0.5};
        spec.betas = {std::vector<BetaParams>(d, {15.0, 5.0}),
                      std::vector<BetaParams>(d, {5.0, 15.0})};
        return spec;
    }
};

namespace detail {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

inline double log_beta(double a, double b) {
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

inline double beta_pdf(double x, double a, double b) {
    if (x <= 0.0 || x >= 1.0) {
        // boundary values; only finite cases matter for the shapes used here
        if (x == 0.0 && a == 1.0) return std::exp(-log_beta(a, b)) * std::pow(1.0 - x, b - 1.0);
        if (x == 1.0 && b == 1.0) return std::exp(-log_beta(a, b)) * std::pow(x, a - 1.0);
        if (x < 0.0 || x > 1.0) return 0.0;
        return (a > 1.0 && b > 1.0) ? 0.0 : std::numeric_limits<double>::infinity();
    }
    return std::exp((a - 1.0) * std::log(x) + (b - 1.0) * std::log(1.0 - x) - log_beta(a, b));
}

}  // namespace detail

// Normalization constant of the truncated mixture on [0,1]^d (1 for betas).
inline double mixture_normalization(const MixtureSpec& spec) {
    spec.validate();
    if (spec.family == MixtureSpec::Family::BetaProduct) return 1.0;
    double z = 0.0;
    for (std::size_t i = 0; i < spec.weights.size(); ++i) {
        double p_in = 1.0;
        for (std::size_t j = 0; j < spec.dim; ++j) {
            const double sigma = std::sqrt(spec.variances[j]);
            p_in *= detail::normal_cdf((1.0 - spec.means[i][j]) / sigma) -
                    detail::normal_cdf((0.0 - spec.means[i][j]) / sigma);
        }
        z += spec.weights[i] * p_in;
    }
    return z;
}

// Normalized true density of the mixture at x in [0,1]^d.
inline double mixture_density(const MixtureSpec& spec, const Point& x, double normalization) {
    if (x.size() != spec.dim)
        throw std::domain_error("mixture_density: dimension mismatch");
    double p = 0.0;
    if (spec.family == MixtureSpec::Family::Gaussian) {
        for (std::size_t i = 0; i < spec.weights.size(); ++i) {
            double comp = 1.0;
            for (std::size_t j = 0; j < spec.dim; ++j) {
                const double v = spec.variances[j];
                const double dxj = x[j] - spec.means[i][j];
                comp *= std::exp(-0.5 * dxj * dxj / v) / std::sqrt(2.0 * M_PI * v);
            }
            p += spec.weights[i] * comp;
        }
    } else {
        for (std::size_t i = 0; i < spec.weights.size(); ++i) {
            double comp = 1.0;
            for (std::size_t j = 0; j < spec.dim; ++j)
                comp *= detail::beta_pdf(x[j], spec.betas[i][j].a, spec.betas[i][j].b);
            p += spec.weights[i] * comp;
        }
    }
    return p / normalization;
}

inline double mixture_density(const MixtureSpec& spec, const Point& x) {
    return mixture_density(spec, x, mixture_normalization(spec));
}

// n i.i.d. draws; Gaussian components truncated by rejection.
inline SampleSet sample_mixture(const MixtureSpec& spec, std::size_t n, std::uint64_t seed) {
    spec.validate();
    if (n == 0) throw std::invalid_argument("sample_mixture: n must be positive");
    std::mt19937_64 rng(seed);
    std::discrete_distribution<std::size_t> pick(spec.weights.begin(), spec.weights.end());

    std::vector<Point> pts;
    pts.reserve(n);
    std::size_t attempts = 0;
    while (pts.size() < n) {
        const std::size_t comp = pick(rng);
        Point x(spec.dim);
        if (spec.family == MixtureSpec::Family::Gaussian) {
            ++attempts;
            bool inside = true;
            for (std::size_t j = 0; j < spec.dim; ++j) {
                std::normal_distribution<double> normal(spec.means[comp][j],
                                                        std::sqrt(spec.variances[j]));
                x[j] = normal(rng);
                if (x[j] < 0.0 || x[j] > 1.0) inside = false;
            }
            if (!inside) {
                if (attempts >= 10000 &&
                    static_cast<double>(pts.size()) < 1e-3 * static_cast<double>(attempts))
                    throw std::runtime_error(
                        "sample_mixture: truncation acceptance rate below 1e-3 (" +
                        std::to_string(pts.size()) + "/" + std::to_string(attempts) +
                        " accepted)");
                continue;
            }
        } else {
            for (std::size_t j = 0; j < spec.dim; ++j) {
                std::gamma_distribution<double> ga(spec.betas[comp][j].a, 1.0);
                std::gamma_distribution<double> gb(spec.betas[comp][j].b, 1.0);
                const double u = ga(rng);
                const double v = gb(rng);
                x[j] = std::clamp(u / (u + v), 0.0, 1.0);
            }
        }
        pts.push_back(std::move(x));
    }
    return SampleSet(std::move(pts));
}

// Reference integrand with a closed-form box integral and a supplied
// Hardy-Krause variation constant.
struct ReferenceFunction {
    std::string name;
    std::function<double(const Point&)> eval;
    std::function<double(const HyperRect&)> box_integral;
    double vhk = 0.0;
};

namespace detail {

// mean of sqrt(x) over [a,b]
inline double sqrt_mean(double a, double b) {
    return 2.0 / 3.0 * (b * std::sqrt(b) - a * std::sqrt(a)) / (b - a);
}

}  // namespace detail

// f(x) = sum_j sqrt(x_j)
inline ReferenceFunction reference_f1(std::size_t d) {
    ReferenceFunction f;
    f.name = "f1";
    f.vhk = static_cast<double>(d);
    f.eval = [](const Point& x) {
        double s = 0.0;
        for (double c : x) s += std::sqrt(c);
        return s;
    };
    f.box_integral = [](const HyperRect& r) {
        double s = 0.0;
        for (std::size_t j = 0; j < r.dim(); ++j)
            s += detail::sqrt_mean(r.lower[j], r.upper[j]);
        return s * rect_volume(r);
    };
    return f;
}

// f(x) = sum_j x_j
inline ReferenceFunction reference_f2(std::size_t d) {
    ReferenceFunction f;
    f.name = "f2";
    f.vhk = static_cast<double>(d);
    f.eval = [](const Point& x) {
        double s = 0.0;
        for (double c : x) s += c;
        return s;
    };
    f.box_integral = [](const HyperRect& r) {
        double s = 0.0;
        for (std::size_t j = 0; j < r.dim(); ++j) s += 0.5 * (r.lower[j] + r.upper[j]);
        return s * rect_volume(r);
    };
    return f;
}

// f(x) = (sum_j sqrt(x_j))^2 = sum_j x_j + 2 sum_{j<k} sqrt(x_j x_k)
inline ReferenceFunction reference_f3(std::size_t d) {
    ReferenceFunction f;
    f.name = "f3";
    f.vhk = static_cast<double>(d) * (3.0 * static_cast<double>(d) - 2.0);
    f.eval = [](const Point& x) {
        double s = 0.0;
        for (double c : x) s += std::sqrt(c);
        return s * s;
    };
    f.box_integral = [](const HyperRect& r) {
        const std::size_t d = r.dim();
        std::vector<double> sm(d);
        double lin = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            sm[j] = detail::sqrt_mean(r.lower[j], r.upper[j]);
            lin += 0.5 * (r.lower[j] + r.upper[j]);
        }
        double cross = 0.0;
        for (std::size_t j = 0; j < d; ++j)
            for (std::size_t k = j + 1; k < d; ++k) cross += sm[j] * sm[k];
        return (lin + 2.0 * cross) * rect_volume(r);
    };
    return f;
}

inline ReferenceFunction reference_by_name(const std::string& name, std::size_t d) {
    if (name == "f1") return reference_f1(d);
    if (name == "f2") return reference_f2(d);
    if (name == "f3") return reference_f3(d);
    throw std::invalid_argument("unknown reference function: " + name);
}

// |integral of f under the estimate - sample mean of f|, the Koksma-Hlawka
// quantity the theta/sqrt(N) bound controls.
inline double integration_error(const PiecewiseDensity& pd, const SampleSet& samples,
                                const ReferenceFunction& f) {
    double est = 0.0;
    for (const auto& c : pd.cells) est += c.density * f.box_integral(c.rect);
    double mean = 0.0;
    for (const auto& x : samples.points) mean += f.eval(x);
    mean /= static_cast<double>(samples.size());
    return std::abs(est - mean);
}

// Monte Carlo reference for integral of f under the true mixture density.
inline std::pair<double, double> reference_integral(const MixtureSpec& spec,
                                                    const ReferenceFunction& f,
                                                    std::size_t draws, std::uint64_t seed) {
    const SampleSet ref = sample_mixture(spec, draws, seed);
    double mean = 0.0, m2 = 0.0;
    std::size_t k = 0;
    for (const auto& x : ref.points) {
        const double v = f.eval(x);
        ++k;
        const double delta = v - mean;
        mean += delta / static_cast<double>(k);
        m2 += delta * (v - mean);
    }
    const double var = m2 / static_cast<double>(draws - 1);
    return {mean, std::sqrt(var / static_cast<double>(draws))};
}

struct ConvergencePoint {
    std::size_t size = 0;
    std::size_t replica = 0;
    double error = 0.0;
};

struct ConvergenceResult {
    double slope = std::numeric_limits<double>::quiet_NaN();
    double intercept = std::numeric_limits<double>::quiet_NaN();
    bool degenerate = false;  // some mean error was exactly 0, slope undefined
    double reference_value = 0.0;
    double reference_stderr = 0.0;
    std::vector<ConvergencePoint> points;
    std::vector<double> mean_errors;  // one per size
};

// Error vs sample size on a log-log scale; least-squares slope over replica means.
inline ConvergenceResult convergence_slope(const MixtureSpec& spec, const ReferenceFunction& f,
                                           const std::vector<std::size_t>& sizes,
                                           std::size_t replicas, const EstimatorConfig& cfg,
                                           std::uint64_t seed,
                                           std::size_t reference_draws = 1000000) {
    if (sizes.size() < 3)
        throw std::invalid_argument("convergence_slope: need at least 3 sizes");
    if (replicas == 0) throw std::invalid_argument("convergence_slope: need replicas");

    ConvergenceResult result;
    auto [ref, ref_se] = reference_integral(spec, f, reference_draws, seed ^ 0x9e3779b97f4a7c15ULL);
    result.reference_value = ref;
    result.reference_stderr = ref_se;

    for (std::size_t si = 0; si < sizes.size(); ++si) {
        double sum = 0.0;
        for (std::size_t rep = 0; rep < replicas; ++rep) {
            const std::uint64_t run_seed = seed + 1000003ULL * (si * replicas + rep + 1);
            const SampleSet samples = sample_mixture(spec, sizes[si], run_seed);
            const EstimateResult est = estimate_density(samples, cfg);
            double fint = 0.0;
            for (const auto& c : est.density.cells) fint += c.density * f.box_integral(c.rect);
            const double err = std::abs(fint - ref);
            result.points.push_back({sizes[si], rep, err});
            sum += err;
        }
        result.mean_errors.push_back(sum / static_cast<double>(replicas));
    }

    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double np = static_cast<double>(sizes.size());
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        if (result.mean_errors[i] <= 0.0) {
            result.degenerate = true;
            return result;
        }
        const double lx = std::log(static_cast<double>(sizes[i]));
        const double ly = std::log(result.mean_errors[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    result.slope = (np * sxy - sx * sy) / (np * sxx - sx * sx);
    result.intercept = (sy - result.slope * sx) / np;
    return result;
}

struct HellingerResult {
    double distance = 0.0;
    double stderr_estimate = 0.0;
    std::size_t skipped = 0;  // draws with zero true density (measure-zero)
};

// H^2 = 1 - E_p[sqrt(phat/p)], estimated by importance sampling from p.
inline HellingerResult hellinger_distance(const PiecewiseDensity& pd,
                                          const std::function<double(const Point&)>& true_density,
                                          const SampleSet& draws_from_p) {
    double mean = 0.0, m2 = 0.0;
    std::size_t k = 0, skipped = 0;
    for (const auto& y : draws_from_p.points) {
        const double p = true_density(y);
        if (!(p > 0.0)) {
            ++skipped;
            continue;
        }
        const double v = std::sqrt(std::max(0.0, density_at(pd, y)) / p);
        ++k;
        const double delta = v - mean;
        mean += delta / static_cast<double>(k);
        m2 += delta * (v - mean);
    }
    if (k == 0) throw std::runtime_error("hellinger_distance: no usable draws");
    const double h2 = std::clamp(1.0 - mean, 0.0, 1.0);
    HellingerResult result;
    result.distance = std::sqrt(h2);
    const double se_mean = std::sqrt(m2 / static_cast<double>(k - 1) / static_cast<double>(k));
    result.stderr_estimate = result.distance > 1e-9 ? se_mean / (2.0 * result.distance) : se_mean;
    result.skipped = skipped;
    return result;
}

inline HellingerResult hellinger_distance(const PiecewiseDensity& pd, const MixtureSpec& spec,
                                          std::size_t draws, std::uint64_t seed) {
    const double z = mixture_normalization(spec);
    const SampleSet y = sample_mixture(spec, draws, seed);
    return hellinger_distance(
        pd, [&](const Point& x) { return mixture_density(spec, x, z); }, y);
}

struct RectErrorResult {
    double max_error = 0.0;
    double mean_error = 0.0;
    double reference_stderr = 0.0;  // worst-case binomial stderr of the MC reference
};

// max over random axis boxes of |Phat(A) - P(A)|, P(A) by Monte Carlo reference.
inline RectErrorResult rect_probability_error(const PiecewiseDensity& pd, const MixtureSpec& spec,
                                              std::size_t trials, std::uint64_t seed,
                                              std::size_t reference_draws = 1000000) {
    if (trials == 0) throw std::invalid_argument("rect_probability_error: trials must be >= 1");
    const SampleSet ref = sample_mixture(spec, reference_draws, seed ^ 0x5bf03635f0a4a1c3ULL);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(1e-9, 1.0 - 1e-9);

    RectErrorResult result;
    result.reference_stderr = 0.5 / std::sqrt(static_cast<double>(reference_draws));
    for (std::size_t t = 0; t < trials; ++t) {
        std::vector<double> lo(pd.dimension), hi(pd.dimension);
        for (std::size_t j = 0; j < pd.dimension; ++j) {
            double a = unif(rng), b = unif(rng);
            if (a > b) std::swap(a, b);
            if (a == b) b = std::nextafter(b, 1.0);
            lo[j] = a;
            hi[j] = b;
        }
        const HyperRect box(lo, hi);
        std::size_t inside = 0;
        for (const auto& x : ref.points)
            if (box.contains(x)) ++inside;
        const double p_ref = static_cast<double>(inside) / static_cast<double>(reference_draws);
        const double err = std::abs(integrate_over_rect(pd, box) - p_ref);
        result.max_error = std::max(result.max_error, err);
        result.mean_error += err / static_cast<double>(trials);
    }
    return result;
}

// Draw from the estimate: pick a cell by mass, then uniform inside it.
inline SampleSet sample_from_estimate(const PiecewiseDensity& pd, std::size_t n,
                                      std::uint64_t seed) {
    if (n == 0) throw std::invalid_argument("sample_from_estimate: n must be positive");
    std::vector<double> masses;
    masses.reserve(pd.cells.size());
    for (const auto& c : pd.cells) masses.push_back(std::max(0.0, c.mass));
    std::mt19937_64 rng(seed);
    std::discrete_distribution<std::size_t> pick(masses.begin(), masses.end());
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    std::vector<Point> pts;
    pts.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& cell = pd.cells[pick(rng)].rect;
        Point x(pd.dimension);
        for (std::size_t j = 0; j < pd.dimension; ++j)
            x[j] = cell.lower[j] + cell.width(j) * unif(rng);
        pts.push_back(std::move(x));
    }
    return SampleSet(std::move(pts));
}

inline std::string convergence_to_csv(const ConvergenceResult& result) {
    std::ostringstream out;
    out << "size,replica,error\n";
    out.precision(17);
    for (const auto& p : result.points)
        out << p.size << "," << p.replica << "," << p.error << "\n";
    return out.str();
}

inline nlohmann::ordered_json convergence_to_json(const ConvergenceResult& result) {
    nlohmann::ordered_json doc;
    if (result.degenerate) {
        doc["slope"] = nullptr;
        doc["intercept"] = nullptr;
    } else {
        doc["slope"] = result.slope;
        doc["intercept"] = result.intercept;
    }
    doc["degenerate"] = result.degenerate;
    doc["reference_value"] = result.reference_value;
    doc["reference_stderr"] = result.reference_stderr;
    doc["mean_errors"] = result.mean_errors;
    return doc;
}

}  // namespace disctree

#endif  // DISCTREE_EVAL_HPP
