#include "krvi/kernels.hpp"

#include <cmath>

#include "krvi/rng.hpp"

namespace krvi::kernels {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kSqrt3 = 1.7320508075688772935;
constexpr double kSqrt5 = 2.2360679774997896964;

// Enumerates nonzero integer frequency vectors in N_0^d ordered by total
// weight, then lexicographically. Deterministic, independent of the seed.
std::vector<std::vector<double>> enumerate_frequencies(int d, int count) {
    std::vector<std::vector<double>> out;
    std::vector<int> n(d, 0);
    for (int weight = 1; static_cast<int>(out.size()) < count; ++weight) {
        // first composition of `weight` into d parts: everything on the last axis
        std::fill(n.begin(), n.end(), 0);
        n[d - 1] = weight;
        while (true) {
            out.emplace_back(n.begin(), n.end());
            if (static_cast<int>(out.size()) == count) break;
            // next composition in colex order
            int i = d - 1;
            while (i > 0 && n[i] == 0) --i;
            if (i == 0) break;  // exhausted this weight
            const int rest = n[i] - 1;
            ++n[i - 1];
            n[i] = 0;
            n[d - 1] = rest;
        }
    }
    return out;
}

}  // namespace

void EigendecayProfile::validate() const {
    if (!(p > 1.0)) throw InvalidInput("eigendecay profile requires p > 1");
    if (!(alpha > 0.0)) throw InvalidInput("eigendecay profile requires alpha > 0");
    if (!(eta >= 0.0)) throw InvalidInput("eigendecay profile requires eta >= 0");
    if (!(c_p > 0.0)) throw InvalidInput("eigendecay profile requires c_p > 0");
    if (!(p_tilde() > 1.0)) {
        throw InvalidInput("eigendecay profile requires p_tilde = p(1-2 eta) > 1");
    }
}

KernelSpec KernelSpec::matern(int dimension, double nu, double lengthscale) {
    if (dimension < 1) throw InvalidInput("kernel dimension must be >= 1");
    if (!(nu > 0.0)) throw InvalidInput("Matern nu must be > 0");
    if (!(lengthscale > 0.0)) throw InvalidInput("Matern lengthscale must be > 0");
    KernelSpec k;
    k.family_ = KernelFamily::Matern;
    k.dimension_ = dimension;
    k.nu_ = nu;
    k.lengthscale_ = lengthscale;
    k.variance_cap_ = 1.0;
    return k;
}

KernelSpec KernelSpec::squared_exponential(int dimension, double lengthscale) {
    if (dimension < 1) throw InvalidInput("kernel dimension must be >= 1");
    if (!(lengthscale > 0.0)) throw InvalidInput("lengthscale must be > 0");
    KernelSpec k;
    k.family_ = KernelFamily::SquaredExponential;
    k.dimension_ = dimension;
    k.lengthscale_ = lengthscale;
    k.variance_cap_ = 1.0;
    return k;
}

KernelSpec KernelSpec::finite_spectrum(int dimension, const EigendecayProfile& profile,
                                       int num_features, std::uint64_t feature_seed) {
    if (dimension < 1) throw InvalidInput("kernel dimension must be >= 1");
    if (num_features < 1) throw InvalidInput("num_features must be >= 1");
    profile.validate();
    KernelSpec k;
    k.family_ = KernelFamily::FiniteSpectrum;
    k.dimension_ = dimension;
    k.profile_ = profile;
    k.num_features_ = num_features;
    k.feature_seed_ = feature_seed;
    k.build_feature_table();
    return k;
}

// Features come in blocks with a shared eigenvalue: an optional constant
// feature (odd num_features) followed by {cos, sin} pairs of a common
// frequency. Pairing keeps k(z,z) exactly constant while every feature stays
// bounded by 1, so the uniform feature bound C1 = 1 holds by construction.
// Each block's eigenvalue is c_p * (last block index)^{-p}, which satisfies
// sigma_m <= c_p * m^{-p} at every position; the whole spectrum is rescaled if
// needed so that the variance never exceeds 1.
void KernelSpec::build_feature_table() {
    const int m_total = num_features_;
    const bool has_constant = (m_total % 2) == 1;
    const int num_pairs = has_constant ? (m_total - 1) / 2 : m_total / 2;

    sigma_.assign(m_total, 0.0);
    freq_.assign(m_total, std::vector<double>(dimension_, 0.0));
    phase_.assign(m_total, 0.0);

    Rng rng(Rng::derive_seed(feature_seed_, 0x6b65726eull));
    const auto freqs = enumerate_frequencies(dimension_, std::max(num_pairs, 1));

    double raw_variance = 0.0;
    int m = 0;
    if (has_constant) {
        sigma_[m] = std::pow(1.0, -profile_.p);  // = 1, kept for symmetry
        raw_variance += sigma_[m];
        ++m;
    }
    for (int j = 0; j < num_pairs; ++j) {
        const double theta = rng.uniform(0.0, 2.0 * kPi);
        const double sign = rng.uniform01() < 0.5 ? -1.0 : 1.0;
        const int last_index = m + 2;  // 1-based index of the pair's second member
        const double val = std::pow(static_cast<double>(last_index), -profile_.p);
        for (int half = 0; half < 2; ++half) {
            sigma_[m] = val;
            freq_[m] = freqs[j];
            // the second member is the same cosine shifted by -pi/2 (a sine)
            phase_[m] = theta - half * kPi / 2.0;
            // encode the sign in the phase: -cos(x) = cos(x + pi)
            if (sign < 0.0) phase_[m] += kPi;
            ++m;
        }
        raw_variance += val;
    }

    double scale = profile_.c_p;
    if (scale * raw_variance > 1.0) scale = 1.0 / raw_variance;
    for (double& s : sigma_) s *= scale;
    variance_cap_ = scale * raw_variance;
}

double KernelSpec::matern_general(double r) const {
    if (r == 0.0) return 1.0;
    const double x = std::sqrt(2.0 * nu_) * r / lengthscale_;
    return 2.0 * std::pow(x / 2.0, nu_) / std::tgamma(nu_) * std::cyl_bessel_k(nu_, x);
}

double KernelSpec::evaluate(const Point& z, const Point& z2) const {
    if (z.size() != dimension_ || z2.size() != dimension_) {
        throw InvalidInput("kernel evaluate: point dimension mismatch");
    }
    switch (family_) {
        case KernelFamily::Matern: {
            const double r = (z - z2).norm();
            if (r == 0.0) return 1.0;
            const double s = r / lengthscale_;
            if (nu_ == 0.5) return std::exp(-s);
            if (nu_ == 1.5) return (1.0 + kSqrt3 * s) * std::exp(-kSqrt3 * s);
            if (nu_ == 2.5) return (1.0 + kSqrt5 * s + 5.0 * s * s / 3.0) * std::exp(-kSqrt5 * s);
            return matern_general(r);
        }
        case KernelFamily::SquaredExponential: {
            const double r2 = (z - z2).squaredNorm();
            return std::exp(-0.5 * r2 / (lengthscale_ * lengthscale_));
        }
        case KernelFamily::FiniteSpectrum: {
            if (z == z2) return variance_cap_;
            double acc = 0.0;
            for (int m = 0; m < num_features_; ++m) {
                const double a = 2.0 * kPi * Eigen::Map<const Eigen::VectorXd>(
                                                 freq_[m].data(), dimension_)
                                                 .dot(z) +
                                 phase_[m];
                const double b = 2.0 * kPi * Eigen::Map<const Eigen::VectorXd>(
                                                 freq_[m].data(), dimension_)
                                                 .dot(z2) +
                                 phase_[m];
                // grouping the cosine product first keeps evaluation symmetric
                // in (z, z2) at the bit level
                acc += sigma_[m] * (std::cos(a) * std::cos(b));
            }
            return acc;
        }
    }
    return 0.0;
}

Matrix KernelSpec::gram(const std::vector<Point>& points) const {
    const Eigen::Index n = static_cast<Eigen::Index>(points.size());
    Matrix g(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double v = evaluate(points[i], points[j]);
            g(i, j) = v;
            g(j, i) = v;
        }
    }
    return g;
}

EigendecayProfile KernelSpec::eigendecay_profile(double domain_side) const {
    if (!(domain_side > 0.0)) throw InvalidInput("domain_side must be > 0");
    EigendecayProfile prof;
    switch (family_) {
        case KernelFamily::Matern:
            prof.p = (2.0 * nu_ + dimension_) / dimension_;
            prof.alpha = 2.0 * nu_;
            prof.eta = 0.0;
            prof.c_p = 1.0;
            break;
        case KernelFamily::FiniteSpectrum:
            prof = profile_;
            break;
        case KernelFamily::SquaredExponential:
            throw NotPolynomialEigendecay(
                "squared-exponential eigenvalues decay exponentially, not polynomially");
    }
    prof.c_p *= std::pow(domain_side, prof.alpha);
    prof.validate();
    return prof;
}

Vector KernelSpec::finite_spectrum_features(const Point& z) const {
    if (family_ != KernelFamily::FiniteSpectrum) {
        throw InvalidInput("finite_spectrum_features requires a FiniteSpectrum kernel");
    }
    if (z.size() != dimension_) throw InvalidInput("feature map: point dimension mismatch");
    Vector f(num_features_);
    for (int m = 0; m < num_features_; ++m) {
        const double a =
            2.0 * kPi *
                Eigen::Map<const Eigen::VectorXd>(freq_[m].data(), dimension_).dot(z) +
            phase_[m];
        f[m] = std::sqrt(sigma_[m]) * std::cos(a);
    }
    return f;
}

const std::vector<double>& KernelSpec::finite_spectrum_eigenvalues() const {
    if (family_ != KernelFamily::FiniteSpectrum) {
        throw InvalidInput("eigenvalues are only configured for FiniteSpectrum kernels");
    }
    return sigma_;
}

double KernelCombination::evaluate(const Point& z) const {
    double acc = 0.0;
    for (std::size_t j = 0; j < centers.size(); ++j) {
        acc += weights[static_cast<Eigen::Index>(j)] * spec.evaluate(z, centers[j]);
    }
    return acc;
}

double KernelCombination::rkhs_norm() const {
    const Matrix k_cc = spec.gram(centers);
    const double sq = weights.dot(k_cc * weights);
    return std::sqrt(std::max(0.0, sq));
}

void KernelCombination::normalize(double target) {
    const double norm = rkhs_norm();
    if (norm > 1e-12) weights *= target / norm;
}

}  // namespace krvi::kernels
