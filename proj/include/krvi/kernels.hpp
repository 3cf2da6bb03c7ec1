#pragma once

#include <cstdint>
#include <vector>

#include "krvi/common.hpp"

namespace krvi::kernels {

// Polynomial eigendecay metadata: Mercer eigenvalues obey
// sigma_m <= c_p * m^{-p} * rho^alpha on a cube of side rho, and
// m^{-p*eta} * phi_m is uniformly bounded (by c1, fixed to 1 here).
struct EigendecayProfile {
    double p = 2.0;      // decay exponent, > 1
    double alpha = 1.0;  // domain-size scaling exponent, > 0
    double eta = 0.0;    // eigenfeature growth exponent, >= 0
    double c_p = 1.0;    // decay constant, > 0

    double p_tilde() const { return p * (1.0 - 2.0 * eta); }
    void validate() const;
};

enum class KernelFamily { Matern, SquaredExponential, FiniteSpectrum };

// A positive-definite kernel on [0,1]^d with k(z,z) <= 1.
//
// Matern and SquaredExponential are the usual stationary forms. FiniteSpectrum
// is a synthetic kernel built from an explicit finite feature expansion with
// exactly prescribed eigenvalues, used to verify spectrum-based bounds against
// exact log-determinant computations.
class KernelSpec {
public:
    static KernelSpec matern(int dimension, double nu, double lengthscale);
    static KernelSpec squared_exponential(int dimension, double lengthscale);
    static KernelSpec finite_spectrum(int dimension, const EigendecayProfile& profile,
                                      int num_features, std::uint64_t feature_seed);

    KernelFamily family() const { return family_; }
    int dimension() const { return dimension_; }
    double nu() const { return nu_; }
    double lengthscale() const { return lengthscale_; }
    int num_features() const { return num_features_; }
    std::uint64_t feature_seed() const { return feature_seed_; }

    // k(z,z) — constant over the domain by construction for every family.
    double variance_cap() const { return variance_cap_; }

    double evaluate(const Point& z, const Point& z2) const;
    Matrix gram(const std::vector<Point>& points) const;

    // Eigendecay profile for this kernel restricted to a cube of side
    // domain_side. The returned c_p absorbs the domain_side^alpha factor, so
    // the profile can be used with rho = 1 downstream.
    EigendecayProfile eigendecay_profile(double domain_side) const;

    // [sqrt(sigma_m) * phi_m(z)]_m for the FiniteSpectrum family. The inner
    // product of two such vectors equals evaluate on the two points.
    Vector finite_spectrum_features(const Point& z) const;

    // Configured eigenvalues of the FiniteSpectrum family, decreasing.
    const std::vector<double>& finite_spectrum_eigenvalues() const;

private:
    KernelSpec() = default;
    void build_feature_table();
    double matern_general(double r) const;

    KernelFamily family_ = KernelFamily::Matern;
    int dimension_ = 1;
    double nu_ = 0.5;
    double lengthscale_ = 1.0;
    double variance_cap_ = 1.0;

    // FiniteSpectrum state
    EigendecayProfile profile_;
    int num_features_ = 0;
    std::uint64_t feature_seed_ = 0;
    std::vector<double> sigma_;                  // per-feature eigenvalue
    std::vector<std::vector<double>> freq_;      // per-feature frequency vector
    std::vector<double> phase_;                  // per-feature phase offset
};

// f = sum_j weights[j] * k(., centers[j]); a finite kernel combination with an
// exactly computable RKHS norm sqrt(w^T K_cc w).
struct KernelCombination {
    explicit KernelCombination(KernelSpec spec_in) : spec(std::move(spec_in)) {}

    KernelSpec spec;
    std::vector<Point> centers;
    Vector weights;

    double evaluate(const Point& z) const;
    double rkhs_norm() const;
    // Rescales the weights so the RKHS norm equals `target` (no-op when the
    // current norm is zero).
    void normalize(double target);
};

}  // namespace krvi::kernels
