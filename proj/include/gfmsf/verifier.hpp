#pragma once

// Sampling-based falsification of the certificate conditions: barrier
// boundary decrease, transitional-region decrease (alone and jointly with the
// barrier row), nominal-region invariance under u_n', and set containment.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "gfmsf/params.hpp"
#include "gfmsf/sfilter.hpp"

namespace gfmsf {

struct OperationalRegion {
    double i_max = 1.30;
    double dv_max = 1.0;
    double i_r_max = 1.18;
    double i_0_max = 0.6;
    bool negated_region = false;   // every f_op row negated

    static OperationalRegion from(const LimitParams& l, bool negated_region = false);

    /// f_op,1..4 at p; the region is {all <= 0}.
    std::array<double, 4> f_op(const CertPoint& p) const;
    bool contains(const CertPoint& p) const;
};

enum class Condition { cbf_boundary, clf_region, clf_cbf_joint, nominal_invariance, containment_xn_xs,
                       containment_xs_xa };
const char* to_string(Condition c);

struct Violation {
    Condition condition = Condition::cbf_boundary;
    CertPoint point{};
    double residual = 0.0;
};

struct VerificationReport {
    std::uint64_t samples_tested = 0;
    std::uint64_t points_checked = 0;   // samples that landed in the condition's domain
    std::vector<Violation> violations;

    bool pass() const { return violations.empty(); }
    std::uint64_t count(Condition c) const;

    /// Order-independent: violations are kept sorted.
    VerificationReport& merge(const VerificationReport& other);

    /// One JSON object per line; the first line is a summary.
    std::string serialize() const;
};

/// Deterministic rejection sampler over the box enclosing the region.
class RegionSampler {
public:
    /// relax_current widens the current box by half and drops f_op,1, so points
    /// outside the allowable set are drawn too.
    RegionSampler(const OperationalRegion& r, std::uint64_t seed, bool relax_current = false);
    CertPoint next();
    std::uint64_t drawn() const { return drawn_; }

private:
    double uniform(double lo, double hi);
    OperationalRegion region_;
    std::mt19937_64 rng_;
    bool relax_current_;
    std::uint64_t drawn_ = 0;
};

std::vector<CertPoint> sample_region(const OperationalRegion& r, std::size_t n, std::uint64_t seed);

struct VerifyOptions {
    std::size_t samples = 100000;
    std::uint64_t seed = 1;
    double band = 1e-3;
    std::size_t joint_sweep = 3600;
    OperationalRegion region;
    sfilter::FilterModel model;
    double m_max = 1.44;
    DqVector v_pcc_n{1.0, 0.0};

    static VerifyOptions from(const Params& p, bool negated_region = false);
};

namespace verifier {

/// min over ||u + v_n||^2 <= m_max of a^T u.
double ball_min(const DqVector& a, const DqVector& v_n, double m_max);

/// Bisection on s in [lo, hi] for g(s) = 0 given g(lo) <= 0 < g(hi).
template <typename Fn>
double bisect(Fn&& g, double lo, double hi) {
    for (int k = 0; k < 200; ++k) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (g(mid) <= 0.0 ? lo : hi) = mid;
    }
    return lo;
}

VerificationReport check_cbf_boundary(const SafetyCertificates& certs, const VerifyOptions& o);
VerificationReport check_clf_region(const SafetyCertificates& certs, const VerifyOptions& o);
VerificationReport check_nominal_invariance(const SafetyCertificates& certs, const VerifyOptions& o);
VerificationReport check_containment(const SafetyCertificates& certs, const VerifyOptions& o);

/// All four checks merged.
VerificationReport verify_all(const SafetyCertificates& certs, const VerifyOptions& o);

struct AbcBound {
    double max_phase = 0.0;
    double bound = 0.0;   // i_hat + i_0
    bool within(double tol) const { return max_phase <= bound + tol; }
};

/// Grid maximum over (theta, phi) of the worst phase of K_p^-1(theta) (i_hat cos phi, i_hat sin phi, i_0).
AbcBound check_abc_bound(int n_theta, int n_phi, double i_hat, double i_0);

}  // namespace verifier
}  // namespace gfmsf
