#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cmsim::stats {

struct ReturnSeries {
    std::vector<double> raw;
    std::vector<double> abs;
};

/// Simple relative returns r(t) = (p(t) - p(t-1)) / p(t-1).
inline ReturnSeries returns(std::span<const double> prices) {
    if (prices.size() < 2) throw std::invalid_argument("returns: need at least 2 prices");
    for (double p : prices)
        if (!(p > 0)) throw std::invalid_argument("returns: prices must be positive");
    ReturnSeries r;
    r.raw.reserve(prices.size() - 1);
    r.abs.reserve(prices.size() - 1);
    for (std::size_t t = 1; t < prices.size(); ++t) {
        const double x = (prices[t] - prices[t - 1]) / prices[t - 1];
        r.raw.push_back(x);
        r.abs.push_back(std::abs(x));
    }
    return r;
}

inline double mean(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

/// Sample autocorrelation for lags 0..max_lag; element 0 is always 1.
inline std::vector<double> acf(std::span<const double> x, std::size_t max_lag) {
    if (x.size() <= max_lag + 1) throw std::invalid_argument("acf: series too short for max_lag");
    const double m = mean(x);
    double denom = 0.0;
    for (double v : x) denom += (v - m) * (v - m);
    if (!(denom > 0)) throw std::domain_error("acf: zero-variance series");
    std::vector<double> rho(max_lag + 1);
    for (std::size_t k = 0; k <= max_lag; ++k) {
        double num = 0.0;
        for (std::size_t t = 0; t + k < x.size(); ++t) num += (x[t] - m) * (x[t + k] - m);
        rho[k] = num / denom;
    }
    rho[0] = 1.0;
    return rho;
}

struct CcdfPoint {
    double x;
    double p;  // P(X >= x)
};

/// Empirical complementary CDF over the distinct sample values, ascending in x.
inline std::vector<CcdfPoint> ccdf(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("ccdf: empty sample");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    const double n = static_cast<double>(v.size());
    std::vector<CcdfPoint> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i > 0 && v[i] == v[i - 1]) continue;
        out.push_back({v[i], static_cast<double>(v.size() - i) / n});
    }
    return out;
}

/// Linear-interpolation sample quantile, q in [0,1].
inline double quantile(std::span<const double> values, double q) {
    if (values.empty()) throw std::invalid_argument("quantile: empty sample");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    const double h = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

struct TailFit {
    double x_min = 0.0;
    double slope = 0.0;  // log-log CCDF slope, -(alpha - 1)
    double intercept = 0.0;
    double r_squared = 0.0;
    std::size_t n_tail = 0;
};

inline constexpr std::size_t kMinTailPoints = 10;

class TailFitError : public std::runtime_error {
public:
    TailFitError(std::size_t n_tail)
        : std::runtime_error("tail_fit: only " + std::to_string(n_tail) + " points above x_min"),
          n_tail_(n_tail) {}
    [[nodiscard]] std::size_t n_tail() const noexcept { return n_tail_; }

private:
    std::size_t n_tail_;
};

/// Least squares line through (log x, log P) for points with x >= x_min.
inline TailFit tail_fit(std::span<const CcdfPoint> points, double x_min) {
    if (!(x_min > 0)) throw std::invalid_argument("tail_fit: x_min must be > 0");
    std::vector<double> lx, lp;
    for (const auto& pt : points) {
        if (pt.x >= x_min && pt.p > 0) {
            lx.push_back(std::log(pt.x));
            lp.push_back(std::log(pt.p));
        }
    }
    if (lx.size() < kMinTailPoints) throw TailFitError(lx.size());
    const double mx = mean(lx), my = mean(lp);
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (lp[i] - my);
        syy += (lp[i] - my) * (lp[i] - my);
    }
    TailFit fit;
    fit.x_min = x_min;
    fit.n_tail = lx.size();
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r_squared = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return fit;
}

/// Ordinary least squares by column-pivoted Householder QR. Returns
/// coefficients, residual sum of squares and the diagonal of (X'X)^-1.
struct OlsResult {
    std::vector<double> beta;
    std::vector<double> xtx_inv_diag;
    double rss = 0.0;
    std::size_t n = 0;
    std::size_t k = 0;
};

class SingularRegression : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// `x` is row-major n-by-k.
inline OlsResult ols(const std::vector<double>& x, const std::vector<double>& y, std::size_t k) {
    const std::size_t n = y.size();
    if (k == 0 || n <= k || x.size() != n * k) throw std::invalid_argument("ols: bad dimensions");
    using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const auto rows = static_cast<Eigen::Index>(n), cols = static_cast<Eigen::Index>(k);
    const Eigen::Map<const Matrix> X(x.data(), rows, cols);
    const Eigen::Map<const Eigen::VectorXd> Y(y.data(), rows);

    // equilibrate columns so regressors on very different scales (constant,
    // time index, price level) do not confuse the rank decision
    Eigen::VectorXd scale = X.cwiseAbs().colwise().maxCoeff().transpose();
    for (Eigen::Index c = 0; c < cols; ++c)
        if (!(scale(c) > 0)) throw SingularRegression("ols: design matrix is singular");
    const Matrix Xs = X * scale.cwiseInverse().asDiagonal();

    const Eigen::ColPivHouseholderQR<Matrix> qr(Xs);
    if (qr.rank() < cols) throw SingularRegression("ols: design matrix is singular");

    const Eigen::VectorXd b = qr.solve(Y).cwiseQuotient(scale);
    const Eigen::MatrixXd R = qr.matrixR().topLeftCorner(cols, cols).triangularView<Eigen::Upper>();
    const Eigen::MatrixXd Rinv =
        R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(cols, cols));
    const Eigen::VectorXd d_perm = Rinv.rowwise().squaredNorm();
    const auto& perm = qr.colsPermutation().indices();

    OlsResult res;
    res.n = n;
    res.k = k;
    res.beta.assign(b.data(), b.data() + cols);
    res.xtx_inv_diag.assign(k, 0.0);
    for (Eigen::Index i = 0; i < cols; ++i) {
        const Eigen::Index c = perm(i);
        res.xtx_inv_diag[static_cast<std::size_t>(c)] = d_perm(i) / (scale(c) * scale(c));
    }
    res.rss = (Y - X * b).squaredNorm();
    return res;
}

struct AdfResult {
    double tau3 = 0.0;
    double gamma = 0.0;
    std::size_t lags = 0;
    std::size_t nobs = 0;
    double critical_1 = -3.96;
    double critical_5 = -3.41;
    double critical_10 = -3.12;
};

inline std::size_t default_adf_lags(std::size_t n) {
    if (n < 2) return 0;
    return static_cast<std::size_t>(std::floor(std::cbrt(static_cast<double>(n - 1)) + 1e-12));
}

inline constexpr std::size_t kAdfMinLength = 25;

/// Dickey-Fuller regression with drift and linear trend:
/// dp_t = a0 + a1 t + gamma p_{t-1} + sum_j phi_j dp_{t-j} + e_t.
/// tau3 is the t-statistic of gamma.
inline AdfResult adf_tau3(std::span<const double> p, std::optional<std::size_t> lags = std::nullopt) {
    const std::size_t L = lags.value_or(default_adf_lags(p.size()));
    if (p.size() < kAdfMinLength + L)
        throw std::invalid_argument("adf_tau3: series too short (" + std::to_string(p.size()) +
                                    " points, need " + std::to_string(kAdfMinLength + L) + ")");
    const std::size_t k = 3 + L;
    std::vector<double> x, y;
    for (std::size_t t = L + 1; t < p.size(); ++t) {
        y.push_back(p[t] - p[t - 1]);
        x.push_back(1.0);
        x.push_back(static_cast<double>(t));
        x.push_back(p[t - 1]);
        for (std::size_t j = 1; j <= L; ++j) x.push_back(p[t - j] - p[t - j - 1]);
    }
    const OlsResult fit = ols(x, y, k);
    const double s2 = fit.rss / static_cast<double>(fit.n - fit.k);
    const double se = std::sqrt(s2 * fit.xtx_inv_diag[2]);
    if (!(se > 0)) throw SingularRegression("adf_tau3: zero residual variance");
    AdfResult r;
    r.gamma = fit.beta[2];
    r.tau3 = r.gamma / se;
    r.lags = L;
    r.nobs = fit.n;
    return r;
}

struct McAggregate {
    std::vector<double> mean;
    std::vector<double> stddev;
};

/// Per-day sample mean and standard deviation of price across runs.
inline McAggregate mc_aggregate(const std::vector<std::vector<double>>& runs) {
    if (runs.size() < 2) throw std::invalid_argument("mc_aggregate: need at least 2 runs");
    const std::size_t h = runs.front().size();
    for (const auto& r : runs)
        if (r.size() != h) throw std::invalid_argument("mc_aggregate: ragged horizons");
    McAggregate a;
    a.mean.assign(h, 0.0);
    a.stddev.assign(h, 0.0);
    const double n = static_cast<double>(runs.size());
    for (std::size_t t = 0; t < h; ++t) {
        double m = 0.0;
        for (const auto& r : runs) m += r[t];
        m /= n;
        double ss = 0.0;
        for (const auto& r : runs) ss += (r[t] - m) * (r[t] - m);
        a.mean[t] = m;
        a.stddev[t] = std::sqrt(ss / (n - 1.0));
    }
    return a;
}

struct AnalysisParams {
    std::size_t acf_max_lag = 50;
    double x_min = 0.1;
    double tail_quantile = 0.0;  // > 0 replaces x_min by this quantile of |r|
    std::optional<std::size_t> adf_lags;
};

/// Everything the stylized-fact pipeline reports for one price series.
struct StatsReport {
    std::vector<double> acf_raw;
    std::vector<double> acf_abs;
    std::vector<CcdfPoint> ccdf_abs;
    std::optional<TailFit> tail;
    std::size_t n_tail = 0;
    double x_min = 0.0;
    AdfResult adf;

    /// Mean of |rho_raw(k)| and rho_abs(k) over lags 1..max_lag.
    [[nodiscard]] double mean_abs_raw(std::size_t max_lag) const {
        double s = 0;
        for (std::size_t k = 1; k <= max_lag; ++k) s += std::abs(acf_raw.at(k));
        return s / static_cast<double>(max_lag);
    }
    [[nodiscard]] double mean_abs_acf(std::size_t max_lag) const {
        double s = 0;
        for (std::size_t k = 1; k <= max_lag; ++k) s += acf_abs.at(k);
        return s / static_cast<double>(max_lag);
    }
};

inline StatsReport analyze(std::span<const double> prices, const AnalysisParams& params) {
    if (prices.size() < kAdfMinLength)
        throw std::invalid_argument("analyze: need at least 25 prices");
    StatsReport rep;
    const ReturnSeries r = returns(prices);
    rep.acf_raw = acf(r.raw, params.acf_max_lag);
    rep.acf_abs = acf(r.abs, params.acf_max_lag);
    rep.ccdf_abs = ccdf(r.abs);
    rep.x_min = params.tail_quantile > 0 ? quantile(r.abs, params.tail_quantile) : params.x_min;
    try {
        rep.tail = tail_fit(rep.ccdf_abs, rep.x_min);
        rep.n_tail = rep.tail->n_tail;
    } catch (const TailFitError& e) {
        rep.n_tail = e.n_tail();
    } catch (const std::invalid_argument&) {
        rep.n_tail = 0;
    }
    rep.adf = adf_tau3(prices, params.adf_lags);
    return rep;
}

inline void write_acf_csv(std::ostream& out, const StatsReport& rep) {
    out << std::setprecision(17) << "lag,rho_raw,rho_abs\n";
    for (std::size_t k = 0; k < rep.acf_raw.size(); ++k)
        out << k << ',' << rep.acf_raw[k] << ',' << rep.acf_abs[k] << '\n';
}

inline void write_ccdf_csv(std::ostream& out, const StatsReport& rep) {
    out << std::setprecision(17) << "x,p\n";
    for (const auto& pt : rep.ccdf_abs) out << pt.x << ',' << pt.p << '\n';
}

inline void write_summary_csv(std::ostream& out, const StatsReport& rep) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    out << std::setprecision(17) << "tau3,lags,slope,r2,xmin,n_tail\n";
    out << rep.adf.tau3 << ',' << rep.adf.lags << ',' << (rep.tail ? rep.tail->slope : nan) << ','
        << (rep.tail ? rep.tail->r_squared : nan) << ',' << rep.x_min << ',' << rep.n_tail << '\n';
}

}  // namespace cmsim::stats
