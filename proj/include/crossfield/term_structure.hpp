#pragma once

// Tenor grid, initial discount curves, and the definitional maps between
// discount factors, forward LIBOR rates, forward FX, and accrual ratios.
// Everything here is immutable after construction and safe to share.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace crossfield {

// Discrete tenor T_0 < T_1 < ... < T_N with accruals delta_{i+1} = T_{i+1} - T_i.
class Tenor {
public:
    explicit Tenor(std::vector<double> dates) : dates_(std::move(dates)) {
        if (dates_.size() < 2) throw std::invalid_argument("tenor needs at least two dates");
        if (dates_.front() < 0.0) throw std::invalid_argument("tenor dates must be >= 0");
        for (std::size_t i = 0; i + 1 < dates_.size(); ++i) {
            if (dates_[i + 1] <= dates_[i])
                throw std::invalid_argument("tenor dates must be strictly increasing");
        }
    }

    // Number of accrual periods N.
    std::size_t periods() const { return dates_.size() - 1; }

    // T_i for i = 0..N.
    double date(std::size_t i) const {
        if (i >= dates_.size()) throw std::out_of_range("tenor date index");
        return dates_[i];
    }

    // delta_{i+1} for reset index i = 0..N-1.
    double accrual(std::size_t i) const {
        if (i + 1 >= dates_.size()) throw std::out_of_range("tenor accrual index");
        return dates_[i + 1] - dates_[i];
    }

    double first() const { return dates_.front(); }
    double last() const { return dates_.back(); }
    std::span<const double> dates() const { return dates_; }

private:
    std::vector<double> dates_;
};

// Time-0 domestic/foreign discount curves plus spot FX (domestic per foreign).
// Discounts between sample dates are log-linear, which keeps them positive and
// implies piecewise-constant forwards.
class CurveSet {
public:
    CurveSet(std::vector<double> dates, std::vector<double> domestic,
             std::vector<double> foreign, double spot_fx)
        : dates_(std::move(dates)),
          dom_(std::move(domestic)),
          frn_(std::move(foreign)),
          spot_fx_(spot_fx) {
        if (dates_.empty() || dom_.size() != dates_.size() || frn_.size() != dates_.size())
            throw std::invalid_argument("curve arrays must be non-empty and equal length");
        if (!(spot_fx_ > 0.0)) throw std::invalid_argument("spot FX must be positive");
        if (dates_.front() < 0.0) throw std::invalid_argument("curve dates must be >= 0");
        for (std::size_t i = 0; i < dates_.size(); ++i) {
            if (i > 0 && dates_[i] <= dates_[i - 1])
                throw std::invalid_argument("curve dates must be strictly increasing");
            check_discount("domestic", dom_, i, dates_[i]);
            check_discount("foreign", frn_, i, dates_[i]);
        }
    }

    double spot_fx() const { return spot_fx_; }
    std::span<const double> dates() const { return dates_; }
    std::span<const double> domestic_discounts() const { return dom_; }
    std::span<const double> foreign_discounts() const { return frn_; }

    // B(0, t)
    double discount(double t) const { return interpolate(dom_, t); }
    // B_F(0, t)
    double foreign_discount(double t) const { return interpolate(frn_, t); }

private:
    static void check_discount(const char* which, const std::vector<double>& d, std::size_t i,
                               double t) {
        if (!(d[i] > 0.0) || d[i] > 1.0)
            throw std::invalid_argument(std::string(which) + " discount out of (0,1] at index " +
                                        std::to_string(i));
        if (t == 0.0 && d[i] != 1.0)
            throw std::invalid_argument(std::string(which) + " discount at t=0 must be 1");
        if (i > 0 && d[i] >= d[i - 1])
            throw std::invalid_argument(std::string(which) +
                                        " discounts not strictly decreasing at index " +
                                        std::to_string(i));
    }

    // Log-linear in t with an implicit (0, 1) anchor; flat-forward beyond the end.
    double interpolate(const std::vector<double>& d, double t) const {
        if (t < 0.0) throw std::invalid_argument("discount time must be >= 0");
        if (t == 0.0) return 1.0;
        auto it = std::lower_bound(dates_.begin(), dates_.end(), t);
        if (it != dates_.end() && *it == t)
            return d[static_cast<std::size_t>(it - dates_.begin())];
        double t0 = 0.0, l0 = 0.0;  // ln B(0,0) = 0
        if (it != dates_.begin()) {
            const std::size_t k = static_cast<std::size_t>(it - dates_.begin()) - 1;
            t0 = dates_[k];
            l0 = std::log(d[k]);
        }
        if (it == dates_.end()) {
            // extrapolate at the last forward rate
            const std::size_t n = dates_.size();
            const double tn = dates_[n - 1];
            const double ln = std::log(d[n - 1]);
            const double fwd = (n >= 2) ? -(ln - std::log(d[n - 2])) / (tn - dates_[n - 2])
                                        : -ln / tn;
            return std::exp(ln - fwd * (t - tn));
        }
        const std::size_t k = static_cast<std::size_t>(it - dates_.begin());
        const double t1 = dates_[k];
        const double l1 = std::log(d[k]);
        return std::exp(l0 + (l1 - l0) * (t - t0) / (t1 - t0));
    }

    std::vector<double> dates_;
    std::vector<double> dom_;
    std::vector<double> frn_;
    double spot_fx_;
};

enum class Currency { Domestic, Foreign };

// Forward LIBOR implied by a discount pair:
// 1 + delta_{i+1} L(0,T_i) = B(0,T_i) / B(0,T_{i+1}).
inline double libor_from_discounts(const CurveSet& curves, const Tenor& tenor, std::size_t i,
                                   Currency which = Currency::Domestic) {
    if (i >= tenor.periods()) throw std::out_of_range("libor index out of range");
    const bool dom = which == Currency::Domestic;
    const double b0 = dom ? curves.discount(tenor.date(i)) : curves.foreign_discount(tenor.date(i));
    const double b1 =
        dom ? curves.discount(tenor.date(i + 1)) : curves.foreign_discount(tenor.date(i + 1));
    if (b1 >= b0)
        throw std::invalid_argument("flat discount pair at index " + std::to_string(i));
    return (b0 / b1 - 1.0) / tenor.accrual(i);
}

// T_i-forward FX: X(0,T_i) = B_F(0,T_i) X(0) / B(0,T_i).
inline double forward_fx(const CurveSet& curves, const Tenor& tenor, std::size_t i) {
    if (i > tenor.periods()) throw std::out_of_range("forward fx index out of range");
    const double t = tenor.date(i);
    return curves.foreign_discount(t) * curves.spot_fx() / curves.discount(t);
}

// A = delta L / (1 + delta L); the weight tying LIBOR vol to bond-level vol.
inline double accrual_ratio(double libor, double accrual) {
    const double denom = 1.0 + accrual * libor;
    if (denom <= 0.0)
        throw std::domain_error("accrual ratio undefined: 1 + delta L <= 0 (exploded rate)");
    return accrual * libor / denom;
}

// Curves plus the tenor they are quoted on.
struct Market {
    Tenor tenor;
    CurveSet curves;
};

}  // namespace crossfield
