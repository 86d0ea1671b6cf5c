#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "htail/distribution.hpp"
#include "htail/special.hpp"

namespace htail {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using nlohmann::json;

void require(bool ok, const char* parameter, const char* message) {
  if (!ok) throw ParameterError(parameter, message);
}

// F(x) = 1 - (x / x_min)^-beta for x >= x_min.
class RegVar : public DistributionImpl {
 public:
  RegVar(double beta, double x_min) : beta_(beta), x_min_(x_min) {
    require(std::isfinite(beta) && beta > 0.0, "beta", "must be positive and finite");
    require(std::isfinite(x_min) && x_min > 0.0, "x_min", "must be positive and finite");
  }
  std::string family() const override { return "regvar"; }
  double log_sf(double x) const override {
    if (x < x_min_) return 0.0;
    return -beta_ * std::log(x / x_min_);
  }
  double log_cdf(double x) const override {
    if (x <= x_min_) return kLogZero;
    return log1m_exp(log_sf(x));
  }
  double log_pdf(double x) const override {
    if (x < x_min_) return kLogZero;
    return std::log(beta_ / x_min_) - (beta_ + 1.0) * std::log(x / x_min_);
  }
  double support_lo() const override { return x_min_; }
  double support_hi() const override { return kInf; }
  std::vector<double> kinks(double lo, double hi) const override {
    if (x_min_ > lo && x_min_ < hi) return {x_min_};
    return {};
  }
  double sample(Rng& rng) const override {
    return x_min_ * std::exp(-std::log(uniform_open01(rng)) / beta_);
  }
  json to_json() const override {
    return {{"family", "regvar"}, {"params", {{"beta", beta_}, {"x_min", x_min_}}}};
  }

 protected:
  double beta_;
  double x_min_;
};

// F-bar(x) = 1(x < 1) + x^{-alpha-1} 1(x >= 1).
class Example31F : public RegVar {
 public:
  explicit Example31F(double alpha) : RegVar(alpha + 1.0, 1.0), alpha_(alpha) {
    require(alpha > 0.0, "alpha", "must be positive");
  }
  std::string family() const override { return "example31_F"; }
  json to_json() const override { return {{"family", "example31_F"}, {"params", {{"alpha", alpha_}}}}; }

 private:
  double alpha_;
};

// F-bar(x) = exp(-x^alpha) for x > 0.
class WeibullType : public DistributionImpl {
 public:
  explicit WeibullType(double alpha) : alpha_(alpha) {
    require(std::isfinite(alpha) && alpha > 0.0, "alpha", "must be positive and finite");
  }
  std::string family() const override { return "weibull_type"; }
  double log_sf(double x) const override { return x <= 0.0 ? 0.0 : -std::pow(x, alpha_); }
  double log_cdf(double x) const override {
    if (x <= 0.0) return kLogZero;
    return std::log(-std::expm1(-std::pow(x, alpha_)));
  }
  double log_pdf(double x) const override {
    if (x <= 0.0) return kLogZero;
    return std::log(alpha_) + (alpha_ - 1.0) * std::log(x) - std::pow(x, alpha_);
  }
  double support_lo() const override { return 0.0; }
  double support_hi() const override { return kInf; }
  double sample(Rng& rng) const override {
    return std::pow(-std::log(uniform_open01(rng)), 1.0 / alpha_);
  }
  json to_json() const override { return {{"family", "weibull_type"}, {"params", {{"alpha", alpha_}}}}; }

 private:
  double alpha_;
};

class Exponential : public DistributionImpl {
 public:
  explicit Exponential(double rate) : rate_(rate) {
    require(std::isfinite(rate) && rate > 0.0, "rate", "must be positive and finite");
  }
  std::string family() const override { return "exponential"; }
  double log_sf(double x) const override { return x <= 0.0 ? 0.0 : -rate_ * x; }
  double log_cdf(double x) const override {
    if (x <= 0.0) return kLogZero;
    return std::log(-std::expm1(-rate_ * x));
  }
  double log_pdf(double x) const override { return x < 0.0 ? kLogZero : std::log(rate_) - rate_ * x; }
  double support_lo() const override { return 0.0; }
  double support_hi() const override { return kInf; }
  double sample(Rng& rng) const override { return -std::log(uniform_open01(rng)) / rate_; }
  json to_json() const override { return {{"family", "exponential"}, {"params", {{"rate", rate_}}}}; }

 private:
  double rate_;
};

// Uniform on (lo, hi].
class Uniform : public DistributionImpl {
 public:
  Uniform(double lo, double hi) : lo_(lo), hi_(hi) {
    require(std::isfinite(lo), "lo", "must be finite");
    require(std::isfinite(hi) && hi > lo, "hi", "must be finite and exceed lo");
  }
  std::string family() const override { return "uniform"; }
  double log_sf(double x) const override {
    if (x < lo_) return 0.0;
    if (x >= hi_) return kLogZero;
    return std::log((hi_ - x) / (hi_ - lo_));
  }
  double log_cdf(double x) const override {
    if (x <= lo_) return kLogZero;
    if (x >= hi_) return 0.0;
    return std::log((x - lo_) / (hi_ - lo_));
  }
  double log_pdf(double x) const override {
    if (x <= lo_ || x > hi_) return kLogZero;
    return -std::log(hi_ - lo_);
  }
  double support_lo() const override { return lo_; }
  double support_hi() const override { return hi_; }
  std::vector<double> kinks(double lo, double hi) const override {
    std::vector<double> out;
    for (double k : {lo_, hi_}) {
      if (k > lo && k < hi) out.push_back(k);
    }
    return out;
  }
  double sample(Rng& rng) const override { return hi_ - (hi_ - lo_) * uniform_open01(rng); }
  json to_json() const override { return {{"family", "uniform"}, {"params", {{"lo", lo_}, {"hi", hi_}}}}; }

 private:
  double lo_;
  double hi_;
};

// Finitely many atoms; degenerate(c) is the one-atom case.
class Discrete : public DistributionImpl {
 public:
  Discrete(std::vector<Atom> atoms, bool degenerate_tag) : degenerate_tag_(degenerate_tag) {
    require(!atoms.empty(), "atoms", "must be nonempty");
    std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) { return a.location < b.location; });
    double total = 0.0;
    for (const Atom& a : atoms) {
      require(std::isfinite(a.location), "atoms", "locations must be finite");
      require(a.mass > 0.0 && a.mass <= 1.0, "atoms", "masses must lie in (0, 1]");
      if (!atoms_.empty() && atoms_.back().location == a.location) {
        atoms_.back().mass += a.mass;
      } else {
        atoms_.push_back(a);
      }
      total += a.mass;
    }
    require(std::fabs(total - 1.0) <= 1e-12, "atoms", "masses must sum to 1");
    // log of the mass strictly above atom i
    log_above_.assign(atoms_.size(), kLogZero);
    LogAccumulator acc;
    for (std::size_t i = atoms_.size(); i-- > 0;) {
      log_above_[i] = acc.value();
      acc.add(std::log(atoms_[i].mass));
    }
    log_cdf_at_.resize(atoms_.size());
    LogAccumulator below;
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      below.add(std::log(atoms_[i].mass));
      log_cdf_at_[i] = below.value();
    }
  }
  std::string family() const override { return degenerate_tag_ ? "degenerate" : "discrete"; }
  double log_sf(double x) const override {
    // first atom with location > x
    auto it = std::upper_bound(atoms_.begin(), atoms_.end(), x,
                               [](double v, const Atom& a) { return v < a.location; });
    if (it == atoms_.begin()) return 0.0;
    const std::size_t i = static_cast<std::size_t>(it - atoms_.begin()) - 1;
    return log_above_[i];
  }
  double log_cdf(double x) const override {
    auto it = std::upper_bound(atoms_.begin(), atoms_.end(), x,
                               [](double v, const Atom& a) { return v < a.location; });
    if (it == atoms_.begin()) return kLogZero;
    return log_cdf_at_[static_cast<std::size_t>(it - atoms_.begin()) - 1];
  }
  double log_pdf(double) const override { return kLogZero; }
  double continuous_mass() const override { return 0.0; }
  double log_sf_continuous(double) const override { return kLogZero; }
  double support_lo() const override { return atoms_.front().location; }
  double support_hi() const override { return atoms_.back().location; }
  double mass_at_zero() const override {
    for (const Atom& a : atoms_) {
      if (a.location == 0.0) return a.mass;
    }
    return 0.0;
  }
  std::vector<Atom> atoms(double mass_floor, double loc_ceiling) const override {
    std::vector<Atom> out;
    for (const Atom& a : atoms_) {
      if (a.location > 0.0 && a.location <= loc_ceiling && a.mass >= mass_floor) out.push_back(a);
    }
    return out;
  }
  std::vector<double> kinks(double lo, double hi) const override {
    std::vector<double> out;
    for (const Atom& a : atoms_) {
      if (a.location > lo && a.location < hi) out.push_back(a.location);
    }
    return out;
  }
  double sample(Rng& rng) const override {
    const double u = uniform_open01(rng);
    double acc = 0.0;
    for (const Atom& a : atoms_) {
      acc += a.mass;
      if (u <= acc) return a.location;
    }
    return atoms_.back().location;
  }
  json to_json() const override {
    if (degenerate_tag_) return {{"family", "degenerate"}, {"params", {{"c", atoms_.front().location}}}};
    json list = json::array();
    for (const Atom& a : atoms_) list.push_back({a.location, a.mass});
    return {{"family", "discrete"}, {"params", {{"atoms", list}}}};
  }

 private:
  std::vector<Atom> atoms_;
  std::vector<double> log_above_;
  std::vector<double> log_cdf_at_;
  bool degenerate_tag_;
};

// Masses C n^{-beta} on n = 1, 2, ..., C = 1 / zeta(beta).
class LatticePower : public DistributionImpl {
 public:
  explicit LatticePower(double beta) : beta_(beta) {
    require(std::isfinite(beta) && beta > 1.0 && beta <= 40.0, "beta", "must lie in (1, 40]");
    log_c_ = -log_hurwitz_zeta(beta_, 1.0);
  }
  std::string family() const override { return "lattice_power"; }
  double log_mass(double n) const { return log_c_ - beta_ * std::log(n); }
  // log P(X > m) for real m >= 0, agreeing with the law at integer m.
  double log_sf_index(double m) const {
    if (m < 0.0) return 0.0;
    return std::min(0.0, log_c_ + log_hurwitz_zeta(beta_, m + 1.0));
  }
  double log_sf(double x) const override {
    if (x < 1.0) return 0.0;
    return log_sf_index(std::floor(x));
  }
  double log_pdf(double) const override { return kLogZero; }
  double continuous_mass() const override { return 0.0; }
  double log_sf_continuous(double) const override { return kLogZero; }
  double support_lo() const override { return 1.0; }
  double support_hi() const override { return kInf; }
  bool has_infinite_atoms() const override { return true; }
  std::vector<Atom> atoms(double mass_floor, double loc_ceiling) const override {
    if (!(mass_floor > 0.0) && !std::isfinite(loc_ceiling)) {
      throw std::invalid_argument("lattice_power atoms: need mass_floor > 0 or a finite loc_ceiling");
    }
    std::vector<Atom> out;
    const double log_floor = mass_floor > 0.0 ? std::log(mass_floor) : kLogZero;
    for (double n = 1.0; n <= loc_ceiling; n += 1.0) {
      const double lm = log_mass(n);
      if (lm < log_floor) break;
      out.push_back({n, std::exp(lm)});
    }
    return out;
  }
  std::optional<LatticeView> lattice() const override {
    LatticeView view;
    view.span = 1.0;
    view.log_mass = [this](double n) { return log_mass(n); };
    view.log_sf_index = [this](double m) { return log_sf_index(m); };
    return view;
  }
  std::vector<double> kinks(double lo, double hi) const override {
    std::vector<double> out;
    for (double n = std::max(1.0, std::floor(lo) + 1.0); n < hi && out.size() < 4096; n += 1.0) {
      out.push_back(n);
    }
    return out;
  }
  double sample(Rng& rng) const override {
    const double lu = std::log(uniform_open01(rng));
    // smallest n with log_sf(n) < lu
    double hi = 1.0;
    while (log_sf_index(hi) >= lu) hi *= 2.0;
    double lo = std::floor(hi / 2.0);
    if (lo < 1.0) return 1.0;
    while (hi - lo > 1.0) {
      const double mid = std::floor(0.5 * (lo + hi));
      if (log_sf_index(mid) >= lu) lo = mid; else hi = mid;
    }
    return hi;
  }
  json to_json() const override { return {{"family", "lattice_power"}, {"params", {{"beta", beta_}}}}; }

 private:
  double beta_;
  double log_c_;
};

// Piecewise-linear tail with knots x_{n+1} = x_n^{1+1/alpha}:
//   [0, x_1):        1 + (x_1^{-alpha-1} - x_1^{-1}) x
//   [x_n, 2 x_n):    x_n^{-alpha} + (x_n^{-alpha-2} - x_n^{-alpha-1})(x - x_n)
//   [2 x_n, x_{n+1}): x_n^{-alpha-1}
// On the sloped piece, with e = 2 x_n - x, the tail is x_n^{-alpha-1}(e + 1 - e / x_n),
// which stays exact when e is small against a huge x_n.
class Example31G : public DistributionImpl {
 public:
  Example31G(double alpha, double x1) : alpha_(alpha), x1_(x1) {
    require(std::isfinite(alpha) && alpha > 0.0, "alpha", "must be positive and finite");
    require(std::isfinite(x1) && x1 > std::pow(4.0, alpha), "x1", "must exceed 4^alpha");
    log_knots_ = example31_log_knots(alpha, x1);
    for (double lk : log_knots_) knots_.push_back(std::exp(lk));
    knots_.front() = x1;
  }
  std::string family() const override { return "example31_G"; }

  // log P(X > x - t). Piece membership is decided on differences x - k
  // so that t survives even when x - t is not representable.
  double log_sf_at(double x, double t) const {
    const double p = x - t;
    if (x - 0.0 < t) return 0.0;  // p < 0
    if (x - x1_ < t) {  // p < x_1
      return std::log1p(-(p / x1_) * (1.0 - std::pow(x1_, -alpha_)));
    }
    // largest n with x_n <= p
    std::size_t lo = 0;
    std::size_t hi = knots_.size();
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      if (x - knots_[mid] >= t) lo = mid; else hi = mid;
    }
    const double xn = knots_[lo];
    const double lxn = log_knots_[lo];
    if (x - 2.0 * xn < t) {  // p < 2 x_n
      const double e = (2.0 * xn - x) + t;
      return -(alpha_ + 1.0) * lxn + std::log(e + 1.0 - e / xn);
    }
    return -(alpha_ + 1.0) * lxn;
  }
  double log_sf(double x) const override { return log_sf_at(x, 0.0); }
  double log_sf_shifted(double x, double t) const override { return log_sf_at(x, t); }
  double log_pdf(double x) const override {
    if (x < 0.0) return kLogZero;
    if (x < x1_) return std::log(1.0 / x1_ - std::pow(x1_, -alpha_ - 1.0));
    auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
    const std::size_t n = static_cast<std::size_t>(it - knots_.begin()) - 1;
    const double xn = knots_[n];
    if (x < 2.0 * xn) return -(alpha_ + 1.0) * log_knots_[n] + std::log1p(-1.0 / xn);
    return kLogZero;
  }
  double support_lo() const override { return 0.0; }
  double support_hi() const override { return kInf; }
  std::vector<double> kinks(double lo, double hi) const override {
    std::vector<double> out;
    for (double k : knots_) {
      if (k > lo && k < hi) out.push_back(k);
      if (2.0 * k > lo && 2.0 * k < hi) out.push_back(2.0 * k);
    }
    return out;
  }
  double sample(Rng& rng) const override {
    const double u = uniform_open01(rng);
    const double first_level = std::pow(x1_, -alpha_);
    if (u > first_level) return x1_ * (1.0 - u) / (1.0 - first_level);
    const double lu = std::log(u);
    for (std::size_t n = 0; n < knots_.size(); ++n) {
      const double lxn = log_knots_[n];
      if (lu > -(alpha_ + 1.0) * lxn) {
        const double xn = knots_[n];
        const double e = (std::exp(lu + (alpha_ + 1.0) * lxn) - 1.0) / (1.0 - 1.0 / xn);
        return 2.0 * xn - e;
      }
    }
    return 2.0 * knots_.back();
  }
  json to_json() const override {
    return {{"family", "example31_G"}, {"params", {{"alpha", alpha_}, {"x1", x1_}}}};
  }

 private:
  double alpha_;
  double x1_;
  std::vector<double> log_knots_;
  std::vector<double> knots_;
};

class Scaled : public DistributionImpl {
 public:
  Scaled(Distribution base, double c) : base_(std::move(base)), c_(c) {
    require(std::isfinite(c) && c > 0.0, "c", "must be positive and finite");
  }
  std::string family() const override { return "scale"; }
  double log_sf(double x) const override { return base_.log_sf(x / c_); }
  double log_cdf(double x) const override { return base_.log_cdf(x / c_); }
  double log_sf_shifted(double x, double t) const override { return base_.log_sf_shifted(x / c_, t / c_); }
  double log_pdf(double x) const override { return base_.log_pdf(x / c_) - std::log(c_); }
  double continuous_mass() const override { return base_.continuous_mass(); }
  double log_sf_continuous(double x) const override { return base_.log_sf_continuous(x / c_); }
  double support_lo() const override { return c_ * base_.support_lo(); }
  double support_hi() const override { return c_ * base_.support_hi(); }
  double mass_at_zero() const override { return base_.mass_at_zero(); }
  std::vector<Atom> atoms(double mass_floor, double loc_ceiling) const override {
    auto out = base_.atoms(mass_floor, loc_ceiling / c_);
    for (Atom& a : out) a.location *= c_;
    return out;
  }
  bool has_infinite_atoms() const override { return base_.has_infinite_atoms(); }
  std::optional<LatticeView> lattice() const override {
    auto view = base_.lattice();
    if (view) view->span *= c_;
    return view;
  }
  std::vector<double> kinks(double lo, double hi) const override {
    auto out = base_.kinks(lo / c_, hi / c_);
    for (double& k : out) k *= c_;
    return out;
  }
  double sample(Rng& rng) const override { return c_ * base_.sample(rng); }
  json to_json() const override {
    return {{"family", "scale"}, {"params", {{"c", c_}}}, {"base", base_.to_json()}};
  }

 private:
  Distribution base_;
  double c_;
};

// Law of Z 1(Z >= 0); the mass P(Z <= 0) sits in an explicit atom at 0.
class PositivePart : public DistributionImpl {
 public:
  explicit PositivePart(Distribution base) : base_(std::move(base)) {}
  std::string family() const override { return "positive_part"; }
  double log_sf(double x) const override { return x < 0.0 ? 0.0 : base_.log_sf(x); }
  double log_cdf(double x) const override { return x < 0.0 ? kLogZero : base_.log_cdf(x); }
  double log_sf_shifted(double x, double t) const override {
    return x - t < 0.0 ? 0.0 : base_.log_sf_shifted(x, t);
  }
  double log_pdf(double x) const override { return x <= 0.0 ? kLogZero : base_.log_pdf(x); }
  double continuous_mass() const override { return std::exp(base_.log_sf_continuous(0.0)); }
  double log_sf_continuous(double x) const override { return base_.log_sf_continuous(std::max(x, 0.0)); }
  double support_lo() const override { return mass_at_zero() > 0.0 ? 0.0 : std::max(0.0, base_.support_lo()); }
  double support_hi() const override { return std::max(0.0, base_.support_hi()); }
  double mass_at_zero() const override { return std::exp(base_.log_cdf(0.0)); }
  std::vector<Atom> atoms(double mass_floor, double loc_ceiling) const override {
    return base_.atoms(mass_floor, loc_ceiling);
  }
  bool has_infinite_atoms() const override { return base_.has_infinite_atoms(); }
  std::optional<LatticeView> lattice() const override {
    return base_.support_lo() >= 0.0 ? base_.lattice() : std::nullopt;
  }
  std::vector<double> kinks(double lo, double hi) const override { return base_.kinks(std::max(lo, 0.0), hi); }
  double sample(Rng& rng) const override { return std::max(0.0, base_.sample(rng)); }
  json to_json() const override { return {{"family", "positive_part"}, {"base", base_.to_json()}}; }

 private:
  Distribution base_;
};

// Law of Z + shift.
class Shifted : public DistributionImpl {
 public:
  Shifted(Distribution base, double shift) : base_(std::move(base)), shift_(shift) {
    require(std::isfinite(shift), "shift", "must be finite");
  }
  std::string family() const override { return "shifted"; }
  double log_sf(double x) const override { return base_.log_sf(x - shift_); }
  double log_cdf(double x) const override { return base_.log_cdf(x - shift_); }
  double log_sf_shifted(double x, double t) const override { return base_.log_sf_shifted(x - shift_, t); }
  double log_pdf(double x) const override { return base_.log_pdf(x - shift_); }
  double continuous_mass() const override { return base_.continuous_mass(); }
  double log_sf_continuous(double x) const override { return base_.log_sf_continuous(x - shift_); }
  double support_lo() const override { return base_.support_lo() + shift_; }
  double support_hi() const override { return base_.support_hi() + shift_; }
  double mass_at_zero() const override {
    if (shift_ == 0.0) return base_.mass_at_zero();
    if (base_.has_infinite_atoms()) return 0.0;
    for (const Atom& a : base_.atoms(0.0, kInf)) {
      if (a.location + shift_ == 0.0) return a.mass;
    }
    return 0.0;
  }
  std::vector<Atom> atoms(double mass_floor, double loc_ceiling) const override {
    std::vector<Atom> out;
    if (base_.mass_at_zero() > 0.0 && shift_ > 0.0 && shift_ <= loc_ceiling &&
        base_.mass_at_zero() >= mass_floor) {
      out.push_back({shift_, base_.mass_at_zero()});
    }
    for (Atom a : base_.atoms(mass_floor, loc_ceiling - shift_)) {
      a.location += shift_;
      if (a.location > 0.0) out.push_back(a);
    }
    return out;
  }
  bool has_infinite_atoms() const override { return base_.has_infinite_atoms(); }
  std::vector<double> kinks(double lo, double hi) const override {
    auto out = base_.kinks(lo - shift_, hi - shift_);
    for (double& k : out) k += shift_;
    return out;
  }
  double sample(Rng& rng) const override { return base_.sample(rng) + shift_; }
  json to_json() const override {
    return {{"family", "shifted"}, {"params", {{"shift", shift_}}}, {"base", base_.to_json()}};
  }

 private:
  Distribution base_;
  double shift_;
};

}  // namespace

std::vector<double> example31_log_knots(double alpha, double x1) {
  require(std::isfinite(alpha) && alpha > 0.0, "alpha", "must be positive and finite");
  require(std::isfinite(x1) && x1 > std::pow(4.0, alpha), "x1", "must exceed 4^alpha");
  std::vector<double> out;
  for (double lk = std::log(x1); lk <= 600.0; lk *= 1.0 + 1.0 / alpha) out.push_back(lk);
  return out;
}

Distribution regvar(double beta, double x_min) { return Distribution(std::make_shared<RegVar>(beta, x_min)); }
Distribution weibull_type(double alpha) { return Distribution(std::make_shared<WeibullType>(alpha)); }
Distribution exponential(double rate) { return Distribution(std::make_shared<Exponential>(rate)); }
Distribution uniform(double lo, double hi) { return Distribution(std::make_shared<Uniform>(lo, hi)); }
Distribution degenerate(double c) {
  require(std::isfinite(c), "c", "must be finite");
  return Distribution(std::make_shared<Discrete>(std::vector<Atom>{{c, 1.0}}, true));
}
Distribution lattice_power(double beta) { return Distribution(std::make_shared<LatticePower>(beta)); }
Distribution discrete(std::vector<Atom> atoms) {
  return Distribution(std::make_shared<Discrete>(std::move(atoms), false));
}
Distribution example31_g(double alpha, double x1) { return Distribution(std::make_shared<Example31G>(alpha, x1)); }
Distribution example31_f(double alpha) { return Distribution(std::make_shared<Example31F>(alpha)); }
Distribution scale(const Distribution& base, double c) { return Distribution(std::make_shared<Scaled>(base, c)); }
Distribution positive_part(const Distribution& base) { return Distribution(std::make_shared<PositivePart>(base)); }
Distribution shifted(const Distribution& base, double shift) {
  return Distribution(std::make_shared<Shifted>(base, shift));
}

}  // namespace htail
