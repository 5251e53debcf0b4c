#include "grid_backend.hpp"

#include <cmath>
#include <mutex>
#include <numbers>

#include <fftw3.h>

#include "nsalpha/errors.hpp"

namespace nsalpha::detail {

namespace {

// FFTW's planner is not re-entrant.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwRealDeleter {
  void operator()(double* p) const { fftw_free(p); }
};
struct FftwComplexDeleter {
  void operator()(fftw_complex* p) const { fftw_free(p); }
};

class TorusBackend final : public GridBackend {
 public:
  explicit TorusBackend(const EigenBasis& basis)
      : g_(basis.grid_resolution()),
        gc_(g_ / 2 + 1),
        real_(fftw_alloc_real(static_cast<std::size_t>(g_) * g_)),
        spec_(fftw_alloc_complex(static_cast<std::size_t>(g_) * gc_)) {
    {
      std::lock_guard lock(fftw_planner_mutex());
      to_grid_ = fftw_plan_dft_c2r_2d(g_, g_, spec_.get(), real_.get(), FFTW_ESTIMATE);
      to_spec_ = fftw_plan_dft_r2c_2d(g_, g_, real_.get(), spec_.get(), FFTW_ESTIMATE);
    }
    if (to_grid_ == nullptr || to_spec_ == nullptr) {
      throw NumericalError("FFTW planning failed");
    }
    const double scale = 1.0 / (2.0 * std::numbers::sqrt2 * std::numbers::pi);
    for (const auto& m : basis.torus_modes()) {
      Mode d;
      d.kx = m.kx;
      d.ky = m.ky;
      const double norm = std::sqrt(static_cast<double>(m.k_squared()));
      d.ex = -m.ky / norm;
      d.ey = m.kx / norm;
      d.knorm = norm;
      d.is_cos = m.parity == Parity::Cos;
      // Complex amplitude at +k of the velocity magnitude: c * scale * (1 or -i).
      d.phase = m.parity == Parity::Cos ? std::complex<double>(scale, 0.0)
                                        : std::complex<double>(0.0, -scale);
      if (m.ky > 0) {
        d.store.push_back({slot(m.kx, m.ky), false});
      } else if (m.ky < 0) {
        d.store.push_back({slot(-m.kx, -m.ky), true});
      } else {
        d.store.push_back({slot(m.kx, 0), false});
        d.store.push_back({slot(-m.kx, 0), true});
      }
      modes_.push_back(d);
    }
  }

  ~TorusBackend() override {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(to_grid_);
    fftw_destroy_plan(to_spec_);
  }

  TorusBackend(const TorusBackend&) = delete;
  TorusBackend& operator=(const TorusBackend&) = delete;

  std::size_t points() const override { return static_cast<std::size_t>(g_) * g_; }
  int points_per_side() const override { return g_; }
  double spacing() const override { return 2.0 * std::numbers::pi / g_; }

  void velocity(const Eigen::VectorXd& c, VectorGrid& out) override {
    out.resize(points());
    synth(c, [](const Mode& m) { return std::complex<double>(m.ex, 0.0); }, out.x);
    synth(c, [](const Mode& m) { return std::complex<double>(m.ey, 0.0); }, out.y);
  }

  void gradient(const Eigen::VectorXd& c, TensorGrid& out) override {
    out.resize(points());
    synth(c, [](const Mode& m) { return std::complex<double>(0.0, m.kx * m.ex); }, out.xx);
    synth(c, [](const Mode& m) { return std::complex<double>(0.0, m.ky * m.ex); }, out.xy);
    synth(c, [](const Mode& m) { return std::complex<double>(0.0, m.kx * m.ey); }, out.yx);
    synth(c, [](const Mode& m) { return std::complex<double>(0.0, m.ky * m.ey); }, out.yy);
  }

  void vorticity(const Eigen::VectorXd& c, std::vector<double>& out) override {
    out.assign(points(), 0.0);
    // i (kx e_y - ky e_x) = i |k|
    synth(c, [](const Mode& m) { return std::complex<double>(0.0, m.knorm); }, out);
  }

  void divergence(const Eigen::VectorXd& c, std::vector<double>& out) override {
    out.assign(points(), 0.0);
    synth(c, [](const Mode& m) { return std::complex<double>(0.0, m.kx * m.ex + m.ky * m.ey); },
          out);
  }

  void project(const VectorGrid& g, Eigen::VectorXd& out) override {
    const std::size_t n = points();
    const std::size_t nc = static_cast<std::size_t>(g_) * gc_;
    std::vector<std::complex<double>> gx(nc), gy(nc);
    forward(g.x, gx);
    forward(g.y, gy);
    // <g, w> = (2 pi)^2 / (sqrt(2) pi) * e . {Re, -Im} ghat(k) / G^2
    const double factor = 2.0 * std::numbers::sqrt2 * std::numbers::pi / static_cast<double>(n);
    out.resize(static_cast<Eigen::Index>(modes_.size()));
    for (std::size_t j = 0; j < modes_.size(); ++j) {
      const Mode& m = modes_[j];
      const auto [s, conj] = m.store.front();
      std::complex<double> zx = gx[s], zy = gy[s];
      if (conj) {
        zx = std::conj(zx);
        zy = std::conj(zy);
      }
      const std::complex<double> z = m.ex * zx + m.ey * zy;
      out[static_cast<Eigen::Index>(j)] = factor * (m.is_cos ? z.real() : -z.imag());
    }
  }

  double inner(const VectorGrid& a, const VectorGrid& b) const override {
    double s = 0.0;
    for (std::size_t i = 0; i < a.x.size(); ++i) s += a.x[i] * b.x[i] + a.y[i] * b.y[i];
    const double h = 2.0 * std::numbers::pi / g_;
    return s * h * h;
  }

 private:
  struct Mode {
    int kx = 0, ky = 0;
    double ex = 0, ey = 0, knorm = 0;
    bool is_cos = true;
    std::complex<double> phase;
    std::vector<std::pair<std::size_t, bool>> store;  // half-spectrum slot, conjugate?
  };

  std::size_t slot(int kx, int ky) const {
    const int mx = ((kx % g_) + g_) % g_;
    return static_cast<std::size_t>(mx) * gc_ + static_cast<std::size_t>(ky);
  }

  // Fills the half spectrum with sum_j c_j * factor(mode_j) * e^{i k.x}-amplitudes
  // (Hermitian completion implied) and transforms to the grid.
  template <class Factor>
  void synth(const Eigen::VectorXd& c, Factor factor, std::vector<double>& out) {
    auto* spec = reinterpret_cast<std::complex<double>*>(spec_.get());
    std::fill(spec, spec + static_cast<std::size_t>(g_) * gc_, std::complex<double>(0.0, 0.0));
    for (std::size_t j = 0; j < modes_.size(); ++j) {
      const double cj = c[static_cast<Eigen::Index>(j)];
      if (cj == 0.0) continue;
      const Mode& m = modes_[j];
      const std::complex<double> value = cj * m.phase * factor(m);
      for (const auto& [s, conj] : m.store) spec[s] += conj ? std::conj(value) : value;
    }
    fftw_execute_dft_c2r(to_grid_, spec_.get(), real_.get());
    std::copy(real_.get(), real_.get() + points(), out.begin());
  }

  void forward(const std::vector<double>& in, std::vector<std::complex<double>>& out) {
    std::copy(in.begin(), in.end(), real_.get());
    fftw_execute_dft_r2c(to_spec_, real_.get(), spec_.get());
    const auto* spec = reinterpret_cast<const std::complex<double>*>(spec_.get());
    std::copy(spec, spec + out.size(), out.begin());
  }

  int g_;
  int gc_;
  std::unique_ptr<double, FftwRealDeleter> real_;
  std::unique_ptr<fftw_complex, FftwComplexDeleter> spec_;
  fftw_plan to_grid_ = nullptr;
  fftw_plan to_spec_ = nullptr;
  std::vector<Mode> modes_;
};

class SquareBackend final : public GridBackend {
 public:
  explicit SquareBackend(const EigenBasis& basis)
      : modes_(basis.square_modes()), derivs_(basis.square_derivatives()) {}

  std::size_t points() const override { return modes_.nodes(); }
  int points_per_side() const override { return modes_.mesh + 1; }
  double spacing() const override { return modes_.spacing(); }

  void velocity(const Eigen::VectorXd& c, VectorGrid& out) override {
    out.resize(points());
    assign(modes_.wx * c, out.x);
    assign(modes_.wy * c, out.y);
  }

  void gradient(const Eigen::VectorXd& c, TensorGrid& out) override {
    out.resize(points());
    assign(derivs_.dx_wx * c, out.xx);
    assign(derivs_.dy_wx * c, out.xy);
    assign(derivs_.dx_wy * c, out.yx);
    assign(derivs_.dy_wy * c, out.yy);
  }

  void vorticity(const Eigen::VectorXd& c, std::vector<double>& out) override {
    out.assign(points(), 0.0);
    assign(derivs_.vorticity * c, out);
  }

  void divergence(const Eigen::VectorXd& c, std::vector<double>& out) override {
    out.assign(points(), 0.0);
    assign(derivs_.dx_wx * c + derivs_.dy_wy * c, out);
  }

  void project(const VectorGrid& g, Eigen::VectorXd& out) override {
    const auto n = static_cast<Eigen::Index>(points());
    const Eigen::Map<const Eigen::VectorXd> gx(g.x.data(), n), gy(g.y.data(), n);
    out = modes_.wx.transpose() * derivs_.weights.cwiseProduct(gx) +
          modes_.wy.transpose() * derivs_.weights.cwiseProduct(gy);
  }

  double inner(const VectorGrid& a, const VectorGrid& b) const override {
    double s = 0.0;
    for (std::size_t i = 0; i < a.x.size(); ++i) {
      s += derivs_.weights[static_cast<Eigen::Index>(i)] * (a.x[i] * b.x[i] + a.y[i] * b.y[i]);
    }
    return s;
  }

 private:
  static void assign(const Eigen::VectorXd& v, std::vector<double>& out) {
    out.assign(v.data(), v.data() + v.size());
  }

  const SquareModes& modes_;
  const SquareDerivatives& derivs_;
};

}  // namespace

std::unique_ptr<GridBackend> make_grid_backend(const EigenBasis& basis) {
  if (basis.kind() == DomainKind::Torus) return std::make_unique<TorusBackend>(basis);
  return std::make_unique<SquareBackend>(basis);
}

}  // namespace nsalpha::detail
