#include <fftw3.h>

#include <map>
#include <mutex>

#include "conewave/grid.hpp"

namespace conewave {

namespace {

std::mutex plan_mutex;

fftw_plan cached_plan(int n, const std::array<int, 3>& dims, int sign) {
  using Key = std::tuple<int, int, int, int, int>;
  static std::map<Key, fftw_plan> cache;
  Key key{n, dims[0], n > 1 ? dims[1] : 1, n > 2 ? dims[2] : 1, sign};
  std::lock_guard<std::mutex> lock(plan_mutex);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  std::size_t total = 1;
  for (int a = 0; a < n; ++a) total *= static_cast<std::size_t>(dims[a]);
  std::vector<cplx> scratch(total);
  auto* ptr = reinterpret_cast<fftw_complex*>(scratch.data());
  fftw_plan plan = fftw_plan_dft(n, dims.data(), ptr, ptr, sign,
                                 FFTW_ESTIMATE | FFTW_UNALIGNED);
  require(plan != nullptr, ErrorCode::numerical_failure, "fftw plan failed");
  cache.emplace(key, plan);
  return plan;
}

void run_dft(const Grid& g, std::vector<cplx>& data, int sign) {
  fftw_plan plan = cached_plan(g.n, g.dims, sign);
  auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan, ptr, ptr);
}

// per-axis tables: ramp[a][i] = exp(sign * i * base_a * step_a * i_unit)
std::array<std::vector<cplx>, 3> phase_tables(const Grid& g,
                                              const Vec& scale_lo,
                                              const Vec& scale_step,
                                              double sign) {
  std::array<std::vector<cplx>, 3> t;
  for (int a = 0; a < g.n; ++a) {
    t[a].resize(g.dims[a]);
    for (int i = 0; i < g.dims[a]; ++i) {
      double phase = sign * (scale_lo[a] + i * scale_step[a]);
      t[a][i] = cplx(std::cos(phase), std::sin(phase));
    }
  }
  return t;
}

void apply_phases(const Grid& g, std::vector<cplx>& data,
                  const std::array<std::vector<cplx>, 3>& t) {
  for_each_index(g, [&](std::size_t f, const std::array<int, 3>& idx) {
    cplx p = t[0][idx[0]];
    if (g.n > 1) p *= t[1][idx[1]];
    if (g.n > 2) p *= t[2][idx[2]];
    data[f] *= p;
  });
}

}  // namespace

std::vector<cplx> to_freq(const Domain& d, const std::vector<cplx>& f) {
  require(f.size() == d.spat.count(), ErrorCode::bad_input,
          "field size mismatch");
  std::vector<cplx> out = f;
  // pre-ramp exp(-i m dx w0) then DFT then post-ramp exp(-i <x0, w_k>)
  Vec zero = vec0();
  Vec mstep = vec0();
  for (int a = 0; a < d.spat.n; ++a)
    mstep[a] = d.spat.spacing[a] * d.freq.lo[a];
  apply_phases(d.spat, out, phase_tables(d.spat, zero, mstep, -1.0));
  run_dft(d.spat, out, FFTW_FORWARD);
  Vec klo = vec0(), kstep = vec0();
  for (int a = 0; a < d.freq.n; ++a) {
    klo[a] = d.spat.lo[a] * d.freq.lo[a];
    kstep[a] = d.spat.lo[a] * d.freq.spacing[a];
  }
  apply_phases(d.freq, out, phase_tables(d.freq, klo, kstep, -1.0));
  double vol = d.spat.cell_volume();
  for (auto& z : out) z *= vol;
  return out;
}

std::vector<cplx> to_spat(const Domain& d, const std::vector<cplx>& fhat) {
  require(fhat.size() == d.freq.count(), ErrorCode::bad_input,
          "field size mismatch");
  std::vector<cplx> out = fhat;
  Vec klo = vec0(), kstep = vec0();
  for (int a = 0; a < d.freq.n; ++a) {
    klo[a] = d.spat.lo[a] * d.freq.lo[a];
    kstep[a] = d.spat.lo[a] * d.freq.spacing[a];
  }
  apply_phases(d.freq, out, phase_tables(d.freq, klo, kstep, 1.0));
  run_dft(d.freq, out, FFTW_BACKWARD);
  Vec zero = vec0();
  Vec mstep = vec0();
  for (int a = 0; a < d.spat.n; ++a)
    mstep[a] = d.spat.spacing[a] * d.freq.lo[a];
  apply_phases(d.spat, out, phase_tables(d.spat, zero, mstep, 1.0));
  constexpr double two_pi = 6.283185307179586476925286766559;
  double scale = 1.0;
  for (int a = 0; a < d.freq.n; ++a)
    scale *= d.freq.spacing[a] / two_pi;
  for (auto& z : out) z *= scale;
  return out;
}

}  // namespace conewave
