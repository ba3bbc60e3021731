// Command-line driver. Every run reads one JSON config, prints one JSON
// report on stdout, and exits 0 (ok), 1 (computational failure), or
// 2 (config error). All numbers in reports are serialized through
// format_double so identical config + seed gives byte-identical output
// regardless of the worker count.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "conewave/frames.hpp"
#include "conewave/io.hpp"
#include "conewave/oracle.hpp"
#include "conewave/selftest.hpp"
#include "json.hpp"

namespace cw = conewave;
using Json = nlohmann::ordered_json;

namespace {

Json jnum(double v) { return Json(cw::format_double(v)); }

Json jvec(const cw::Vec& v, int n) {
  Json a = Json::array();
  for (int i = 0; i < n; ++i) a.push_back(jnum(v[i]));
  return a;
}

const Json& need(const Json& cfg, const std::string& key) {
  auto it = cfg.find(key);
  cw::require(it != cfg.end(), cw::ErrorCode::bad_config,
              "config is missing \"" + key + "\"");
  return *it;
}

double num_at(const Json& j, const std::string& key) {
  const Json& v = need(j, key);
  if (v.is_string()) return std::stod(v.get<std::string>());
  cw::require(v.is_number(), cw::ErrorCode::bad_config,
              "\"" + key + "\" must be a number");
  return v.get<double>();
}

double num_or(const Json& j, const std::string& key, double fallback) {
  return j.contains(key) ? num_at(j, key) : fallback;
}

cw::Vec vec_at(const Json& j, const std::string& key) {
  const Json& a = need(j, key);
  cw::require(a.is_array() && a.size() >= 1 && a.size() <= 3,
              cw::ErrorCode::bad_config,
              "\"" + key + "\" must be an array of 1..3 numbers");
  cw::Vec v = cw::vec0();
  for (std::size_t i = 0; i < a.size(); ++i) v[i] = a[i].get<double>();
  return v;
}

std::array<double, 3> spacing_at(const Json& j, const std::string& key,
                                 std::array<double, 3> fallback) {
  if (!j.contains(key)) return fallback;
  const Json& a = j[key];
  cw::require(a.is_array() && a.size() == 3, cw::ErrorCode::bad_config,
              "\"" + key + "\" must be an array of 3 numbers");
  return {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
}

struct Workspace {
  cw::ConeModel cone = cw::ConeModel::orthant(1);
  cw::Domain dom;
  std::shared_ptr<const cw::WaveletSystem> sys;
};

cw::ConeModel cone_from(const Json& cfg) {
  const Json& c = need(cfg, "cone");
  cw::require(c.is_string(), cw::ErrorCode::bad_config,
              "\"cone\" must be a string");
  return cw::ConeModel::parse(c.get<std::string>());
}

cw::Domain domain_from(const cw::ConeModel& cone, const Json& cfg) {
  const Json& g = need(cfg, "grid");
  cw::Vec lo = vec_at(g, "lo"), hi = vec_at(g, "hi");
  const Json& nn = need(g, "n");
  cw::require(nn.is_array() && static_cast<int>(nn.size()) == cone.dim(),
              cw::ErrorCode::bad_config,
              "\"grid.n\" must list one size per cone dimension");
  std::array<int, 3> dims{1, 1, 1};
  for (std::size_t i = 0; i < nn.size(); ++i) dims[i] = nn[i].get<int>();
  return cw::make_domain(cone.dim(), lo, hi, dims);
}

Workspace workspace_from(const Json& cfg) {
  Workspace w;
  w.cone = cone_from(cfg);
  w.dom = domain_from(w.cone, cfg);
  const Json wv = cfg.contains("wavelet") ? cfg["wavelet"] : Json::object();
  double sharp = num_or(wv, "sharpness", 4.0);
  std::array<double, 3> hsp = spacing_at(wv, "h_spacing", {0.2, 0.3, 0.2});
  w.sys = std::make_shared<cw::WaveletSystem>(
      cw::make_wavelet(w.cone, w.dom, sharp, hsp));
  return w;
}

// "zero": true gives the all-zero field (empty support box).
cw::SpectralField signal_from(const Workspace& w, const Json& cfg) {
  const Json& s = need(cfg, "signal");
  if (s.contains("zero") && s["zero"].get<bool>()) {
    cw::SpectralField f;
    f.freq = w.dom.freq;
    f.values.assign(w.dom.freq.count(), cw::cplx{0.0, 0.0});
    f.supp_lo = cw::vec0();
    f.supp_hi = cw::vec0();
    for (int a = 0; a < w.cone.dim(); ++a) f.supp_hi[a] = -1.0;
    return f;
  }
  cw::TestSignalSpec spec;
  spec.seed = static_cast<std::uint64_t>(num_or(s, "seed", 1.0));
  spec.bumps = static_cast<int>(num_or(s, "bumps", 3.0));
  spec.center = s.contains("center") ? vec_at(s, "center") : w.cone.identity();
  spec.radius = num_or(s, "radius", 1.0);
  spec.bump_radius = num_or(s, "bump_radius", 0.35);
  spec.shift_frac = num_or(s, "shift_frac", 0.25);
  return cw::make_test_signal(w.cone, w.dom, spec);
}

cw::HSampling sampling_from(const Workspace& w, const Json& cfg,
                            double fallback_radius) {
  const Json s = cfg.contains("sampling") ? cfg["sampling"] : Json::object();
  double radius = num_or(s, "radius", fallback_radius);
  std::array<double, 3> sp = spacing_at(s, "spacing", {0.2, 0.3, 0.2});
  int level = static_cast<int>(num_or(s, "level", 0.0));
  return cw::make_h_sampling(w.cone, radius, sp, level);
}

double rel_l2(const std::vector<cw::cplx>& got,
              const std::vector<cw::cplx>& want) {
  std::vector<double> dn(want.size()), nn(want.size());
  for (std::size_t i = 0; i < want.size(); ++i) {
    dn[i] = std::norm(want[i]);
    nn[i] = std::norm(got[i] - want[i]);
  }
  double den = cw::pairwise_sum(dn);
  if (den == 0.0) return 0.0;
  return std::sqrt(cw::pairwise_sum(nn) / den);
}

// ---- subcommand bodies ----------------------------------------------------

Json run_cone_info(const Json& cfg) {
  cw::ConeModel cone = cone_from(cfg);
  Json out;
  out["cone"] = need(cfg, "cone").get<std::string>();
  out["kind"] = cone.kind() == cw::ConeKind::orthant ? "orthant" : "spd";
  out["rank"] = cone.rank();
  out["dim"] = cone.dim();
  out["identity"] = jvec(cone.identity(), cone.dim());
  return out;
}

Json run_wavelet_build(const Json& cfg, const std::string& outdir) {
  Workspace w = workspace_from(cfg);
  Json out;
  out["cone"] = need(cfg, "cone").get<std::string>();
  out["admissibility"] = jnum(w.sys->quad.value);
  out["admissibility_levels"] = w.sys->quad.levels;
  out["plateau_admissibility"] = jnum(w.sys->plateau_admissibility);
  out["analyzing_scale"] = jnum(w.sys->analyzing_scale);
  out["supp_lo"] = jvec(w.sys->supp_lo, w.cone.dim());
  out["supp_hi"] = jvec(w.sys->supp_hi, w.cone.dim());
  if (!outdir.empty()) {
    cw::SpectralField psi;
    psi.freq = w.dom.freq;
    psi.values = w.sys->psi_hat;
    psi.supp_lo = w.sys->supp_lo;
    psi.supp_hi = w.sys->supp_hi;
    std::string path = outdir + "/wavelet.bin";
    cw::save_spectral(path, w.cone, w.dom, psi);
    out["artifact"] = path;
  }
  return out;
}

Json run_transform(const Json& cfg, const std::string& outdir) {
  Workspace w = workspace_from(cfg);
  cw::SpectralField f = signal_from(w, cfg);
  cw::HSampling hs = sampling_from(w, cfg, w.sys->outer + 2.0);
  cw::CoefficientField F = cw::analyze(w.sys, f, w.dom, hs, 2, true);
  Json out;
  out["cone"] = need(cfg, "cone").get<std::string>();
  out["scales"] = F.slices.size();
  out["sampling_nodes"] = hs.size();
  out["mixed_norm_22"] = jnum(cw::mixed_norm(F, 2.0, 2.0, 0.0));
  if (!outdir.empty()) {
    std::string path = outdir + "/voices.bin";
    cw::save_voices(path, F);
    out["artifact"] = path;
  }
  return out;
}

Json run_besov(const Json& cfg) {
  Workspace w = workspace_from(cfg);
  cw::SpectralField f = signal_from(w, cfg);
  const Json bj = cfg.contains("besov") ? cfg["besov"] : Json::object();
  cw::BesovParams bp;
  bp.p = num_or(bj, "p", 2.0);
  bp.q = num_or(bj, "q", 2.0);
  bp.s = num_or(bj, "s", 0.0);

  const Json lj = cfg.contains("lattice") ? cfg["lattice"] : Json::object();
  double delta = num_or(lj, "delta", 0.6);
  double R = num_or(lj, "R", 2.2);
  double extent = num_or(lj, "extent", 3.0);
  double margin = num_or(lj, "margin", 1.2);
  cw::Lattice lat = cw::make_lattice(w.cone, delta, R, extent, margin);
  cw::Partition part = cw::make_partition(w.cone, lat, 4.0);
  std::vector<double> dn = cw::discrete_scale_norms(part, f, w.dom, bp.p);
  double besov_d = cw::norm_discrete(w.cone, part, dn, bp);

  cw::HSampling hs = sampling_from(w, cfg, extent);
  std::vector<double> cn =
      cw::continuous_scale_norms(*w.sys, f, w.dom, hs, bp.p);
  double besov_c = cw::norm_continuous(w.cone, hs, cn, bp);

  Json out;
  out["cone"] = need(cfg, "cone").get<std::string>();
  out["p"] = jnum(bp.p);
  out["q"] = jnum(bp.q);
  out["s"] = jnum(bp.s);
  out["s_prime"] = jnum(bp.s_prime(w.cone));
  out["lattice_nodes"] = lat.size();
  out["norm_discrete"] = jnum(besov_d);
  out["norm_continuous"] = jnum(besov_c);
  if (besov_c > 0.0)
    out["ratio"] = jnum(besov_d / besov_c);
  else
    out["ratio"] = nullptr;
  return out;
}

Json run_lattice(const Json& cfg, const std::string& outdir) {
  cw::ConeModel cone = cone_from(cfg);
  const Json lj = cfg.contains("lattice") ? cfg["lattice"] : Json::object();
  double delta = num_or(lj, "delta", 0.6);
  double R = num_or(lj, "R", 2.2);
  double extent = num_or(lj, "extent", 3.0);
  double margin = num_or(lj, "margin", 1.2);
  cw::Lattice lat = cw::make_lattice(cone, delta, R, extent, margin);
  cw::LatticeCheck chk =
      cw::check_lattice(cone, lat, static_cast<int>(num_or(lj, "probe", 1.0)));
  Json out;
  out["cone"] = need(cfg, "cone").get<std::string>();
  out["delta"] = jnum(delta);
  out["R"] = jnum(R);
  out["extent"] = jnum(extent);
  out["nodes"] = lat.size();
  out["spacing"] = jnum(lat.spacing);
  out["min_separation"] = jnum(chk.min_separation);
  out["worst_gap"] = jnum(chk.worst_gap);
  out["separated"] = chk.separated;
  out["covering"] = chk.covering;
  if (!outdir.empty()) {
    std::string path = outdir + "/lattice.bin";
    cw::save_lattice(path, cone, lat);
    out["artifact"] = path;
  }
  return out;
}

Json run_frame_bounds(const Json& cfg) {
  Workspace w = workspace_from(cfg);
  const Json fj = cfg.contains("frame") ? cfg["frame"] : Json::object();
  double band = num_or(fj, "band_radius", 1.0);
  double beta = num_or(fj, "beta", 0.5);
  int count = static_cast<int>(num_or(fj, "signals", 5.0));
  std::uint64_t seed0 = static_cast<std::uint64_t>(num_or(fj, "seed0", 101.0));
  std::vector<double> epsilons;
  if (fj.contains("epsilons"))
    for (const auto& e : fj["epsilons"]) epsilons.push_back(e.get<double>());
  else
    epsilons = {1.0, 0.5};
  cw::BesovParams bp;
  bp.p = 2.0;
  bp.q = 2.0;
  bp.s = -1.0;
  double sprime = bp.s_prime(w.cone);
  cw::HSampling hs = sampling_from(w, cfg, w.sys->outer + band + 1.0);

  Json rungs = Json::array();
  for (double eps : epsilons) {
    cw::Wellspread ws = cw::make_wellspread(
        w.cone, *w.sys, w.dom, w.cone.identity(), band, eps, beta);
    double lo = 0.0, hi = 0.0;
    for (int k = 0; k < count; ++k) {
      cw::TestSignalSpec spec;
      spec.seed = seed0 + static_cast<std::uint64_t>(k);
      spec.center = w.cone.identity();
      spec.radius = 0.8 * band;
      spec.bump_radius = 0.3 * band;
      cw::SpectralField f = cw::make_test_signal(w.cone, w.dom, spec);
      std::vector<cw::cplx> coef = cw::sample_coefficients(*w.sys, f, ws);
      double sn = cw::sequence_norm(w.cone, ws, coef, bp.p, bp.q, sprime);
      cw::CoefficientField F = cw::analyze(w.sys, f, w.dom, hs);
      double cn = cw::mixed_norm(F, bp.p, bp.q, sprime);
      cw::require(cn > 0.0, cw::ErrorCode::numerical_failure,
                  "zero coorbit norm in the frame ensemble");
      double ratio = sn / cn;
      lo = k == 0 ? ratio : std::min(lo, ratio);
      hi = k == 0 ? ratio : std::max(hi, ratio);
    }
    Json r;
    r["epsilon"] = jnum(eps);
    r["atoms"] = ws.total;
    r["A1"] = jnum(lo);
    r["A2"] = jnum(hi);
    r["ratio"] = jnum(hi / lo);
    rungs.push_back(std::move(r));
  }
  Json out;
  out["cone"] = need(cfg, "cone").get<std::string>();
  out["band_radius"] = jnum(band);
  out["beta"] = jnum(beta);
  out["signals"] = count;
  out["rungs"] = std::move(rungs);
  return out;
}

Json run_reconstruct(const Json& cfg, int& exit_code) {
  Workspace w = workspace_from(cfg);
  cw::SpectralField f = signal_from(w, cfg);
  const Json rj = need(cfg, "reconstruct");
  std::string method = need(rj, "method").get<std::string>();
  double eps = num_at(rj, "epsilon");
  double beta = num_or(rj, "beta", 0.5);
  double band = num_or(rj, "band_radius", 1.0);
  cw::FrameOptions opt;
  opt.max_iter = static_cast<int>(num_or(rj, "max_iter", 100.0));
  opt.tol = num_or(rj, "tol", 1e-10);
  if (method == "t1-neumann")
    opt.method = cw::FrameMethod::neumann_t1;
  else if (method == "t2-neumann")
    opt.method = cw::FrameMethod::neumann_t2;
  else if (method == "frame-cg")
    opt.method = cw::FrameMethod::cg;
  else
    cw::fail(cw::ErrorCode::bad_config,
             "method must be t1-neumann, t2-neumann, or frame-cg");

  cw::Wellspread ws = cw::make_wellspread(w.cone, *w.sys, w.dom,
                                          w.cone.identity(), band, eps, beta);
  cw::ReconstructResult rec;
  if (opt.method == cw::FrameMethod::neumann_t2) {
    cw::HSampling hs = sampling_from(w, cfg, w.sys->outer + band + 2.45);
    cw::CoefficientField F = cw::analyze(w.sys, f, w.dom, hs);
    rec = cw::reconstruct(F, ws, opt);
  } else {
    std::vector<cw::cplx> coef = cw::sample_coefficients(*w.sys, f, ws);
    cw::HSampling quad = sampling_from(
        w, cfg, w.sys->outer + band + 5.0 * eps + 0.3);
    rec = cw::reconstruct(*w.sys, ws, quad, coef, opt);
  }

  Json out;
  out["method"] = method;
  out["epsilon"] = jnum(eps);
  out["beta"] = jnum(beta);
  out["status"] = rec.status;
  out["iterations"] = rec.iterations;
  Json res = Json::array();
  for (double r : rec.residuals) res.push_back(jnum(r));
  out["residuals"] = std::move(res);
  out["final_error"] = jnum(rel_l2(rec.fhat, f.values));
  if (rec.status != "converged") exit_code = 1;
  return out;
}

Json run_selftest_cmd(const Json& cfg, bool verbose, int& exit_code) {
  std::vector<std::string> only;
  if (cfg.contains("selftest") && cfg["selftest"].contains("only"))
    for (const auto& s : cfg["selftest"]["only"])
      only.push_back(s.get<std::string>());
  std::vector<cw::CheckResult> rs = cw::run_selftest(only, verbose);
  Json checks = Json::array();
  std::size_t passed = 0;
  for (const cw::CheckResult& r : rs) {
    Json c;
    c["name"] = r.name;
    c["passed"] = r.passed;
    c["detail"] = r.detail;
    checks.push_back(std::move(c));
    if (r.passed) ++passed;
  }
  Json out;
  out["checks"] = std::move(checks);
  out["passed"] = passed;
  out["total"] = rs.size();
  out["all_passed"] = passed == rs.size();
  if (passed != rs.size()) exit_code = 1;
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cone-adapted wavelet analysis on symmetric cones"};
  app.require_subcommand(1);
  std::string config_path, outdir;
  int threads = 0;
  bool verbose = false;
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--out", outdir, "directory for binary artifacts");
  app.add_option("--threads", threads, "worker threads (default: cores)");
  app.add_flag("--verbose", verbose, "progress to stderr");

  auto* sc_cone = app.add_subcommand("cone-info", "cone geometry summary");
  auto* sc_wave = app.add_subcommand("wavelet-build", "build the analyzing wavelet");
  auto* sc_tran = app.add_subcommand("transform", "voice transform of a test signal");
  auto* sc_besv = app.add_subcommand("besov", "discrete and continuous Besov norms");
  auto* sc_latt = app.add_subcommand("lattice", "build and certify a scale lattice");
  auto* sc_fram = app.add_subcommand("frame-bounds", "empirical frame ratio ladder");
  auto* sc_reco = app.add_subcommand("reconstruct", "iterative recovery from lattice data");
  auto* sc_self = app.add_subcommand("selftest", "run the verification suite");

  CLI11_PARSE(app, argc, argv);
  if (threads > 0) {
    // must precede the first parallel call; the pool size is read once
    setenv("CONEWAVE_THREADS", std::to_string(threads).c_str(), 1);
  }

  int exit_code = 0;
  Json out;
  try {
    Json cfg = Json::object();
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      cw::require(in.good(), cw::ErrorCode::bad_config,
                  "cannot open config file: " + config_path);
      try {
        cfg = Json::parse(in);
      } catch (const std::exception& e) {
        cw::fail(cw::ErrorCode::bad_config,
                 std::string("config is not valid JSON: ") + e.what());
      }
    }
    if (!outdir.empty()) std::filesystem::create_directories(outdir);

    if (sc_cone->parsed())
      out = run_cone_info(cfg);
    else if (sc_wave->parsed())
      out = run_wavelet_build(cfg, outdir);
    else if (sc_tran->parsed())
      out = run_transform(cfg, outdir);
    else if (sc_besv->parsed())
      out = run_besov(cfg);
    else if (sc_latt->parsed())
      out = run_lattice(cfg, outdir);
    else if (sc_fram->parsed())
      out = run_frame_bounds(cfg);
    else if (sc_reco->parsed())
      out = run_reconstruct(cfg, exit_code);
    else if (sc_self->parsed())
      out = run_selftest_cmd(cfg, verbose, exit_code);
  } catch (const cw::Error& e) {
    Json err;
    err["code"] = cw::error_code_name(e.code());
    err["error"] = e.what();
    std::cout << err.dump(2) << "\n";
    return e.code() == cw::ErrorCode::bad_config ? 2 : 1;
  } catch (const std::exception& e) {
    Json err;
    err["code"] = "internal";
    err["error"] = e.what();
    std::cout << err.dump(2) << "\n";
    return 1;
  }
  std::cout << out.dump(2) << "\n";
  return exit_code;
}
