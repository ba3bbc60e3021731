#include "conewave/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "conewave/grid.hpp"

static_assert(std::endian::native == std::endian::little,
              "tensor files are little-endian");

namespace conewave {

namespace {

using njson = nlohmann::ordered_json;

std::size_t shape_count(const std::vector<std::size_t>& shape) {
  std::size_t total = 1;
  for (std::size_t s : shape) total *= s;
  return total;
}

njson header_json(const TensorHeader& hdr) {
  njson j;
  j["kind"] = hdr.kind;
  j["shape"] = hdr.shape;
  j["cone"] = hdr.cone;
  j["grid_spacing"] = hdr.grid_spacing;
  j["origin"] = hdr.origin;
  njson nodes = njson::array();
  for (const auto& t : hdr.h_chart_coords)
    nodes.push_back(std::vector<double>(t.begin(), t.end()));
  j["h_chart_coords"] = std::move(nodes);
  j["weights"] = hdr.weights;
  return j;
}

void write_blob(const std::string& path, const TensorHeader& hdr,
                const void* data, std::size_t bytes) {
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.good(), ErrorCode::io_failure,
            "cannot open tensor file for writing");
    out.write(static_cast<const char*>(data),
              static_cast<std::streamsize>(bytes));
    require(out.good(), ErrorCode::io_failure, "tensor write failed");
  }
  std::ofstream side(path + ".json", std::ios::trunc);
  require(side.good(), ErrorCode::io_failure,
          "cannot open sidecar file for writing");
  side << header_json(hdr).dump(2) << '\n';
  require(side.good(), ErrorCode::io_failure, "sidecar write failed");
}

std::vector<char> read_blob(const std::string& path, std::size_t bytes) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::io_failure, "cannot open tensor file");
  std::vector<char> raw(bytes);
  in.read(raw.data(), static_cast<std::streamsize>(bytes));
  require(in.gcount() == static_cast<std::streamsize>(bytes),
          ErrorCode::io_failure, "tensor file shorter than its header says");
  return raw;
}

}  // namespace

void write_tensor(const std::string& path, const TensorHeader& hdr,
                  const std::vector<double>& data) {
  require(hdr.kind == "float64", ErrorCode::bad_config,
          "real tensors use kind float64");
  require(shape_count(hdr.shape) == data.size(), ErrorCode::bad_input,
          "tensor shape does not match the data size");
  write_blob(path, hdr, data.data(), data.size() * sizeof(double));
}

void write_tensor(const std::string& path, const TensorHeader& hdr,
                  const std::vector<cplx>& data) {
  require(hdr.kind == "complex128", ErrorCode::bad_config,
          "complex tensors use kind complex128");
  require(shape_count(hdr.shape) == data.size(), ErrorCode::bad_input,
          "tensor shape does not match the data size");
  write_blob(path, hdr, data.data(), data.size() * sizeof(cplx));
}

TensorHeader read_header(const std::string& path) {
  std::ifstream side(path + ".json");
  require(side.good(), ErrorCode::io_failure, "cannot open sidecar file");
  njson j;
  try {
    j = njson::parse(side);
  } catch (const std::exception&) {
    fail(ErrorCode::io_failure, "sidecar is not valid JSON");
  }
  TensorHeader hdr;
  try {
    hdr.kind = j.at("kind").get<std::string>();
    hdr.shape = j.at("shape").get<std::vector<std::size_t>>();
    hdr.cone = j.value("cone", std::string{});
    hdr.grid_spacing = j.value("grid_spacing", std::vector<double>{});
    hdr.origin = j.value("origin", std::vector<double>{});
    for (const auto& row : j.value("h_chart_coords", njson::array())) {
      auto v = row.get<std::vector<double>>();
      require(v.size() <= 3, ErrorCode::io_failure,
              "chart coordinate rows have at most three entries");
      std::array<double, 3> t{0.0, 0.0, 0.0};
      for (std::size_t a = 0; a < v.size(); ++a) t[a] = v[a];
      hdr.h_chart_coords.push_back(t);
    }
    hdr.weights = j.value("weights", std::vector<double>{});
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    fail(ErrorCode::io_failure, "sidecar is missing required fields");
  }
  require(hdr.kind == "float64" || hdr.kind == "complex128",
          ErrorCode::io_failure, "unknown tensor kind");
  return hdr;
}

std::vector<double> read_real_tensor(const std::string& path,
                                     TensorHeader* hdr_out) {
  TensorHeader hdr = read_header(path);
  require(hdr.kind == "float64", ErrorCode::io_failure,
          "expected a float64 tensor");
  std::size_t total = shape_count(hdr.shape);
  std::vector<char> raw = read_blob(path, total * sizeof(double));
  std::vector<double> data(total);
  std::memcpy(data.data(), raw.data(), raw.size());
  if (hdr_out) *hdr_out = std::move(hdr);
  return data;
}

std::vector<cplx> read_complex_tensor(const std::string& path,
                                      TensorHeader* hdr_out) {
  TensorHeader hdr = read_header(path);
  require(hdr.kind == "complex128", ErrorCode::io_failure,
          "expected a complex128 tensor");
  std::size_t total = shape_count(hdr.shape);
  std::vector<char> raw = read_blob(path, total * sizeof(cplx));
  std::vector<cplx> data(total);
  std::memcpy(data.data(), raw.data(), raw.size());
  if (hdr_out) *hdr_out = std::move(hdr);
  return data;
}

void save_spectral(const std::string& path, const ConeModel& cone,
                   const Domain& dom, const SpectralField& f) {
  const Grid& fg = dom.freq;
  require(f.values.size() == fg.count(), ErrorCode::bad_input,
          "spectrum size does not match the grid");
  TensorHeader hdr;
  hdr.kind = "complex128";
  for (int a = 0; a < fg.n; ++a)
    hdr.shape.push_back(static_cast<std::size_t>(fg.dims[a]));
  hdr.cone = cone.name();
  for (int a = 0; a < fg.n; ++a) {
    hdr.grid_spacing.push_back(fg.spacing[a]);
    hdr.origin.push_back(fg.lo[a]);
  }
  write_tensor(path, hdr, f.values);
}

SpectralField load_spectral(const std::string& path, ConeModel& cone,
                            Domain& dom) {
  TensorHeader hdr;
  std::vector<cplx> values = read_complex_tensor(path, &hdr);
  cone = ConeModel::parse(hdr.cone);
  const int n = cone.dim();
  require(static_cast<int>(hdr.shape.size()) == n, ErrorCode::io_failure,
          "tensor rank does not match the cone dimension");
  require(hdr.grid_spacing.size() == hdr.shape.size() &&
              hdr.origin.size() == hdr.shape.size(),
          ErrorCode::io_failure, "sidecar grid fields are incomplete");
  std::array<int, 3> dims{1, 1, 1};
  Vec lo = vec0(), hi = vec0();
  for (int a = 0; a < n; ++a) {
    dims[a] = static_cast<int>(hdr.shape[static_cast<std::size_t>(a)]);
    double dw = hdr.grid_spacing[static_cast<std::size_t>(a)];
    require(dw > 0.0, ErrorCode::io_failure, "grid spacing must be positive");
    lo[a] = hdr.origin[static_cast<std::size_t>(a)] - 0.5 * dw;
    hi[a] = lo[a] + dims[a] * dw;
  }
  dom = make_domain(n, lo, hi, dims);

  SpectralField f;
  f.freq = dom.freq;
  f.values = std::move(values);
  require(f.values.size() == f.freq.count(), ErrorCode::io_failure,
          "tensor size does not match its shape");
  // support box: cell hull of the nonzero samples (inverted box when empty)
  bool any = false;
  for_each_index(f.freq, [&](std::size_t i, const std::array<int, 3>& idx) {
    if (f.values[i] == cplx{}) return;
    Vec w = f.freq.point(idx);
    for (int a = 0; a < n; ++a) {
      double wl = w[a] - 0.5 * f.freq.spacing[a];
      double wh = w[a] + 0.5 * f.freq.spacing[a];
      f.supp_lo[a] = any ? std::min(f.supp_lo[a], wl) : wl;
      f.supp_hi[a] = any ? std::max(f.supp_hi[a], wh) : wh;
    }
    any = true;
  });
  if (!any) {
    f.supp_lo = f.freq.lo;
    for (int a = 0; a < n; ++a) f.supp_hi[a] = f.freq.lo[a] - 1.0;
  }
  return f;
}

void save_voices(const std::string& path, const CoefficientField& F) {
  require(F.full_grid, ErrorCode::bad_config,
          "voice export needs a full-grid analysis");
  TensorHeader hdr;
  hdr.kind = "complex128";
  hdr.cone = F.cone.name();
  const Grid& sg = F.signal_dom.spat;
  hdr.shape.push_back(F.slices.size());
  for (int a = 0; a < sg.n; ++a)
    hdr.shape.push_back(static_cast<std::size_t>(sg.dims[a]));
  for (int a = 0; a < sg.n; ++a) {
    hdr.grid_spacing.push_back(sg.spacing[a]);
    hdr.origin.push_back(sg.lo[a]);
  }
  std::vector<cplx> data;
  data.reserve(F.slices.size() * sg.count());
  for (const Slice& sl : F.slices) {
    hdr.h_chart_coords.push_back(
        {sl.h.theta[0], sl.h.theta[1], sl.h.theta[2]});
    hdr.weights.push_back(sl.weight);
    if (sl.crop.empty) {
      data.resize(data.size() + sg.count(), cplx{});
      continue;
    }
    std::vector<cplx> sp = slice_spatial(sl);
    require(sp.size() == sg.count(), ErrorCode::bad_input,
            "full-grid slice does not match the signal grid");
    data.insert(data.end(), sp.begin(), sp.end());
  }
  write_tensor(path, hdr, data);
}

void save_lattice(const std::string& path, const ConeModel& cone,
                  const Lattice& lat) {
  TensorHeader hdr;
  hdr.kind = "float64";
  hdr.cone = cone.name();
  hdr.shape = {lat.size(), static_cast<std::size_t>(cone.dim())};
  std::vector<double> data;
  data.reserve(lat.size() * static_cast<std::size_t>(cone.dim()));
  for (std::size_t j = 0; j < lat.size(); ++j) {
    hdr.h_chart_coords.push_back(
        {lat.thetas[j][0], lat.thetas[j][1], lat.thetas[j][2]});
    Vec s = cone.to_storage(lat.points[j]);
    for (int a = 0; a < cone.dim(); ++a) data.push_back(s[a]);
  }
  write_tensor(path, hdr, data);
}

}  // namespace conewave
