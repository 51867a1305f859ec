#include "corsense/problem.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace corsense {

double default_subgaussian_K() { return std::sqrt(8.0 / 3.0); }

namespace {

// Partial Fisher-Yates: the first `count` entries of the returned index
// permutation form the support, drawn uniformly without replacement.
std::vector<int> draw_support(int total, int count, Rng& rng) {
  std::vector<int> idx(static_cast<size_t>(total));
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < count; ++i) {
    const int j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(total - i)));
    std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
  }
  idx.resize(static_cast<size_t>(count));
  std::sort(idx.begin(), idx.end());
  return idx;
}

double draw_amplitude(AmplitudeLaw law, double scale, Rng& rng) {
  switch (law) {
    case AmplitudeLaw::rademacher:
      return scale * rng.rademacher();
    case AmplitudeLaw::gaussian:
      return scale * rng.normal();
  }
  return 0.0;
}

}  // namespace

Eigen::VectorXd gen_structured_vector(int dim, const StructureSpec& spec, std::uint64_t seed) {
  if (dim < 1) throw std::invalid_argument("gen_structured_vector: dim must be positive");
  if (spec.scale < 0) throw std::invalid_argument("gen_structured_vector: negative scale");
  Rng rng(seed);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(dim);
  if (spec.kind == StructureKind::sparse) {
    if (spec.sparsity < 0 || spec.sparsity > dim)
      throw std::invalid_argument("gen_structured_vector: sparsity out of range");
    for (int i : draw_support(dim, spec.sparsity, rng))
      x[i] = draw_amplitude(spec.amplitude, spec.scale, rng);
    return x;
  }
  if (spec.block_size < 1 || dim % spec.block_size != 0)
    throw std::invalid_argument("gen_structured_vector: block_size must divide dim");
  const int nb = dim / spec.block_size;
  if (spec.sparsity < 0 || spec.sparsity > nb)
    throw std::invalid_argument("gen_structured_vector: sparsity out of range");
  for (int b : draw_support(nb, spec.sparsity, rng))
    for (int j = 0; j < spec.block_size; ++j)
      x[b * spec.block_size + j] = draw_amplitude(spec.amplitude, spec.scale, rng);
  return x;
}

Eigen::MatrixXd gen_sensing_matrix(int m, int n, const EnsembleSpec& spec, std::uint64_t seed) {
  if (m < 1 || n < 1) throw std::invalid_argument("gen_sensing_matrix: dims must be positive");
  Rng rng(seed);
  const double s = 1.0 / std::sqrt(static_cast<double>(m));
  const double u3 = std::sqrt(3.0);  // U[-sqrt(3), sqrt(3)] has unit variance
  Eigen::MatrixXd a(m, n);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      switch (spec.kind) {
        case EnsembleKind::gaussian:
          a(i, j) = s * rng.normal();
          break;
        case EnsembleKind::rademacher:
          a(i, j) = s * rng.rademacher();
          break;
        case EnsembleKind::uniform:
          a(i, j) = s * rng.uniform(-u3, u3);
          break;
      }
    }
  }
  return a;
}

Eigen::VectorXd gen_noise(int m, const NoiseSpec& spec, std::uint64_t seed) {
  if (m < 1) throw std::invalid_argument("gen_noise: dim must be positive");
  if (spec.delta < 0) throw std::invalid_argument("gen_noise: negative delta");
  Rng rng(seed);
  switch (spec.kind) {
    case NoiseKind::none:
      return Eigen::VectorXd::Zero(m);
    case NoiseKind::bounded: {
      if (spec.delta == 0.0) return Eigen::VectorXd::Zero(m);
      // Uniform on the delta-ball: normalized Gaussian direction times
      // delta * U^{1/m}.
      Eigen::VectorXd z(m);
      for (int i = 0; i < m; ++i) z[i] = rng.normal();
      const double nz = z.norm();
      if (nz == 0.0) return Eigen::VectorXd::Zero(m);
      const double radius =
          spec.delta * std::exp(std::log(std::max(rng.uniform(), 1e-300)) / m);
      return (radius / nz) * z;
    }
    case NoiseKind::subgaussian: {
      Eigen::VectorXd z(m);
      for (int i = 0; i < m; ++i) z[i] = rng.normal();
      return z;
    }
  }
  return Eigen::VectorXd::Zero(m);
}

ProblemInstance assemble(Eigen::MatrixXd sensing, Eigen::VectorXd signal,
                         Eigen::VectorXd corruption, Eigen::VectorXd noise,
                         EnsembleKind ensemble, NoiseKind noise_model, std::uint64_t seed) {
  const int m = static_cast<int>(sensing.rows());
  const int n = static_cast<int>(sensing.cols());
  if (signal.size() != n) throw std::invalid_argument("assemble: signal dimension mismatch");
  if (corruption.size() != m)
    throw std::invalid_argument("assemble: corruption dimension mismatch");
  if (noise.size() != m) throw std::invalid_argument("assemble: noise dimension mismatch");
  ProblemInstance inst;
  inst.n = n;
  inst.m = m;
  inst.observation = sensing * signal + corruption + noise;
  inst.sensing = std::move(sensing);
  inst.signal = std::move(signal);
  inst.corruption = std::move(corruption);
  inst.noise = std::move(noise);
  inst.ensemble = ensemble;
  inst.noise_model = noise_model;
  inst.seed = seed;
  return inst;
}

ProblemInstance make_instance(int n, int m, const StructureSpec& signal_spec,
                              const StructureSpec& corruption_spec,
                              const EnsembleSpec& ensemble, const NoiseSpec& noise,
                              std::uint64_t seed) {
  return assemble(gen_sensing_matrix(m, n, ensemble, derive_seed(seed, kStreamSensing)),
                  gen_structured_vector(n, signal_spec, derive_seed(seed, kStreamSignal)),
                  gen_structured_vector(m, corruption_spec, derive_seed(seed, kStreamCorruption)),
                  gen_noise(m, noise, derive_seed(seed, kStreamNoise)),
                  ensemble.kind, noise.kind, seed);
}

double estimate_psi2(std::span<const double> samples) {
  if (samples.size() < 100)
    throw std::invalid_argument("estimate_psi2: need at least 100 samples");
  double amax = 0.0;
  for (double x : samples) amax = std::max(amax, std::abs(x));
  if (amax == 0.0) return 0.0;
  // mean exp(x^2/t^2) is decreasing in t; bisect for the boundary of <= 2.
  auto small_enough = [&](double t) {
    double acc = 0.0;
    const double inv_t2 = 1.0 / (t * t);
    for (double x : samples) acc += std::exp(x * x * inv_t2);
    return std::isfinite(acc) && acc <= 2.0 * static_cast<double>(samples.size());
  };
  double lo = 1e-6, hi = 1e3;
  if (small_enough(lo)) return lo;
  if (!small_enough(hi)) return hi;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (small_enough(mid))
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

EnsembleReport verify_ensemble(const Eigen::MatrixXd& sensing, double tol) {
  if (tol < 0) throw std::invalid_argument("verify_ensemble: negative tol");
  EnsembleReport rep;
  rep.m = static_cast<int>(sensing.rows());
  rep.n = static_cast<int>(sensing.cols());
  rep.tol = tol;
  rep.diag_target = 1.0 / static_cast<double>(rep.m);
  const Eigen::MatrixXd s_hat =
      (sensing.transpose() * sensing) / static_cast<double>(rep.m);
  for (int j = 0; j < rep.n; ++j) {
    rep.max_diag_dev = std::max(rep.max_diag_dev, std::abs(s_hat(j, j) - rep.diag_target));
    for (int k = j + 1; k < rep.n; ++k)
      rep.max_offdiag = std::max(rep.max_offdiag, std::abs(s_hat(j, k)));
  }
  rep.pass = rep.max_diag_dev <= tol * rep.diag_target &&
             rep.max_offdiag <= tol * rep.diag_target;
  return rep;
}

std::string ensemble_name(EnsembleKind k) {
  switch (k) {
    case EnsembleKind::gaussian: return "gaussian";
    case EnsembleKind::rademacher: return "rademacher";
    case EnsembleKind::uniform: return "uniform";
  }
  return "gaussian";
}

EnsembleKind ensemble_from_name(const std::string& s) {
  if (s == "gaussian") return EnsembleKind::gaussian;
  if (s == "rademacher") return EnsembleKind::rademacher;
  if (s == "uniform") return EnsembleKind::uniform;
  throw std::invalid_argument("unknown ensemble: " + s);
}

std::string noise_name(NoiseKind k) {
  switch (k) {
    case NoiseKind::none: return "none";
    case NoiseKind::bounded: return "bounded";
    case NoiseKind::subgaussian: return "subgaussian";
  }
  return "none";
}

NoiseKind noise_from_name(const std::string& s) {
  if (s == "none") return NoiseKind::none;
  if (s == "bounded") return NoiseKind::bounded;
  if (s == "subgaussian") return NoiseKind::subgaussian;
  throw std::invalid_argument("unknown noise model: " + s);
}

namespace {

nlohmann::json vec_to_json(const Eigen::VectorXd& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd vec_from_json(const nlohmann::json& a, const char* field) {
  if (!a.is_array()) throw std::invalid_argument(std::string("instance_from_json: ") + field + " must be an array");
  Eigen::VectorXd v(a.size());
  for (size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  return v;
}

}  // namespace

nlohmann::json instance_to_json(const ProblemInstance& inst, bool embed_sensing) {
  nlohmann::json j;
  j["n"] = inst.n;
  j["m"] = inst.m;
  j["ensemble"] = ensemble_name(inst.ensemble);
  j["noise"] = noise_name(inst.noise_model);
  j["seed"] = inst.seed;
  j["signal"] = vec_to_json(inst.signal);
  j["corruption"] = vec_to_json(inst.corruption);
  j["noise_vec"] = vec_to_json(inst.noise);
  j["y"] = vec_to_json(inst.observation);
  if (embed_sensing) {
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < inst.m; ++i) rows.push_back(vec_to_json(inst.sensing.row(i)));
    j["phi"] = rows;
  } else {
    j["phi_by_seed"] = true;
  }
  return j;
}

ProblemInstance instance_from_json(const nlohmann::json& j) {
  for (const char* key : {"n", "m", "ensemble", "noise", "seed", "signal", "corruption",
                          "noise_vec", "y"})
    if (!j.contains(key))
      throw std::invalid_argument(std::string("instance_from_json: missing field ") + key);
  ProblemInstance inst;
  inst.n = j.at("n").get<int>();
  inst.m = j.at("m").get<int>();
  if (inst.n < 1 || inst.m < 1)
    throw std::invalid_argument("instance_from_json: dims must be positive");
  inst.ensemble = ensemble_from_name(j.at("ensemble").get<std::string>());
  inst.noise_model = noise_from_name(j.at("noise").get<std::string>());
  inst.seed = j.at("seed").get<std::uint64_t>();
  inst.signal = vec_from_json(j.at("signal"), "signal");
  inst.corruption = vec_from_json(j.at("corruption"), "corruption");
  inst.noise = vec_from_json(j.at("noise_vec"), "noise_vec");
  inst.observation = vec_from_json(j.at("y"), "y");
  if (inst.signal.size() != inst.n || inst.corruption.size() != inst.m ||
      inst.noise.size() != inst.m || inst.observation.size() != inst.m)
    throw std::invalid_argument("instance_from_json: vector dimensions inconsistent");
  if (j.contains("phi")) {
    const auto& rows = j.at("phi");
    if (!rows.is_array() || rows.size() != static_cast<size_t>(inst.m))
      throw std::invalid_argument("instance_from_json: phi must have m rows");
    inst.sensing.resize(inst.m, inst.n);
    for (int i = 0; i < inst.m; ++i)
      inst.sensing.row(i) = vec_from_json(rows[static_cast<size_t>(i)], "phi row");
  } else if (j.value("phi_by_seed", false)) {
    EnsembleSpec spec;
    spec.kind = inst.ensemble;
    inst.sensing =
        gen_sensing_matrix(inst.m, inst.n, spec, derive_seed(inst.seed, kStreamSensing));
  } else {
    throw std::invalid_argument("instance_from_json: need phi or phi_by_seed");
  }
  return inst;
}

}  // namespace corsense
