#include <chrono>
#include <sstream>

#include "cli/command.hpp"
#include "vcr/error.hpp"
#include "vcr/metrics.hpp"
#include "vcr/operators.hpp"
#include "vcr/tasks.hpp"

namespace vcr::cli {

PriorHandle parse_prior(const std::string& spec, std::size_t timeout_ms) {
  if (spec == "tv") return TvPrior{};
  if (spec == "median") return MedianPrior{};
  if (spec == "nlm") return NlmPrior{};
  if (spec == "laplacian") return LaplacianPrior{};
  if (spec.rfind("extern:", 0) == 0) {
    const std::string cmd = spec.substr(7);
    if (cmd.empty()) throw UsageError("extern: prior needs a command line");
    return ExternalPrior{cmd, std::chrono::milliseconds(timeout_ms)};
  }
  throw UsageError("unknown prior '" + spec + "' (tv, median, nlm, laplacian, extern:<command>)");
}

namespace {

using clock = std::chrono::steady_clock;

double seconds_since(clock::time_point t0) { return std::chrono::duration<double>(clock::now() - t0).count(); }

template <typename T>
ordered_json opt_json(const std::optional<T>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

std::filesystem::path manifest_path(const std::string& given, const std::string& out) {
  return given.empty() ? std::filesystem::path(out + ".manifest.json") : std::filesystem::path(given);
}

// Flags shared by the iterative commands.
struct SolverFlags {
  std::size_t iterations = 50;
  double tolerance = 1e-4;
  double rho0 = 1.0;
  double rho_growth = 1.2;
  double rho_max = 0.0;
  std::size_t cg_iterations = 500;
  double cg_tolerance = 1e-10;
  std::string noise_arg = "std";

  void define(CLI::App& app) {
    app.add_option("--iterations", iterations, "Outer iterations")->capture_default_str();
    app.add_option("--tolerance", tolerance, "Relative change stopping tolerance")->capture_default_str();
    app.add_option("--rho0", rho0, "Initial splitting penalty")->capture_default_str();
    app.add_option("--rho-growth", rho_growth, "Penalty growth per iteration")->capture_default_str();
    app.add_option("--rho-max", rho_max, "Penalty cap (0: 1e6 * rho0)")->capture_default_str();
    app.add_option("--cg-iterations", cg_iterations, "Conjugate-gradient iteration cap")->capture_default_str();
    app.add_option("--cg-tolerance", cg_tolerance, "Conjugate-gradient relative residual")->capture_default_str();
    app.add_option("--noise-arg", noise_arg, "What a denoiser receives: std or variance")->capture_default_str();
  }

  SolverConfig config() const {
    SolverConfig c;
    c.max_iterations = iterations;
    c.tolerance = tolerance;
    c.rho0 = rho0;
    c.rho_growth = rho_growth;
    c.rho_max = rho_max;
    c.cg_max_iterations = cg_iterations;
    c.cg_tolerance = cg_tolerance;
    if (noise_arg == "std") {
      c.noise_arg = NoiseArg::std_dev;
    } else if (noise_arg == "variance") {
      c.noise_arg = NoiseArg::variance;
    } else {
      throw UsageError("--noise-arg must be std or variance");
    }
    return c;
  }

  void record(ordered_json& j) const {
    j["iterations"] = iterations;
    j["tolerance"] = tolerance;
    j["rho0"] = rho0;
    j["rho-growth"] = rho_growth;
    j["rho-max"] = rho_max;
    j["cg-iterations"] = cg_iterations;
    j["cg-tolerance"] = cg_tolerance;
    j["noise-arg"] = noise_arg;
  }
};

// Writes the raster, the optional energy CSV, then the manifest.
struct Outputs {
  std::string out;
  std::string manifest;
  std::string report;
  bool iterative = true;

  void define(CLI::App& app, bool with_report = true) {
    iterative = with_report;
    app.add_option("--out", out, "Output raster (VCR1)");
    app.add_option("--manifest", manifest, "Manifest path (default <out>.manifest.json)");
    if (iterative) app.add_option("--report", report, "Per-iteration energy CSV");
  }

  void check() const {
    if (out.empty()) throw UsageError("--out is required");
  }

  void record(ordered_json& j) const {
    j["out"] = out;
    j["manifest"] = manifest_path(manifest, out).string();
    if (iterative) j["report"] = report.empty() ? ordered_json(nullptr) : ordered_json(report);
  }

  void finish(RunManifest& m, const RasterImage& result, const SolverReport* r, clock::time_point t0,
              std::vector<std::filesystem::path> extra = {}) const {
    write_raster(result, out);
    m.outputs.push_back(out);
    for (auto& p : extra) m.outputs.push_back(std::move(p));
    if (r) {
      m.report = summarize(*r);
      if (!report.empty()) {
        write_energy_csv(*r, report);
        m.outputs.push_back(report);
      }
    }
    m.wall_time = seconds_since(t0);
    write_manifest(m, manifest_path(manifest, out));
  }
};

// ---- degrade ------------------------------------------------------------------------------------

class Degrade : public Command {
 public:
  const char* name() const override { return "degrade"; }
  const char* description() const override {
    return "Apply gain/offset, blur, downsampling, mask, spectral response and noise, in that order";
  }

  void define(CLI::App& app) override {
    app.add_option("--in", in_, "Input raster (VCR1)");
    outputs_.define(app, false);
    app.add_option("--gain", gain_, "Multiplicative gain");
    app.add_option("--offset", offset_, "Additive offset after the gain");
    app.add_option("--blur-sigma", blur_sigma_, "Gaussian blur standard deviation in pixels");
    app.add_option("--blur-radius", blur_radius_, "Blur half-width (default ceil(3 sigma))");
    app.add_option("--down", down_, "Block-mean downsampling factor");
    app.add_option("--mask", mask_, "Raster whose mask (or nonzero first band) marks valid pixels");
    app.add_option("--srf", srf_, "Spectral response matrix (JSON, output bands x input bands)");
    app.add_option("--noise-sigma", noise_sigma_, "Additive Gaussian noise standard deviation");
    app.add_option("--speckle-looks", looks_, "Multiplicative Gamma speckle with L looks");
    app.add_option("--impulse-density", impulse_density_, "Fraction of samples replaced by impulses");
    app.add_option("--impulse-low", impulse_low_, "Low impulse value")->capture_default_str();
    app.add_option("--impulse-high", impulse_high_, "High impulse value")->capture_default_str();
    app.add_option("--stripe-amplitude", stripe_amplitude_, "Periodic stripe amplitude");
    app.add_option("--stripe-period", stripe_period_, "Stripe period in pixels")->capture_default_str();
    app.add_option("--stripe-orientation", stripe_orientation_, "horizontal or vertical")->capture_default_str();
    app.add_option("--seed", seed_, "Noise seed")->capture_default_str();
  }

  int run(std::ostream&, std::ostream&) override {
    const auto t0 = clock::now();
    const std::string& in = need(in_, "--in");
    outputs_.check();
    const bool any = gain_ || offset_ || blur_sigma_ || down_ || mask_ || srf_ || noise_sigma_ || looks_ ||
                     impulse_density_ || stripe_amplitude_;
    if (!any) throw UsageError("at least one degradation flag is required");
    if (blur_radius_ && !blur_sigma_) throw UsageError("--blur-radius needs --blur-sigma");

    std::optional<NoiseSpec> noise;
    auto set_noise = [&](NoiseSpec s) {
      if (noise) throw UsageError("only one noise family per run");
      noise = s;
    };
    if (noise_sigma_) set_noise({GaussianNoise{*noise_sigma_}, seed_});
    if (looks_) set_noise({SpeckleNoise{*looks_}, seed_});
    if (impulse_density_) set_noise({ImpulseNoise{*impulse_density_, impulse_low_, impulse_high_}, seed_});
    if (stripe_amplitude_) {
      StripeOrientation o;
      if (stripe_orientation_ == "horizontal") {
        o = StripeOrientation::horizontal;
      } else if (stripe_orientation_ == "vertical") {
        o = StripeOrientation::vertical;
      } else {
        throw UsageError("--stripe-orientation must be horizontal or vertical");
      }
      set_noise({StripeNoise{o, stripe_period_, *stripe_amplitude_}, seed_});
    }

    RunManifest m;
    m.command = name();
    m.inputs.push_back(in);
    RasterImage x = read_raster(in);

    if (gain_ || offset_) {
      const Geometry& g = x.geometry();
      const auto op = LinearOperator::gain(create_raster(g.width, g.height, g.bands, gain_.value_or(1.0)));
      std::optional<RasterImage> off;
      if (offset_) off = create_raster(g.width, g.height, g.bands, *offset_);
      x = apply_affine_degradation(op, off, x);
    }
    if (blur_sigma_) x = apply(LinearOperator::blur(x.geometry(), *blur_sigma_, blur_radius_), x);
    if (down_) x = apply(LinearOperator::downsample(x.geometry(), *down_), x);
    if (mask_) {
      const RasterImage mr = read_raster(*mask_);
      m.inputs.push_back(*mask_);
      if (mr.width() != x.width() || mr.height() != x.height()) {
        std::ostringstream os;
        os << "mask geometry " << mr.geometry() << " does not match the degraded raster " << x.geometry();
        throw GeometryError(os.str());
      }
      std::vector<std::uint8_t> valid(x.pixel_count());
      for (std::size_t p = 0; p < valid.size(); ++p)
        valid[p] = mr.has_mask() ? (mr.mask()[p] != 0) : (mr.samples()[p] != 0.0);
      x = apply(LinearOperator::mask(x.geometry(), valid), x).with_mask(valid);
    }
    if (srf_) {
      m.inputs.push_back(*srf_);
      x = apply(LinearOperator::spectral_response(x.geometry(), read_band_matrix(*srf_)), x);
    }
    if (noise) x = add_noise(x, *noise);

    ordered_json& c = m.config;
    c["in"] = in;
    outputs_.record(c);
    c["gain"] = opt_json(gain_);
    c["offset"] = opt_json(offset_);
    c["blur-sigma"] = opt_json(blur_sigma_);
    c["blur-radius"] = opt_json(blur_radius_);
    c["down"] = opt_json(down_);
    c["mask"] = opt_json(mask_);
    c["srf"] = opt_json(srf_);
    c["noise-sigma"] = opt_json(noise_sigma_);
    c["speckle-looks"] = opt_json(looks_);
    c["impulse-density"] = opt_json(impulse_density_);
    c["impulse-low"] = impulse_low_;
    c["impulse-high"] = impulse_high_;
    c["stripe-amplitude"] = opt_json(stripe_amplitude_);
    c["stripe-period"] = stripe_period_;
    c["stripe-orientation"] = stripe_orientation_;
    if (noise) m.seed = seed_;
    outputs_.finish(m, x, nullptr, t0);
    return 0;
  }

 private:
  std::optional<std::string> in_;
  Outputs outputs_;
  std::optional<double> gain_, offset_, blur_sigma_;
  std::optional<std::size_t> blur_radius_, down_;
  std::optional<std::string> mask_, srf_;
  std::optional<double> noise_sigma_;
  std::optional<unsigned> looks_;
  std::optional<double> impulse_density_;
  double impulse_low_ = 0.0, impulse_high_ = 1.0;
  std::optional<double> stripe_amplitude_;
  double stripe_period_ = 8.0;
  std::string stripe_orientation_ = "vertical";
  std::uint64_t seed_ = 0;
};

// ---- despeckle ----------------------------------------------------------------------------------

class Despeckle : public Command {
 public:
  const char* name() const override { return "despeckle"; }
  const char* description() const override { return "Remove multiplicative speckle from a single-band intensity image"; }

  void define(CLI::App& app) override {
    app.add_option("--in", in_, "Speckled intensity raster");
    outputs_.define(app);
    app.add_option("--method", method_, "pnp or aa-tv")->capture_default_str();
    app.add_option("--prior", prior_, "tv, median, nlm, laplacian or extern:<command>")->capture_default_str();
    app.add_option("--looks", looks_, "Number of looks L; the fidelity weight is lambda * L")->capture_default_str();
    app.add_option("--lambda", lambda_, "Fidelity weight")->capture_default_str();
    app.add_option("--floor", floor_, "Positivity floor")->capture_default_str();
    app.add_option("--x-step", x_step_, "pnp X-step: cubic or gradient")->capture_default_str();
    app.add_option("--step", step_, "Gradient step (aa-tv, gradient X-step)")->capture_default_str();
    app.add_option("--gradient-steps", gradient_steps_, "Inner steps of the gradient X-step")->capture_default_str();
    app.add_option("--tv-epsilon", tv_epsilon_, "aa-tv smoothing of the TV gradient")->capture_default_str();
    app.add_option("--plugin-timeout-ms", timeout_ms_, "External prior timeout")->capture_default_str();
    solver_.define(app);
  }

  int run(std::ostream&, std::ostream&) override {
    const auto t0 = clock::now();
    const std::string& in = need(in_, "--in");
    outputs_.check();
    if (method_ != "pnp" && method_ != "aa-tv") throw UsageError("--method must be pnp or aa-tv");
    if (x_step_ != "cubic" && x_step_ != "gradient") throw UsageError("--x-step must be cubic or gradient");
    if (looks_ == 0) throw UsageError("--looks must be >= 1");
    SolverConfig sc = solver_.config();
    sc.step = step_;
    const PriorHandle prior = parse_prior(prior_, timeout_ms_);

    RunManifest m;
    m.command = name();
    m.inputs.push_back(in);
    const RasterImage y = read_raster(in);
    const double weight = lambda_ * static_cast<double>(looks_);

    std::pair<RasterImage, SolverReport> result = [&] {
      if (method_ == "aa-tv") return despeckle_aa_tv(y, weight, sc, tv_epsilon_, floor_);
      DespeckleConfig cfg;
      cfg.lambda = weight;
      cfg.solver = sc;
      cfg.prior = prior;
      cfg.floor = floor_;
      cfg.x_step = x_step_ == "cubic" ? XStepMethod::cubic : XStepMethod::gradient;
      cfg.gradient_steps = gradient_steps_;
      return despeckle_pnp(y, cfg);
    }();

    ordered_json& c = m.config;
    c["in"] = in;
    outputs_.record(c);
    c["method"] = method_;
    c["prior"] = prior_;
    c["looks"] = looks_;
    c["lambda"] = lambda_;
    c["floor"] = floor_;
    c["x-step"] = x_step_;
    c["step"] = step_;
    c["gradient-steps"] = gradient_steps_;
    c["tv-epsilon"] = tv_epsilon_;
    c["plugin-timeout-ms"] = timeout_ms_;
    solver_.record(c);
    outputs_.finish(m, result.first, &result.second, t0);
    return 0;
  }

 private:
  std::optional<std::string> in_;
  Outputs outputs_;
  std::string method_ = "pnp";
  std::string prior_ = "tv";
  unsigned looks_ = 1;
  double lambda_ = 1.0;
  double floor_ = 1e-6;
  std::string x_step_ = "cubic";
  double step_ = 0.1;
  std::size_t gradient_steps_ = 50;
  double tv_epsilon_ = 1e-2;
  std::size_t timeout_ms_ = 30000;
  SolverFlags solver_;
};

// ---- denoise ------------------------------------------------------------------------------------

class Denoise : public Command {
 public:
  const char* name() const override { return "denoise"; }
  const char* description() const override {
    return "Separate a hyperspectral cube into clean, sparse and Gaussian components";
  }

  void define(CLI::App& app) override {
    app.add_option("--in", in_, "Noisy multi-band raster");
    outputs_.define(app);
    app.add_option("--method", method_, "pnp")->capture_default_str();
    app.add_option("--prior", prior_, "tv, median, nlm, laplacian or extern:<command>")->capture_default_str();
    app.add_option("--tau", tau_, "Prior weight")->capture_default_str();
    app.add_option("--lambda-s", lambda_s_, "Sparse-noise weight (enables the sparse component)");
    app.add_option("--beta", beta_, "Gaussian-noise weight (enables the Gaussian component)");
    app.add_option("--sparse-out", sparse_out_, "Write the sparse component here");
    app.add_option("--plugin-timeout-ms", timeout_ms_, "External prior timeout")->capture_default_str();
    solver_.define(app);
  }

  int run(std::ostream&, std::ostream&) override {
    const auto t0 = clock::now();
    const std::string& in = need(in_, "--in");
    outputs_.check();
    if (method_ != "pnp") throw UsageError("--method must be pnp");
    HsiDenoiseConfig cfg;
    cfg.tau = tau_;
    cfg.lambda_s = lambda_s_;
    cfg.beta = beta_;
    cfg.prior = parse_prior(prior_, timeout_ms_);
    cfg.solver = solver_.config();

    RunManifest m;
    m.command = name();
    m.inputs.push_back(in);
    const auto [d, report] = hsi_denoise_pnp(read_raster(in), cfg);

    ordered_json& c = m.config;
    c["in"] = in;
    outputs_.record(c);
    c["method"] = method_;
    c["prior"] = prior_;
    c["tau"] = tau_;
    c["lambda-s"] = opt_json(lambda_s_);
    c["beta"] = opt_json(beta_);
    c["sparse-out"] = opt_json(sparse_out_);
    c["plugin-timeout-ms"] = timeout_ms_;
    solver_.record(c);
    std::vector<std::filesystem::path> extra;
    if (sparse_out_) {
      write_raster(d.sparse, *sparse_out_);
      extra.emplace_back(*sparse_out_);
    }
    outputs_.finish(m, d.x, &report, t0, std::move(extra));
    return 0;
  }

 private:
  std::optional<std::string> in_;
  Outputs outputs_;
  std::string method_ = "pnp";
  std::string prior_ = "tv";
  double tau_ = 1.0;
  std::optional<double> lambda_s_, beta_;
  std::optional<std::string> sparse_out_;
  std::size_t timeout_ms_ = 30000;
  SolverFlags solver_;
};

// ---- fuse ---------------------------------------------------------------------------------------

class Fuse : public Command {
 public:
  const char* name() const override { return "fuse"; }
  const char* description() const override {
    return "Fuse a low-resolution hyperspectral and a high-resolution multispectral raster";
  }

  void define(CLI::App& app) override {
    app.add_option("--method", method_, "dlvm or cnnfus");
    app.add_option("--hsi", hsi_, "Low-resolution hyperspectral raster Y");
    app.add_option("--msi", msi_, "High-resolution multispectral raster Z");
    app.add_option("--srf", srf_, "Spectral response (JSON, MSI bands x HSI bands)");
    outputs_.define(app);
    app.add_option("--ratio", ratio_, "Resolution ratio (default: MSI width / HSI width)");
    app.add_option("--blur-sigma", blur_sigma_, "Blur of the spatial degradation")->capture_default_str();
    app.add_option("--gamma", gamma_, "Gradient-prior weight (dlvm)")->capture_default_str();
    app.add_option("--lambda", lambda_, "Laplacian weight (dlvm) or prior weight (cnnfus)")->capture_default_str();
    app.add_option("--subspace", subspace_, "Subspace dimension (cnnfus; default from the spectrum)");
    app.add_option("--prior", prior_, "cnnfus prior on coefficient planes")->capture_default_str();
    app.add_option("--g1", g1_, "Horizontal gradient prior (dlvm; default transplanted from the MSI)");
    app.add_option("--g2", g2_, "Vertical gradient prior (dlvm)");
    app.add_option("--plugin-timeout-ms", timeout_ms_, "External prior timeout")->capture_default_str();
    solver_.define(app);
  }

  int run(std::ostream&, std::ostream&) override {
    const auto t0 = clock::now();
    const std::string& method = need(method_, "--method");
    if (method != "dlvm" && method != "cnnfus") throw UsageError("--method must be dlvm or cnnfus");
    const std::string& hsi = need(hsi_, "--hsi");
    const std::string& msi = need(msi_, "--msi");
    const std::string& srf = need(srf_, "--srf");
    outputs_.check();
    if (g1_.has_value() != g2_.has_value()) throw UsageError("--g1 and --g2 go together");
    if (g1_ && method != "dlvm") throw UsageError("--g1/--g2 apply to dlvm only");
    const SolverConfig sc = solver_.config();
    const PriorHandle prior = parse_prior(prior_, timeout_ms_);

    RunManifest m;
    m.command = name();
    m.inputs = {hsi, msi, srf};
    const RasterImage y = read_raster(hsi);
    const RasterImage z = read_raster(msi);
    const std::size_t ratio = ratio_.value_or(y.width() ? z.width() / y.width() : 0);
    if (ratio == 0 || y.width() * ratio != z.width() || y.height() * ratio != z.height()) {
      std::ostringstream os;
      os << "MSI " << z.geometry() << " is not an integer multiple of HSI " << y.geometry();
      if (ratio_) os << " at ratio " << *ratio_;
      throw GeometryError(os.str());
    }
    const Geometry target{z.width(), z.height(), y.bands()};
    std::vector<LinearOperator> stages;
    if (blur_sigma_ > 0.0) stages.push_back(LinearOperator::blur(target, blur_sigma_));
    if (ratio > 1) stages.push_back(LinearOperator::downsample(target, ratio));
    const LinearOperator h = stages.empty()      ? LinearOperator::identity(target)
                             : stages.size() == 1 ? stages.front()
                                                  : LinearOperator::composite(stages);

    const FusionInputs fin{y, z, h, read_band_matrix(srf), gamma_, lambda_, subspace_};

    std::pair<RasterImage, SolverReport> result = [&] {
      if (method == "cnnfus") return fuse_cnnfus(fin, prior, sc);
      if (g1_) {
        m.inputs.emplace_back(*g1_);
        m.inputs.emplace_back(*g2_);
        return fuse_dlvm(fin, read_raster(*g1_), read_raster(*g2_), sc);
      }
      const GradientField g = transplant_gradients(fin);
      return fuse_dlvm(fin, g.dx, g.dy, sc);
    }();

    ordered_json& c = m.config;
    c["method"] = method;
    c["hsi"] = hsi;
    c["msi"] = msi;
    c["srf"] = srf;
    outputs_.record(c);
    c["ratio"] = ratio;
    c["blur-sigma"] = blur_sigma_;
    c["gamma"] = gamma_;
    c["lambda"] = lambda_;
    c["subspace"] = opt_json(subspace_);
    c["prior"] = prior_;
    c["g1"] = opt_json(g1_);
    c["g2"] = opt_json(g2_);
    c["plugin-timeout-ms"] = timeout_ms_;
    solver_.record(c);
    outputs_.finish(m, result.first, &result.second, t0);
    return 0;
  }

 private:
  std::optional<std::string> method_, hsi_, msi_, srf_;
  Outputs outputs_;
  std::optional<std::size_t> ratio_;
  double blur_sigma_ = 0.0;
  double gamma_ = 1.0;
  double lambda_ = 0.0;
  std::optional<std::size_t> subspace_;
  std::string prior_ = "tv";
  std::optional<std::string> g1_, g2_;
  std::size_t timeout_ms_ = 30000;
  SolverFlags solver_;
};

// ---- eval ---------------------------------------------------------------------------------------

class Eval : public Command {
 public:
  const char* name() const override { return "eval"; }
  const char* description() const override { return "Compare a result against a reference"; }

  void define(CLI::App& app) override {
    app.add_option("--ref", ref_, "Reference raster");
    app.add_option("--test", test_, "Raster under test");
    app.add_option("--peak", peak_, "Peak value for PSNR and SSIM")->capture_default_str();
    app.add_option("--region", region_, "x,y,w,h block of the test raster for ENL");
    app.add_option("--band", band_, "Band used for ENL")->capture_default_str();
    app.add_option("--out", out_, "Also write the JSON report here");
  }

  int run(std::ostream& out, std::ostream&) override {
    const RasterImage ref = read_raster(need(ref_, "--ref"));
    const RasterImage test = read_raster(need(test_, "--test"));
    require_same_geometry(ref.geometry(), test.geometry(), "eval");

    MetricReport r;
    r.psnr_db = psnr(ref, test, peak_);
    r.psnr_per_band = psnr_per_band(ref, test, peak_);
    try {
      r.ssim = ssim(ref, test, peak_);
    } catch (const GeometryError&) {
      // smaller than one SSIM window
    }
    if (ref.bands() > 1) {
      const MsaResult a = msa(ref, test);
      r.msa_deg = a.degrees;
      r.skipped_pixels = a.skipped;
    }
    if (region_) r.enl = enl(test, parse_region(*region_), band_);

    const std::string text = to_json(r);
    out << text << '\n';
    if (out_) {
      std::ofstream f(*out_, std::ios::binary);
      if (!(f << text << '\n')) throw IoError("cannot write " + *out_);
    }
    return 0;
  }

 private:
  static Region parse_region(const std::string& s) {
    std::size_t v[4];
    std::istringstream is(s);
    char sep = ',';
    for (int i = 0; i < 4; ++i) {
      if (i > 0 && (!(is >> sep) || sep != ',')) throw UsageError("--region must be x,y,w,h");
      if (!(is >> v[i])) throw UsageError("--region must be x,y,w,h");
    }
    if (is >> sep) throw UsageError("--region must be x,y,w,h");
    return Region{v[0], v[1], v[2], v[3]};
  }

  std::optional<std::string> ref_, test_;
  double peak_ = 1.0;
  std::optional<std::string> region_;
  std::size_t band_ = 0;
  std::optional<std::string> out_;
};

// ---- import -------------------------------------------------------------------------------------

class Import : public Command {
 public:
  const char* name() const override { return "import"; }
  const char* description() const override { return "Convert a binary PGM into a VCR1 raster"; }

  void define(CLI::App& app) override {
    app.add_option("--in", in_, "PGM (P5) file");
    outputs_.define(app, false);
  }

  int run(std::ostream&, std::ostream&) override {
    const auto t0 = clock::now();
    const std::string& in = need(in_, "--in");
    outputs_.check();
    RunManifest m;
    m.command = name();
    m.inputs.push_back(in);
    const RasterImage img = import_pgm(in);
    m.config["in"] = in;
    outputs_.record(m.config);
    outputs_.finish(m, img, nullptr, t0);
    return 0;
  }

 private:
  std::optional<std::string> in_;
  Outputs outputs_;
};

}  // namespace

std::vector<std::unique_ptr<Command>> make_commands() {
  std::vector<std::unique_ptr<Command>> c;
  c.push_back(std::make_unique<Degrade>());
  c.push_back(std::make_unique<Despeckle>());
  c.push_back(std::make_unique<Denoise>());
  c.push_back(std::make_unique<Fuse>());
  c.push_back(std::make_unique<Eval>());
  c.push_back(std::make_unique<Import>());
  return c;
}

}  // namespace vcr::cli
