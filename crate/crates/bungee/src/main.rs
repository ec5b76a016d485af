use bungee::complex::ExtComplex;
use bungee::examples::Builtin;
use bungee::grid::{classify_grid, digest_hex, render_ppm, Palette, Viewport};
use bungee::orbit::{classify_point, OrbitClass, OrbitConfig, Semigroup};
use bungee::report::{Payload, PointReport, RasterMeta, Report};
use bungee::verify::{
    check_boundary_density, check_bungee_meets_boundary, check_bungee_union, check_conjugacy,
    check_escaping_intersection, check_filled_intersection, check_forward_invariance,
    check_partition, find_repelling_fixed_points, PropertyVerdict, SampleSet,
};
use clap::{Args, Parser, Subcommand};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

const EXIT_VIOLATION: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "bungee", version, about = "Classify the plane under finitely generated function semigroups")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify individual points
    Classify(ClassifyArgs),
    /// Render a viewport raster to a PPM image plus JSON sidecar
    Render(RenderArgs),
    /// Run property checks on seeded samples
    Verify(VerifyArgs),
    /// Run a named builtin example end to end
    Examples(ExamplesArgs),
}

/// Flags shared by every subcommand; unset values fall back to the
/// config file, then to defaults.
#[derive(Args, Clone)]
struct CommonArgs {
    /// Generator expression (repeatable)
    #[arg(long = "gen")]
    generators: Vec<String>,
    /// Flat key=value config file; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    /// PRNG seed for sampling
    #[arg(long)]
    seed: Option<u64>,
    /// Exploration depth D
    #[arg(long)]
    depth: Option<usize>,
    /// Beam width B
    #[arg(long)]
    beam: Option<usize>,
    /// Escape radius R_esc
    #[arg(long)]
    escape_radius: Option<f64>,
    /// Bound radius M
    #[arg(long)]
    bound_radius: Option<f64>,
    /// Divergence streak length G
    #[arg(long)]
    growth_streak: Option<usize>,
    /// Bounded-depth fraction rho
    #[arg(long)]
    bounded_fraction: Option<f64>,
    /// Overflow cap C of the extended arithmetic
    #[arg(long)]
    cap: Option<f64>,
    /// Viewport as xmin:ymin:xmax:ymax
    #[arg(long)]
    viewport: Option<String>,
    /// Resolution as WxH
    #[arg(long)]
    res: Option<String>,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Point as re+imi or re,im (repeatable)
    #[arg(long = "point", required = true)]
    points: Vec<String>,
    /// Also write the full JSON report here
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct RenderArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Output PPM path; the JSON sidecar lands next to it
    #[arg(long, required = true)]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Suite: all | partition | union | filled | escaping | invariance | fixed-points
    #[arg(long, default_value = "all")]
    suite: String,
    /// Sample count per check
    #[arg(long, default_value_t = 300)]
    samples: usize,
    /// Conjugacy coefficient a of phi(z) = az + b (checks the first generator)
    #[arg(long)]
    phi_a: Option<String>,
    /// Conjugacy coefficient b of phi(z) = az + b
    #[arg(long)]
    phi_b: Option<String>,
}

#[derive(Args)]
struct ExamplesArgs {
    /// Builtin name: reciprocal-square | exp-semigroup | exp-pair
    name: String,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Iterate order for exp-semigroup
    #[arg(long, default_value_t = 1)]
    p: u32,
    /// Exponent multiplier for exp-pair
    #[arg(long, default_value_t = 2)]
    q: u32,
    /// Directory for rendered artifacts
    #[arg(long, default_value = ".")]
    outdir: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 300)]
    samples: usize,
}

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn config(msg: impl Into<String>) -> CliError {
        CliError { code: EXIT_CONFIG, message: msg.into() }
    }

    fn io(msg: impl Into<String>) -> CliError {
        CliError { code: EXIT_IO, message: msg.into() }
    }
}

fn main() -> ExitCode {
    init_workers();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Classify(args) => cmd_classify(args),
        Command::Render(args) => cmd_render(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Examples(args) => cmd_examples(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

/// Worker-count override; the only environment variable the tool reads.
fn init_workers() {
    if let Ok(v) = std::env::var("BUNGEE_WORKERS") {
        if let Ok(n) = v.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

/// Effective configuration after merging flags over the config file over
/// defaults.
struct Effective {
    generators: Vec<String>,
    cfg: OrbitConfig,
    seed: u64,
    viewport: (f64, f64, f64, f64),
    res: (u32, u32),
}

fn load_config_file(path: &Path) -> Result<BTreeMap<String, Vec<String>>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("cannot read config file {}: {e}", path.display())))?;
    let mut map: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::config(format!(
                "config file {} line {}: expected key=value",
                path.display(),
                lineno + 1
            )));
        };
        map.entry(k.trim().to_string()).or_default().push(v.trim().to_string());
    }
    Ok(map)
}

fn file_scalar<T: std::str::FromStr>(
    map: &BTreeMap<String, Vec<String>>,
    key: &str,
) -> Result<Option<T>, CliError> {
    match map.get(key).and_then(|v| v.last()) {
        None => Ok(None),
        Some(raw) => raw
            .parse::<T>()
            .map(Some)
            .map_err(|_| CliError::config(format!("config key `{key}`: cannot parse `{raw}`"))),
    }
}

fn resolve(common: &CommonArgs) -> Result<Effective, CliError> {
    let file = match &common.config {
        Some(path) => load_config_file(path)?,
        None => BTreeMap::new(),
    };

    let generators = if !common.generators.is_empty() {
        common.generators.clone()
    } else {
        file.get("gen").cloned().unwrap_or_default()
    };

    let mut cfg = OrbitConfig::default();
    macro_rules! merge {
        ($field:ident, $flag:expr, $key:literal) => {
            if let Some(v) = $flag.or(file_scalar(&file, $key)?) {
                cfg.$field = v;
            }
        };
    }
    merge!(max_depth, common.depth, "depth");
    merge!(beam_width, common.beam, "beam");
    merge!(escape_radius, common.escape_radius, "escape-radius");
    merge!(bound_radius, common.bound_radius, "bound-radius");
    merge!(growth_streak, common.growth_streak, "growth-streak");
    merge!(bounded_fraction, common.bounded_fraction, "bounded-fraction");
    merge!(overflow_cap, common.cap, "cap");
    cfg.growth_streak = cfg.growth_streak.min(cfg.max_depth.max(1));
    cfg.validate().map_err(|e| CliError::config(e.to_string()))?;

    let seed = common.seed.or(file_scalar(&file, "seed")?).unwrap_or(0);

    let viewport_raw = common
        .viewport
        .clone()
        .or(file.get("viewport").and_then(|v| v.last()).cloned())
        .unwrap_or_else(|| "-2:-2:2:2".to_string());
    let viewport = parse_viewport(&viewport_raw)?;

    let res_raw = common
        .res
        .clone()
        .or(file.get("res").and_then(|v| v.last()).cloned())
        .unwrap_or_else(|| "256x256".to_string());
    let res = parse_res(&res_raw)?;

    Ok(Effective { generators, cfg, seed, viewport, res })
}

fn parse_viewport(s: &str) -> Result<(f64, f64, f64, f64), CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 4 {
        return Err(CliError::config(format!("viewport `{s}`: expected xmin:ymin:xmax:ymax")));
    }
    let mut v = [0.0; 4];
    for (i, p) in parts.iter().enumerate() {
        v[i] = p
            .trim()
            .parse::<f64>()
            .map_err(|_| CliError::config(format!("viewport `{s}`: bad number `{p}`")))?;
    }
    if !(v[0] < v[2] && v[1] < v[3]) {
        return Err(CliError::config(format!("viewport `{s}`: need xmin < xmax and ymin < ymax")));
    }
    Ok((v[0], v[1], v[2], v[3]))
}

fn parse_res(s: &str) -> Result<(u32, u32), CliError> {
    let (w, h) = s
        .split_once('x')
        .ok_or_else(|| CliError::config(format!("resolution `{s}`: expected WxH")))?;
    let w: u32 = w.parse().map_err(|_| CliError::config(format!("resolution `{s}`")))?;
    let h: u32 = h.parse().map_err(|_| CliError::config(format!("resolution `{s}`")))?;
    if w == 0 || h == 0 || w > 4096 || h > 4096 {
        return Err(CliError::config(format!("resolution `{s}`: limits are 1..=4096 per axis")));
    }
    Ok((w, h))
}

/// Accepts `re+imi`, `re-imi`, `imi`, `re`, or `re,im`.
fn parse_point(s: &str) -> Result<ExtComplex, CliError> {
    let bad = || CliError::config(format!("point `{s}`: expected re+imi or re,im"));
    let t = s.trim();
    if let Some((re, im)) = t.split_once(',') {
        let re: f64 = re.trim().parse().map_err(|_| bad())?;
        let im: f64 = im.trim().parse().map_err(|_| bad())?;
        return Ok(ExtComplex::finite(re, im));
    }
    if let Some(body) = t.strip_suffix('i') {
        // Split at the sign that separates the real and imaginary parts,
        // skipping a leading sign and exponent signs.
        let chars: Vec<char> = body.chars().collect();
        let mut split = None;
        for k in (1..chars.len()).rev() {
            if (chars[k] == '+' || chars[k] == '-')
                && chars[k - 1] != 'e'
                && chars[k - 1] != 'E'
            {
                split = Some(k);
                break;
            }
        }
        let (re_s, im_s) = match split {
            Some(k) => (&body[..k], &body[k..]),
            None => ("0", body),
        };
        let re: f64 = if re_s.is_empty() { 0.0 } else { re_s.parse().map_err(|_| bad())? };
        let im: f64 = match im_s {
            "+" | "" => 1.0,
            "-" => -1.0,
            _ => im_s.parse().map_err(|_| bad())?,
        };
        return Ok(ExtComplex::finite(re, im));
    }
    let re: f64 = t.parse().map_err(|_| bad())?;
    Ok(ExtComplex::finite(re, 0.0))
}

fn build_semigroup(generators: &[String]) -> Result<Semigroup, CliError> {
    if generators.is_empty() {
        return Err(CliError::config("at least one --gen expression is required"));
    }
    let refs: Vec<&str> = generators.iter().map(|s| s.as_str()).collect();
    Semigroup::from_sources(&refs).map_err(|e| CliError::config(e.to_string()))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes)
        .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))
}

fn cmd_classify(args: ClassifyArgs) -> Result<u8, CliError> {
    let eff = resolve(&args.common)?;
    let h = build_semigroup(&eff.generators)?;
    let points: Vec<(String, ExtComplex)> = args
        .points
        .iter()
        .map(|p| parse_point(p).map(|z| (p.clone(), z)))
        .collect::<Result<_, _>>()?;

    let start = Instant::now();
    let mut reports = Vec::new();
    for (raw, z) in &points {
        let d = classify_point(&h, *z, &eff.cfg);
        let witness = match d.class {
            OrbitClass::Escaping => format!(
                "escape {}",
                d.escape_witness.as_ref().map(|w| w.to_string()).unwrap_or_default()
            ),
            OrbitClass::Bounded => format!(
                "bounded {}",
                d.bounded_witness.as_ref().map(|w| w.to_string()).unwrap_or_default()
            ),
            OrbitClass::Bungee => format!(
                "escape {} / bounded {}",
                d.escape_witness.as_ref().map(|w| w.to_string()).unwrap_or_default(),
                d.bounded_witness.as_ref().map(|w| w.to_string()).unwrap_or_default()
            ),
            OrbitClass::Unresolved => "none".to_string(),
        };
        println!(
            "{raw}\t{}\tdepths={}\twitness={witness}",
            d.class,
            d.stats.per_depth.len()
        );
        reports.push(PointReport {
            input: *z,
            class: d.class,
            depths_explored: d.stats.per_depth.len(),
            escape_witness: d.escape_witness,
            bounded_witness: d.bounded_witness,
            escape_events: d.stats.total_escape_events(),
            max_modulus: d.stats.global_max_modulus(),
        });
    }

    if let Some(path) = &args.report {
        let mut report = Report::new(
            eff.generators.clone(),
            eff.cfg.clone(),
            eff.seed,
            Payload::Classification { points: reports },
        );
        report.timing("classify", start.elapsed().as_millis() as u64);
        write_bytes(path, report.to_json().as_bytes())?;
    }
    Ok(0)
}

fn raster_meta(
    raster: &bungee::grid::ClassRaster,
    ppm: &[u8],
    out: Option<&Path>,
) -> RasterMeta {
    let vp = &raster.viewport;
    let mut counts = BTreeMap::new();
    for (class, n) in raster.class_counts() {
        counts.insert(class.to_string(), n);
    }
    RasterMeta {
        width_px: vp.width_px,
        height_px: vp.height_px,
        xmin: vp.center_re - vp.half_width,
        ymin: vp.center_im - vp.half_height,
        xmax: vp.center_re + vp.half_width,
        ymax: vp.center_im + vp.half_height,
        config_hash: raster.config_hash.clone(),
        ppm_sha256: digest_hex(ppm),
        class_counts: counts,
        output_path: out.map(|p| p.display().to_string()),
    }
}

fn cmd_render(args: RenderArgs) -> Result<u8, CliError> {
    let eff = resolve(&args.common)?;
    let h = build_semigroup(&eff.generators)?;
    let (xmin, ymin, xmax, ymax) = eff.viewport;
    let vp = Viewport::from_bounds(xmin, ymin, xmax, ymax, eff.res.0, eff.res.1);

    let start = Instant::now();
    let raster = classify_grid(&h, &vp, &eff.cfg);
    let ppm = render_ppm(&raster, &Palette::default());
    write_bytes(&args.out, &ppm)?;

    let meta = raster_meta(&raster, &ppm, Some(&args.out));
    let mut report = Report::new(
        eff.generators.clone(),
        eff.cfg.clone(),
        eff.seed,
        Payload::Render { raster: meta },
    );
    report.timing("render", start.elapsed().as_millis() as u64);

    let sidecar = args.out.with_extension("json");
    write_bytes(&sidecar, report.to_json().as_bytes())?;
    println!("{}", report.to_json());
    Ok(0)
}

fn cmd_verify(args: VerifyArgs) -> Result<u8, CliError> {
    let eff = resolve(&args.common)?;
    let h = build_semigroup(&eff.generators)?;
    let (xmin, ymin, xmax, ymax) = eff.viewport;
    let known = ["all", "partition", "union", "filled", "escaping", "invariance", "fixed-points", "conjugacy"];
    if !known.contains(&args.suite.as_str()) {
        return Err(CliError::config(format!(
            "unknown suite `{}` (expected one of: {})",
            args.suite,
            known.join(", ")
        )));
    }
    let want = |name: &str| args.suite == "all" || args.suite == name;

    let start = Instant::now();
    let samples = SampleSet::rectangle(&h, xmin, ymin, xmax, ymax, args.samples, eff.seed);
    let mut verdicts: Vec<PropertyVerdict> = Vec::new();
    let mut fixed_points = Vec::new();

    if want("partition") {
        verdicts.push(check_partition(&h, &samples, &eff.cfg));
    }
    if want("union") {
        verdicts.push(check_bungee_union(&h, &samples, &eff.cfg, 3));
    }
    if want("filled") {
        verdicts.push(check_filled_intersection(&h, &samples, &eff.cfg));
    }
    if want("escaping") {
        verdicts.push(check_escaping_intersection(&h, &samples, &eff.cfg));
    }
    if want("invariance") {
        verdicts.push(check_forward_invariance(&h, &samples, &eff.cfg));
    }
    if want("conjugacy") || args.phi_a.is_some() || args.phi_b.is_some() {
        let a = match &args.phi_a {
            Some(s) => parse_point(s)?,
            None => ExtComplex::ONE,
        };
        let b = match &args.phi_b {
            Some(s) => parse_point(s)?,
            None => ExtComplex::ZERO,
        };
        if a.is_zero() {
            return Err(CliError::config("--phi-a must be nonzero"));
        }
        verdicts.push(check_conjugacy(&h.generators()[0], a, b, &samples, &eff.cfg));
    }
    if want("fixed-points") {
        let region = Viewport::from_bounds(xmin, ymin, xmax, ymax, 1, 1);
        let max_len = if h.len() > 1 { 2 } else { 3 };
        fixed_points = find_repelling_fixed_points(&h, max_len, &region, 8);
        let vp = Viewport::from_bounds(xmin, ymin, xmax, ymax, eff.res.0, eff.res.1);
        let raster = classify_grid(&h, &vp, &eff.cfg);
        verdicts.push(check_boundary_density(&raster, &fixed_points));
        verdicts.push(check_bungee_meets_boundary(&raster));
    }

    let all_pass = verdicts.iter().all(|v| v.pass);
    let mut report = Report::new(
        eff.generators.clone(),
        eff.cfg.clone(),
        eff.seed,
        Payload::Verify { verdicts, fixed_points, all_pass },
    );
    report.timing("verify", start.elapsed().as_millis() as u64);
    println!("{}", report.to_json());
    Ok(if all_pass { 0 } else { EXIT_VIOLATION })
}

fn cmd_examples(args: ExamplesArgs) -> Result<u8, CliError> {
    let order = if args.name == "exp-pair" { args.q } else { args.p };
    let builtin = Builtin::by_name(&args.name, args.lambda, order)
        .map_err(|e| CliError::config(e.to_string()))?;
    let seed = args.seed.unwrap_or(0);
    let start = Instant::now();

    std::fs::create_dir_all(&args.outdir)
        .map_err(|e| CliError::io(format!("cannot create {}: {e}", args.outdir.display())))?;

    // Canonical full-view render.
    let raster = classify_grid(&builtin.semigroup, &builtin.render_viewport, &builtin.config);
    let ppm = render_ppm(&raster, &Palette::default());
    let main_path = args.outdir.join(format!("{}.ppm", builtin.name));
    write_bytes(&main_path, &ppm)?;
    let meta = raster_meta(&raster, &ppm, Some(&main_path));

    // Boundary-tuned raster for the fixed-point proximity check.
    let boundary_raster = classify_grid(
        &builtin.boundary_semigroup,
        &builtin.boundary_viewport,
        &builtin.boundary_config,
    );
    let boundary_ppm = render_ppm(&boundary_raster, &Palette::default());
    let boundary_path = args.outdir.join(format!("{}-boundary.ppm", builtin.name));
    write_bytes(&boundary_path, &boundary_ppm)?;

    let ev = builtin.canonical_verdicts(args.samples, seed);
    let fixed_points =
        find_repelling_fixed_points(&builtin.boundary_semigroup, 1, &builtin.fixed_point_region, 10);
    let mut verdicts = vec![ev.partition, ev.forward_invariance];
    verdicts.push(check_boundary_density(&boundary_raster, &fixed_points));
    verdicts.push(check_bungee_meets_boundary(&raster));

    let all_pass = verdicts.iter().all(|v| v.pass);
    let mut report = Report::new(
        builtin.semigroup.labels().to_vec(),
        builtin.config.clone(),
        seed,
        Payload::Examples {
            example: builtin.name.clone(),
            outputs: vec![main_path.display().to_string(), boundary_path.display().to_string()],
            verdicts,
            agreement: ev.reference_agreement,
            raster: Some(meta),
            all_pass,
        },
    );
    report.timing("examples", start.elapsed().as_millis() as u64);
    println!("{}", report.to_json());
    Ok(if all_pass { 0 } else { EXIT_VIOLATION })
}
