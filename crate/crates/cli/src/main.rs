use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use modal_core::clustering::{gmm_modal_partition, modal_partition, parametric_partition, Partition};
use modal_core::data::{load_csv, Columns, MixtureSpec, Sample, SeedSpec};
use modal_core::density::{
    fit_gmm_em, normal_reference_bandwidth, select_gmm_bic, KernelDensityModel, KernelSpec, NearestNeighborModel,
};
use modal_core::estimators::{
    chernoff_mode, dalenius_venter_mode, grenander_mode, kernel_mode, robertson_cryer_mode, sample_point_mode,
    DirectConfig, DirectMethod, GridSearch,
};
use modal_core::harness::{simulate_rate, RateEstimator};
use modal_core::multimodality::{
    count_modes, level_set_tree, mode_tree, persistence_diagram, sizer_map, EvalGrid, SizerMap, TreeGrid,
};
use modal_core::regression::{modal_regression_curves, ConditionalModel};
use modal_core::render::{render_plot, Plot};
use modal_core::ModalError;
use serde::Serialize;

/// Mode estimation, multimodality diagnostics, modal clustering and modal
/// regression.
#[derive(Parser, Debug)]
#[command(name = "modal", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate the mode of univariate (or, for kernel methods, multivariate) data.
    Mode(Opts),
    /// Mode tree over a decreasing bandwidth sequence.
    Tree(Opts),
    /// Cluster tree and persistence diagram of a gaussian kernel estimate.
    Persist(Opts),
    /// SiZer significance map.
    Sizer(Opts),
    /// Modal, parametric or mixture-then-modal clustering.
    Cluster(Opts),
    /// Conditional-mode regression curves.
    Modalreg(Opts),
    /// Monte Carlo convergence-rate study.
    Simulate(Opts),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Svg,
    Csv,
}

impl Format {
    fn ext(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Svg => "svg",
            Format::Csv => "csv",
        }
    }
}

#[derive(Args, Debug)]
struct Opts {
    /// CSV input file.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Columns to read, e.g. `0` or `0,1` (default: all).
    #[arg(long, default_value = "all")]
    columns: String,
    #[arg(long)]
    method: Option<String>,
    /// One or more bandwidths, comma separated.
    #[arg(long, value_delimiter = ',')]
    bandwidth: Vec<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    /// Grid size, or for `simulate` the sample sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    grid: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory; without it the result goes to standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    format: Vec<Format>,
    /// Distribution preset for `simulate`.
    #[arg(long, default_value = "gauss")]
    preset: String,
    /// Monte Carlo replicates for `simulate`.
    #[arg(long, default_value_t = 200)]
    replicates: usize,
}

enum Failure {
    Usage(String),
    Data(ModalError),
}

impl From<ModalError> for Failure {
    fn from(e: ModalError) -> Self {
        match e {
            ModalError::InvalidParameter(_) | ModalError::Unsupported(_) | ModalError::EmptySelection => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Data(other),
        }
    }
}

type Outcome<T> = Result<T, Failure>;

fn usage<T>(msg: impl Into<String>) -> Outcome<T> {
    Err(Failure::Usage(msg.into()))
}

/// Rendered outputs of one command.
struct Artifacts {
    name: &'static str,
    json: String,
    svg: Option<String>,
    csv: Option<String>,
}

impl Artifacts {
    fn get(&self, f: Format) -> Option<&str> {
        match f {
            Format::Json => Some(&self.json),
            Format::Svg => self.svg.as_deref(),
            Format::Csv => self.csv.as_deref(),
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> Outcome<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(ModalError::from)?;
    s.push('\n');
    Ok(s)
}

fn load(o: &Opts) -> Outcome<Sample> {
    let Some(path) = &o.input else {
        return usage("--input is required");
    };
    let cols = Columns::parse(&o.columns)?;
    Ok(load_csv(path, &cols)?)
}

fn need<T: Copy>(v: Option<T>, flag: &str, method: &str) -> Outcome<T> {
    match v {
        Some(v) => Ok(v),
        None => usage(format!("method '{method}' needs {flag}")),
    }
}

fn single_bandwidth(o: &Opts, s: &Sample) -> Outcome<Vec<f64>> {
    match o.bandwidth.as_slice() {
        [] => Ok(normal_reference_bandwidth(s, KernelSpec::Gaussian)?),
        [h] => Ok(vec![*h; s.dim()]),
        hs if hs.len() == s.dim() => Ok(hs.to_vec()),
        hs => usage(format!("expected 1 or {} bandwidths, got {}", s.dim(), hs.len())),
    }
}

fn log_spaced(hi: f64, lo: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| hi * (lo / hi).powf(i as f64 / (count - 1) as f64))
        .collect()
}

fn one_grid(o: &Opts, default: usize) -> Outcome<usize> {
    match o.grid.as_slice() {
        [] => Ok(default),
        [g] => Ok(*g),
        _ => usage("--grid takes a single value for this command"),
    }
}

fn data_range(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, x| (a.0.min(*x), a.1.max(*x)))
}

fn cmd_mode(o: &Opts) -> Outcome<Artifacts> {
    let s = load(o)?;
    let method = o.method.as_deref().unwrap_or("kernel");
    let json = match method {
        "chernoff" => to_json(&chernoff_mode(&s, need(o.a, "--a", method)?)?)?,
        "dv" | "dalenius-venter" => to_json(&dalenius_venter_mode(&s, need(o.k, "--k", method)?)?)?,
        "rc" | "robertson-cryer" => to_json(&robertson_cryer_mode(&s, need(o.p, "--p", method)?)?)?,
        "hsm" => to_json(&robertson_cryer_mode(&s, o.p.unwrap_or(0.5))?)?,
        "grenander" => to_json(&grenander_mode(&s, need(o.k, "--k", method)?, need(o.p, "--p", method)?)?)?,
        "kernel" | "sample-point" => {
            let h = single_bandwidth(o, &s)?;
            let m = KernelDensityModel::new(s, h, KernelSpec::Gaussian)?;
            if method == "kernel" {
                to_json(&kernel_mode(&m, &GridSearch::default())?)?
            } else {
                to_json(&sample_point_mode(&m)?)?
            }
        }
        "nn" => {
            let m = NearestNeighborModel::new(s, need(o.k, "--k", method)?)?;
            to_json(&sample_point_mode(&m)?)?
        }
        other => return usage(format!("unknown mode method '{other}'")),
    };
    Ok(Artifacts { name: "mode", json, svg: None, csv: None })
}

fn cmd_tree(o: &Opts) -> Outcome<Artifacts> {
    let s = load(o)?;
    let hs = if o.bandwidth.is_empty() {
        let h0 = normal_reference_bandwidth(&s, KernelSpec::Gaussian)?[0];
        log_spaced(2.0 * h0, h0 / 10.0, 30)
    } else {
        o.bandwidth.clone()
    };
    let t = mode_tree(&s, &hs, &TreeGrid { resolution: one_grid(o, 1024)?, range: None })?;
    Ok(Artifacts {
        name: "tree",
        svg: Some(render_plot(&Plot::ModeTree(&t))?),
        json: to_json(&t)?,
        csv: None,
    })
}

fn cmd_persist(o: &Opts) -> Outcome<Artifacts> {
    let s = load(o)?;
    let h = single_bandwidth(o, &s)?;
    let default = if s.dim() == 1 { 512 } else { 64 };
    let res = one_grid(o, default)?;
    let m = KernelDensityModel::new(s, h, KernelSpec::Gaussian)?;
    let g = EvalGrid::for_model(&m, res)?;
    let tree = level_set_tree(&g);
    let diagram = persistence_diagram(&g);
    let modes = count_modes(&m, &g)?;
    #[derive(Serialize)]
    struct Out<'a, T, D, M> {
        bandwidth: &'a [f64],
        resolution: usize,
        modes: M,
        tree: T,
        diagram: D,
    }
    let json = to_json(&Out { bandwidth: m.bandwidth(), resolution: res, modes: &modes, tree: &tree, diagram: &diagram })?;
    Ok(Artifacts {
        name: "persist",
        svg: Some(render_plot(&Plot::Persistence(&diagram))?),
        json,
        csv: None,
    })
}

fn cmd_sizer(o: &Opts) -> Outcome<Artifacts> {
    let s = load(o)?;
    let x = s.univariate_values()?;
    let hs = if o.bandwidth.is_empty() {
        let h0 = normal_reference_bandwidth(&s, KernelSpec::Gaussian)?[0];
        log_spaced(4.0 * h0, h0 / 8.0, 25)
    } else {
        o.bandwidth.clone()
    };
    let nx = one_grid(o, 200)?;
    if nx < 2 {
        return usage("--grid must be at least 2");
    }
    let (lo, hi) = data_range(x);
    let xs: Vec<f64> = (0..nx).map(|i| lo + (hi - lo) * i as f64 / (nx - 1) as f64).collect();
    let m = sizer_map(&s, &xs, &hs, 0.95)?;
    #[derive(Serialize)]
    struct Out<'a> {
        significant_modes: Vec<usize>,
        #[serde(flatten)]
        map: &'a SizerMap,
    }
    let json = to_json(&Out { significant_modes: (0..hs.len()).map(|i| m.significant_modes(i)).collect(), map: &m })?;
    Ok(Artifacts { name: "sizer", svg: Some(render_plot(&Plot::Sizer(&m))?), json, csv: None })
}

fn partition_csv(s: &Sample, p: &Partition) -> String {
    let mut out = String::new();
    let header: Vec<String> = (1..=s.dim()).map(|j| format!("x{j}")).chain(["label".to_string()]).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for (x, l) in s.points().zip(&p.labels) {
        let mut fields: Vec<String> = x.iter().map(|v| v.to_string()).collect();
        fields.push(l.map_or(String::new(), |l| l.to_string()));
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

fn cmd_cluster(o: &Opts) -> Outcome<Artifacts> {
    let s = load(o)?;
    let method = o.method.as_deref().unwrap_or("modal");
    let fit = |s: &Sample| -> Outcome<_> {
        Ok(match o.k {
            Some(l) => fit_gmm_em(s, l, SeedSpec::new(o.seed))?,
            None => select_gmm_bic(s, 6, SeedSpec::new(o.seed))?,
        })
    };
    let p = match method {
        "modal" => {
            let h = single_bandwidth(o, &s)?;
            let m = KernelDensityModel::new(s.clone(), h, KernelSpec::Gaussian)?;
            modal_partition(&m, &s)?
        }
        "parametric" => parametric_partition(&fit(&s)?, &s)?,
        "gmm-modal" => gmm_modal_partition(&fit(&s)?, &s)?,
        other => return usage(format!("unknown cluster method '{other}'")),
    };
    Ok(Artifacts {
        name: "cluster",
        svg: Some(render_plot(&Plot::Partition { partition: &p, points: &s })?),
        csv: Some(partition_csv(&s, &p)),
        json: to_json(&p)?,
    })
}

fn cmd_modalreg(o: &Opts) -> Outcome<Artifacts> {
    let s = load(o)?;
    if s.dim() != 2 {
        return Err(ModalError::DimensionMismatch { expected: 2, found: s.dim() }.into());
    }
    let (hx, hy) = match o.bandwidth.as_slice() {
        [] => {
            let h = normal_reference_bandwidth(&s, KernelSpec::Gaussian)?;
            (h[0], h[1])
        }
        [hx, hy] => (*hx, *hy),
        _ => return usage("--bandwidth for modalreg is h_x,h_y"),
    };
    let nx = one_grid(o, 100)?;
    if nx < 2 {
        return usage("--grid must be at least 2");
    }
    // 5% to 95% covariate quantiles keep the grid out of the sparse tails
    let mut xs = s.column(0);
    xs.sort_by(|a, b| a.total_cmp(b));
    let q = |t: f64| xs[((xs.len() - 1) as f64 * t).round() as usize];
    let (lo, hi) = (q(0.05), q(0.95));
    if !(hi > lo) {
        return Err(ModalError::InvalidParameter("covariate has no spread".into()).into());
    }
    let grid: Vec<f64> = (0..nx).map(|i| lo + (hi - lo) * i as f64 / (nx - 1) as f64).collect();
    let m = ConditionalModel::new(&s, hx, hy)?;
    let c = modal_regression_curves(&m, &grid)?;
    Ok(Artifacts {
        name: "modalreg",
        svg: Some(render_plot(&Plot::ModalCurves(&c))?),
        csv: Some(c.to_csv()?),
        json: to_json(&c)?,
    })
}

fn cmd_simulate(o: &Opts) -> Outcome<Artifacts> {
    let spec = MixtureSpec::preset(&o.preset)?;
    let method = o.method.as_deref().unwrap_or("kernel");
    let direct = |m: DirectMethod| -> Outcome<RateEstimator> {
        let config = DirectConfig {
            chernoff_half_width: o.a.unwrap_or(0.5),
            dv_count: o.k.unwrap_or(10),
            rc_proportion: o.p.unwrap_or(0.5),
            grenander_order: o.k.unwrap_or(10),
            grenander_power: o.p.unwrap_or(2.0),
        };
        Ok(RateEstimator::Direct { method: m, config })
    };
    let est = match method {
        "kernel" => RateEstimator::Kernel {
            kernel: KernelSpec::Gaussian,
            c: match o.bandwidth.as_slice() {
                [] => 1.0,
                [c] => *c,
                _ => return usage("--bandwidth for simulate is the constant c in h = c n^(-1/7)"),
            },
            exponent: 1.0 / 7.0,
        },
        "chernoff" => direct(DirectMethod::Chernoff)?,
        "dv" | "dalenius-venter" => direct(DirectMethod::DaleniusVenter)?,
        "rc" | "robertson-cryer" | "hsm" => direct(DirectMethod::RobertsonCryer)?,
        "grenander" => direct(DirectMethod::Grenander)?,
        other => return usage(format!("unknown simulate method '{other}'")),
    };
    let n_grid = if o.grid.is_empty() { vec![1000, 2000, 4000, 8000, 16000] } else { o.grid.clone() };
    let r = simulate_rate(&est, &spec, &o.preset, &n_grid, o.replicates, o.seed)?;
    Ok(Artifacts { name: "simulate", svg: Some(render_plot(&Plot::Rate(&r))?), json: to_json(&r)?, csv: None })
}

/// Write to a temporary file in the target directory, then rename.
fn write_atomic(dir: &Path, name: &str, content: &str) -> Outcome<()> {
    let io = |source: std::io::Error| Failure::Data(ModalError::Io { path: dir.join(name), source });
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(content.as_bytes()).map_err(io)?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file().set_permissions(std::fs::Permissions::from_mode(0o644)).map_err(io)?;
    }
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(dir.join(name)).map_err(|e| io(e.error))?;
    Ok(())
}

fn emit(a: &Artifacts, o: &Opts) -> Outcome<()> {
    for f in &o.format {
        if a.get(*f).is_none() {
            return usage(format!("'{}' produces no {} output", a.name, f.ext()));
        }
    }
    match &o.out {
        None => {
            let f = match o.format.as_slice() {
                [] => Format::Json,
                [f] => *f,
                _ => return usage("standard output takes a single --format"),
            };
            let text = a.get(f).expect("format checked above");
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|source| Failure::Data(ModalError::Io { path: "<stdout>".into(), source }))
        }
        Some(dir) => {
            std::fs::create_dir_all(dir)
                .map_err(|source| Failure::Data(ModalError::Io { path: dir.clone(), source }))?;
            let all = [Format::Json, Format::Svg, Format::Csv];
            let wanted: Vec<Format> = if o.format.is_empty() { all.to_vec() } else { o.format.clone() };
            for f in wanted {
                if let Some(text) = a.get(f) {
                    write_atomic(dir, &format!("{}.{}", a.name, f.ext()), text)?;
                }
            }
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Outcome<()> {
    let (artifacts, opts) = match &cli.command {
        Command::Mode(o) => (cmd_mode(o)?, o),
        Command::Tree(o) => (cmd_tree(o)?, o),
        Command::Persist(o) => (cmd_persist(o)?, o),
        Command::Sizer(o) => (cmd_sizer(o)?, o),
        Command::Cluster(o) => (cmd_cluster(o)?, o),
        Command::Modalreg(o) => (cmd_modalreg(o)?, o),
        Command::Simulate(o) => (cmd_simulate(o)?, o),
    };
    emit(&artifacts, opts)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nRun `modal --help` for usage.");
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
