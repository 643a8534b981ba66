use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use hilbert_fanova::covariance::LambdaSequence;
use hilbert_fanova::fanova::{build_w, decompose};
use hilbert_fanova::fmri::{block_design_events, build_design, fit_slice, read_events, read_volume, Hrf, SliceOptions};
use hilbert_fanova::gls::{fit_with, GlsSolver};
use hilbert_fanova::linalg::Mat;
use hilbert_fanova::scenario::{csv_preamble, reproduce_table, run_scenario, run_test_campaign, table_csv, ScenarioConfig, TableId};
use hilbert_fanova::simulation::{make_response, sample_error, FunctionalSample};
use hilbert_fanova::spectral::Truncation;
use hilbert_fanova::{Error, Result};

#[derive(Parser)]
#[command(name = "hfanova", version, about = "Functional ANOVA on Laplacian eigenbases")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// TOML scenario file; omitted keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Lift covariance eigenvalues below `eps * trace / n` instead of failing.
    #[arg(long, global = true)]
    pd_floor: Option<f64>,
    #[arg(long, global = true, value_enum)]
    truncation_mode: Option<TruncationMode>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TruncationMode {
    Tensor,
    Radial,
    Global,
}

#[derive(Subcommand)]
enum Command {
    /// Export eigenpairs and the quadrature grid.
    Basis,
    /// Draw one response sample and write it on the grid.
    Simulate,
    /// Simulate one sample and fit it by GLS.
    Fit,
    /// F statistics over all replicates.
    Fanova,
    /// Cramér-Wold test campaign.
    Test,
    /// Rerun a published table.
    Reproduce {
        #[arg(long)]
        table: String,
    },
    /// Block-design matrix for the fMRI experiment.
    FmriDesign {
        /// CSV rows `type,onset,duration,height`; defaults to the alternating hot/warm blocks.
        #[arg(long)]
        events: Option<PathBuf>,
    },
    /// Fit fMRI slices; each volume CSV holds one slice as `frame,node,value`.
    FmriFit {
        #[arg(long, required = true, num_args = 1..)]
        volume: Vec<PathBuf>,
        #[arg(long)]
        events: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn load_config(g: &Global) -> Result<ScenarioConfig> {
    let mut cfg = match &g.config {
        Some(path) => {
            if !path.exists() {
                return Err(Error::Io(std::io::Error::new(std::io::ErrorKind::NotFound, format!("{}", path.display()))));
            }
            ScenarioConfig::load(path)?
        }
        None => ScenarioConfig::default(),
    };
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(eps) = g.pd_floor {
        cfg.pd_floor = Some(eps);
    }
    if let Some(mode) = g.truncation_mode {
        let count = cfg.truncation.count();
        cfg.truncation = match mode {
            TruncationMode::Global => Truncation::Global { count },
            TruncationMode::Radial => Truncation::Radial { count },
            TruncationMode::Tensor => match cfg.truncation {
                t @ Truncation::Tensor { .. } => t,
                _ => {
                    let side = (count as f64).sqrt().round() as usize;
                    if side * side != count {
                        return Err(Error::Config(format!("tensor mode needs a square count, got {count}")));
                    }
                    Truncation::Tensor { tr1: side, tr2: side }
                }
            },
        };
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    if let Some(t) = cli.global.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let cfg = load_config(&cli.global)?;
    let out = &cli.global.out;
    fs::create_dir_all(out)?;
    fs::write(out.join("config.resolved.toml"), cfg.to_toml())?;
    let hash = cfg.hash();
    match cli.command {
        Command::Basis => cmd_basis(&cfg, &hash, out),
        Command::Simulate => cmd_simulate(&cfg, &hash, out),
        Command::Fit => cmd_fit(&cfg, &hash, out),
        Command::Fanova => cmd_fanova(&cfg, &hash, out),
        Command::Test => cmd_test(&cfg, &hash, out),
        Command::Reproduce { table } => {
            let id: TableId = table.parse()?;
            let results = reproduce_table(id, cfg.seed)?;
            let path = out.join(format!("table_{id}.csv"));
            fs::write(&path, table_csv(id, cfg.seed, &results))?;
            let passed = results.iter().filter(|r| r.pass).count();
            println!("{id}: {passed}/{} rows inside the acceptance band -> {}", results.len(), path.display());
            Ok(())
        }
        Command::FmriDesign { events } => cmd_fmri_design(&cfg, &hash, out, events.as_deref()),
        Command::FmriFit { volume, events } => cmd_fmri_fit(&cfg, &hash, out, &volume, events.as_deref()),
    }
}

fn write(out: &Path, name: &str, body: String) -> Result<()> {
    let path = out.join(name);
    fs::write(&path, body)?;
    info!("wrote {}", path.display());
    println!("{}", path.display());
    Ok(())
}

/// `row,col,value` long format, 1-based.
fn long_csv(preamble: String, header: &str, m: &Mat) -> String {
    let mut s = preamble;
    s.push_str(header);
    s.push('\n');
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let _ = writeln!(s, "{},{},{:e}", i + 1, j + 1, m[(i, j)]);
        }
    }
    s
}

fn cmd_basis(cfg: &ScenarioConfig, hash: &str, out: &Path) -> Result<()> {
    let basis = cfg.basis()?;
    let mut b = csv_preamble("basis", hash, "eigenvalue=1/length^2");
    b.push_str("index,m1,m2,m3,eigenvalue,normalization\n");
    for (i, p) in basis.pairs.iter().enumerate() {
        let c = p.index.components();
        let _ = writeln!(b, "{},{},{},{},{:e},{:e}", i + 1, c[0], c[1], c[2], p.eigenvalue, p.normalization);
    }
    write(out, "basis.csv", b)?;
    let mut g = csv_preamble("grid", hash, "x,y=length weight=length^2");
    g.push_str("node_id,x,y,weight\n");
    for (j, (pt, w)) in basis.grid.points.iter().zip(&basis.grid.weights).enumerate() {
        let _ = writeln!(g, "{},{:e},{:e},{:e}", j + 1, pt[0], pt[1], w);
    }
    write(out, "grid.csv", g)?;
    println!("TR = {}, nodes = {}, Gram deviation = {:e}", basis.tr(), basis.nodes(), basis.gram_deviation());
    Ok(())
}

struct Simulated {
    basis: hilbert_fanova::spectral::SpectralBasis,
    lambda: LambdaSequence,
    truth: hilbert_fanova::simulation::BetaTruth,
    x: Mat,
    response: FunctionalSample,
}

fn simulate(cfg: &ScenarioConfig) -> Result<Simulated> {
    let basis = cfg.basis()?;
    let lambda = cfg.lambda(&basis)?;
    let truth = cfg.beta(&basis)?;
    let x = cfg.design()?;
    let error = sample_error(&lambda, &basis, cfg.seed, 0)?;
    let coefficients = make_response(&x, &truth.coefficients.transpose(), error.coefficients.as_ref().expect("sampled"))?;
    let values = make_response(&x, &truth.fields, &error.values)?;
    Ok(Simulated { basis, lambda, truth, x, response: FunctionalSample { values, coefficients: Some(coefficients) } })
}

fn cmd_simulate(cfg: &ScenarioConfig, hash: &str, out: &Path) -> Result<()> {
    let s = simulate(cfg)?;
    write(out, "design.csv", long_csv(csv_preamble("design", hash, "dimensionless"), "obs,component,value", &s.x))?;
    write(out, "beta.csv", long_csv(csv_preamble("beta", hash, "field"), "component,node,value", &s.truth.fields))?;
    write(out, "response.csv", long_csv(csv_preamble("response", hash, "field"), "obs,node,value", &s.response.values))?;
    Ok(())
}

fn cmd_fit(cfg: &ScenarioConfig, hash: &str, out: &Path) -> Result<()> {
    let s = simulate(cfg)?;
    let solver = GlsSolver::new(&s.x, &s.lambda)?;
    let fit = fit_with(&solver, &s.response, &s.basis)?;
    write(out, "beta_hat.csv", long_csv(csv_preamble("beta_hat", hash, "field"), "component,node,value", &fit.beta_fields))?;
    let beta_err = (&fit.beta_coefficients - &s.truth.coefficients).norm_squared();
    let resid = fit.residual_coefficients.norm_squared();
    let mut summary = csv_preamble("fit", hash, "squared_h_norm");
    summary.push_str("beta_error,residual_norm\n");
    let _ = writeln!(summary, "{beta_err:e},{resid:e}");
    write(out, "fit_summary.csv", summary)?;
    let f = decompose(&solver, &fit.response_coefficients, &build_w(&s.lambda)?)?;
    println!("squared beta error {beta_err:.4e}, F = {:.4e}", f.f_value);
    Ok(())
}

fn cmd_fanova(cfg: &ScenarioConfig, hash: &str, out: &Path) -> Result<()> {
    let o = run_scenario(cfg)?;
    let mut s = csv_preamble("fanova", hash, "f=dimensionless errors=squared_h_norm");
    s.push_str("replicate,f_value,beta_error,response_error\n");
    for (i, r) in o.replicates.iter().enumerate() {
        let _ = writeln!(s, "{},{:e},{:e},{:e}", i + 1, r.f_value, r.beta_error, r.response_error);
    }
    write(out, "fanova.csv", s)?;
    println!(
        "{}: EFMSE_beta = {:.3e}, EFMSE_Y = {:.3e}, median F = {:.4e} ({} infinite)",
        cfg.id, o.efmse_beta, o.efmse_y, o.f.median, o.f.infinite
    );
    Ok(())
}

fn cmd_test(cfg: &ScenarioConfig, hash: &str, out: &Path) -> Result<()> {
    let summaries = run_test_campaign(cfg)?;
    let mut s = csv_preamble("test", hash, "fraction");
    s.push_str("direction,success_rate,mean_p_value\n");
    for d in &summaries {
        let _ = writeln!(s, "{},{},{:e}", d.direction_id + 1, d.success_rate, d.mean_p_value);
        println!("direction {}: {:.2}% rejections, mean p = {:.3e}", d.direction_id + 1, 100.0 * d.success_rate, d.mean_p_value);
    }
    write(out, "test.csv", s)
}

fn design_for(cfg: &ScenarioConfig, events: Option<&Path>) -> Result<Mat> {
    let events = match events {
        Some(p) => read_events(fs::File::open(p)?)?,
        None => block_design_events(),
    };
    build_design(&events, &Hrf::new(cfg.fmri.hrf)?, &cfg.fmri.timing, cfg.fmri.drift)
}

fn cmd_fmri_design(cfg: &ScenarioConfig, hash: &str, out: &Path, events: Option<&Path>) -> Result<()> {
    let x = design_for(cfg, events)?;
    let times = cfg.fmri.timing.times();
    let mut s = csv_preamble("fmri_design", hash, "time=s");
    s.push_str("frame,time");
    for j in 0..x.ncols() {
        let _ = write!(s, ",column{}", j + 1);
    }
    s.push('\n');
    for (i, t) in times.iter().enumerate() {
        let _ = write!(s, "{},{}", i + 1, t);
        for j in 0..x.ncols() {
            let _ = write!(s, ",{:e}", x[(i, j)]);
        }
        s.push('\n');
    }
    write(out, "fmri_design.csv", s)
}

fn cmd_fmri_fit(cfg: &ScenarioConfig, hash: &str, out: &Path, volumes: &[PathBuf], events: Option<&Path>) -> Result<()> {
    let x = design_for(cfg, events)?;
    let basis = cfg.basis()?;
    let options = SliceOptions { alpha: cfg.alpha, directions: cfg.directions, seed: cfg.seed };
    let mut s = csv_preamble("fmri_fit", hash, "f=dimensionless p=probability");
    s.push_str("slice,frames,nodes,f_value,p_value_mean,p_value_min,rejections,directions\n");
    for (i, path) in volumes.iter().enumerate() {
        let values = read_volume(fs::File::open(path)?)?;
        if values.ncols() != basis.nodes() {
            return Err(Error::Config(format!("{} has {} nodes, the basis grid has {}", path.display(), values.ncols(), basis.nodes())));
        }
        let report = fit_slice(&x, &FunctionalSample { values, coefficients: None }, &basis, options)?;
        let ps: Vec<f64> = report.tests.iter().map(|t| t.p_value).collect();
        let mean = ps.iter().sum::<f64>() / ps.len().max(1) as f64;
        let min = ps.iter().cloned().fold(f64::INFINITY, f64::min);
        let rejections = report.tests.iter().filter(|t| t.reject).count();
        let _ = writeln!(s, "{},{},{},{:e},{:e},{:e},{},{}", i + 1, x.nrows(), basis.nodes(), report.fanova.f_value, mean, min, rejections, ps.len());
    }
    write(out, "fmri_report.csv", s)
}
