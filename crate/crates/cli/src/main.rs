//! Command line front end: spatial and tonal data optimisation for
//! PDE-based sparse inpainting.
//!
//! Exit codes: 0 on success, 1 on validation errors (bad arguments or
//! files), 2 on numerical failures (solvers that did not converge,
//! degenerate data).

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use inpaintopt::error::Error;
use inpaintopt::grid::{mse, Image, Mask, Seed};
use inpaintopt::inpaint::{inpaint_with, SolverConfig};
use inpaintopt::io;
use inpaintopt::operators::{assemble_for, EedParams, OperatorKind};
use inpaintopt::pipeline::{
    self, parse_input_spec, parse_operator, reconstruct_from_grey, reproduce_table1,
};
use inpaintopt::spatial1d::{
    hamideh_knots, l1_interp_error, l1_spline_error, optimize_knots_interpolation,
    tonal_optimize_1d, ConvexFunction1d,
};
use inpaintopt::spatial2d::{
    analytic_mask, nonlocal_pixel_exchange, probabilistic_sparsification, AnalyticParams,
    ExchangeParams, SparsifyParams,
};
use inpaintopt::synth::synth_image;
use inpaintopt::tonal2d::{
    gvo_direct, gvo_eed, gvo_exact_line_search, gvo_fed, reconstruction_mse, EedGvoConfig,
    FedConfig, GreyValues,
};

#[derive(Parser)]
#[command(name = "inpaintopt", version, about = "Spatial and tonal data optimisation for PDE-based sparse inpainting")]
struct Cli {
    /// Seed for randomised algorithms.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Inpainting operator: homogeneous, biharmonic or eed.
    #[arg(long, global = true, default_value = "homogeneous")]
    operator: String,

    /// EED contrast parameter λ.
    #[arg(long, global = true, default_value_t = 0.8)]
    eed_lambda: f64,

    /// EED presmoothing σ.
    #[arg(long, global = true, default_value_t = 0.7)]
    eed_sigma: f64,

    /// Output file or directory (meaning depends on the subcommand).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reconstruct an image from a mask, optionally with stored tonal data.
    Inpaint {
        /// Input image: PGM path or synth:NAME:WxH.
        #[arg(long)]
        image: String,
        /// Mask file (PBM P4).
        #[arg(long)]
        mask: PathBuf,
        /// Tonal data CSV (index,value); defaults to the image values.
        #[arg(long)]
        tonal: Option<PathBuf>,
        /// Dump the assembled operator as row,col,value CSV.
        #[arg(long)]
        dump_operator: Option<PathBuf>,
    },
    /// Spatial selection by dithering the rescaled Laplacian magnitude.
    Analytic {
        #[arg(long)]
        image: String,
        #[arg(long, default_value_t = 1.6)]
        sigma: f64,
        /// Exponent s applied to the Laplacian magnitude.
        #[arg(long, default_value_t = 0.8)]
        exponent: f64,
        /// Target mask density d in (0, 1).
        #[arg(long, short = 'd', default_value_t = 0.04)]
        density: f64,
    },
    /// Probabilistic sparsification down to a target density.
    Sparsify {
        #[arg(long)]
        image: String,
        #[arg(long, short = 'p', default_value_t = 0.3)]
        p: f64,
        #[arg(long, short = 'q', default_value_t = 0.05)]
        q: f64,
        #[arg(long, short = 'd', default_value_t = 0.04)]
        density: f64,
        /// Per-iteration CSV log path.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Nonlocal pixel exchange on an existing mask.
    Exchange {
        #[arg(long)]
        image: String,
        #[arg(long)]
        mask: PathBuf,
        /// Candidate set size.
        #[arg(long, short = 'm', default_value_t = 20)]
        m: usize,
        /// Iteration budget.
        #[arg(long, default_value_t = 500_000)]
        iters: usize,
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Grey value optimisation on a fixed mask.
    Gvo {
        #[arg(long)]
        image: String,
        #[arg(long)]
        mask: PathBuf,
        /// Method: direct, els, fed or eed.
        #[arg(long, default_value = "fed")]
        method: String,
        /// Relative gradient-norm stopping factor ε.
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
        /// FED cycle length M.
        #[arg(long, short = 'M', default_value_t = 15)]
        cycle: usize,
        /// Fixed step size α (eed method).
        #[arg(long, default_value_t = 1e-2)]
        alpha: f64,
        /// Jacobian perturbation η (eed method).
        #[arg(long, default_value_t = 1.0)]
        eta: f64,
        /// Gradient iteration budget (eed method).
        #[arg(long, default_value_t = 10)]
        gvo_iters: usize,
        /// Per-iteration CSV log path.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Full pipeline from a key=value config file.
    Pipeline {
        /// Config file; see README for the key set.
        #[arg(long)]
        config: PathBuf,
    },
    /// 1D free-knot optimisation on a built-in convex test function.
    Freeknot1d {
        /// Function: exp2x3px, expx or square.
        #[arg(long, default_value = "exp2x3px")]
        func: String,
        /// Number of knots N+1.
        #[arg(long, default_value_t = 5)]
        knots: usize,
        /// Method: interp, tonal (interp + L1 regression) or hamideh.
        #[arg(long, default_value = "interp")]
        method: String,
        #[arg(long, default_value_t = 5000)]
        iters: usize,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Reproduce the 1D free-knot error table and check it against the
    /// reference values.
    Table1,
    /// Generate a synthetic test image.
    Synth {
        /// disk, quadratic, affine, steps or gauss-blobs.
        #[arg(long)]
        name: String,
        #[arg(long, default_value_t = 64)]
        width: usize,
        #[arg(long, default_value_t = 64)]
        height: usize,
    },
}

fn load_image(spec: &str) -> Result<Image, Error> {
    pipeline::load_input(&parse_input_spec(spec)?)
}

fn out_path(out: &Option<PathBuf>, default: &str) -> PathBuf {
    out.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn write_mask_with_note(mask: &Mask, path: &PathBuf) -> Result<(), Error> {
    io::write_mask(mask, path)?;
    println!("mask: {} ({} pixels, density {:.4})", path.display(), mask.count(), mask.density());
    Ok(())
}

fn write_gvo_log(path: &PathBuf, rows: &[inpaintopt::tonal2d::GvoLogRow]) -> Result<(), Error> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "iteration,grad_norm_sq,mse")?;
    for r in rows {
        writeln!(w, "{},{:.16e},{:.16e}", r.iteration, r.grad_norm_sq, r.mse)?;
    }
    Ok(())
}

fn write_iter_log(
    path: &PathBuf,
    rows: &[inpaintopt::spatial2d::IterationLogRow],
) -> Result<(), Error> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "iteration,mask_pixels,mse")?;
    for r in rows {
        writeln!(w, "{},{},{:.16e}", r.iteration, r.mask_pixels, r.mse)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    let eed = EedParams::new(cli.eed_lambda, cli.eed_sigma)?;
    let operator = parse_operator(&cli.operator, eed)?;
    let seed = Seed(cli.seed);
    let cfg = SolverConfig::default();

    match cli.command {
        Command::Inpaint { image, mask, tonal, dump_operator } => {
            let f = load_image(&image)?;
            let mask = io::read_mask(&mask)?;
            if !mask.same_shape_as_image(&f) {
                return Err(Error::DimensionMismatch("mask and image shapes differ".into()));
            }
            if let Some(path) = dump_operator {
                let op = assemble_for(operator, &f)?;
                io::write_operator_csv(&path, &op)?;
            }
            let recon = match tonal {
                Some(csv) => {
                    let entries = io::read_value_csv(&csv)?;
                    let grey = GreyValues::from_mask_entries(&entries, &mask)?;
                    reconstruct_from_grey(operator, &mask, &f, &grey, &cfg)?
                }
                None => inpaint_with(operator, &mask, &f, &cfg)?,
            };
            println!("mse = {:.6}", mse(&recon, &f)?);
            let path = out_path(&cli.out, "reconstruction.pgm");
            io::write_pgm(&recon, &path)?;
            println!("reconstruction: {}", path.display());
        }
        Command::Analytic { image, sigma, exponent, density } => {
            let f = load_image(&image)?;
            let mask = analytic_mask(&f, &AnalyticParams { sigma, s: exponent, d: density })?;
            let recon = inpaint_with(operator, &mask, &f, &cfg)?;
            println!("mse = {:.6}", mse(&recon, &f)?);
            write_mask_with_note(&mask, &out_path(&cli.out, "mask.pbm"))?;
        }
        Command::Sparsify { image, p, q, density, log } => {
            let f = load_image(&image)?;
            let params = SparsifyParams { p, q, d: density, seed };
            let outcome = probabilistic_sparsification(&f, operator, &params, &cfg)?;
            if let Some(path) = log {
                write_iter_log(&path, &outcome.log)?;
            }
            let recon = inpaint_with(operator, &outcome.mask, &f, &cfg)?;
            println!("iterations = {}", outcome.log.len());
            println!("mse = {:.6}", mse(&recon, &f)?);
            write_mask_with_note(&outcome.mask, &out_path(&cli.out, "mask.pbm"))?;
        }
        Command::Exchange { image, mask, m, iters, log } => {
            let f = load_image(&image)?;
            let mask = io::read_mask(&mask)?;
            let params = ExchangeParams { m, iterations: iters, seed };
            let outcome = nonlocal_pixel_exchange(&f, &mask, operator, &params, &cfg)?;
            if let Some(path) = log {
                write_iter_log(&path, &outcome.log)?;
            }
            println!("accepted swaps = {}", outcome.accepted_swaps);
            if let Some(last) = outcome.log.last() {
                println!("mse = {:.6}", last.mse);
            }
            write_mask_with_note(&outcome.mask, &out_path(&cli.out, "mask.pbm"))?;
        }
        Command::Gvo { image, mask, method, eps, cycle, alpha, eta, gvo_iters, log } => {
            let f = load_image(&image)?;
            let mask = io::read_mask(&mask)?;
            let (grey, rows, final_mse) = match (method.as_str(), operator) {
                ("eed", OperatorKind::Eed(params)) => {
                    let conf = EedGvoConfig {
                        alpha,
                        eta,
                        iterations: gvo_iters,
                        ..EedGvoConfig::default()
                    };
                    let o = gvo_eed(&f, &mask, params, &conf, &cfg)?;
                    (o.grey, o.log, o.final_mse)
                }
                ("eed", _) => {
                    return Err(Error::InvalidInput(
                        "gvo --method eed requires --operator eed".into(),
                    ))
                }
                (_, OperatorKind::Eed(_)) => {
                    return Err(Error::InvalidInput(
                        "the eed operator requires gvo --method eed".into(),
                    ))
                }
                ("direct", linear) => {
                    let op = assemble_for(linear, &f)?;
                    let grey = gvo_direct(&f, &mask, &op, &cfg)?;
                    let m = reconstruction_mse(&f, &mask, &op, &grey, &cfg)?;
                    (grey, Vec::new(), m)
                }
                ("els", linear) => {
                    let op = assemble_for(linear, &f)?;
                    let o = gvo_exact_line_search(&f, &mask, &op, eps, &cfg)?;
                    println!("gradient evaluations = {}", o.gradient_evaluations);
                    (o.grey, o.log, o.final_mse)
                }
                ("fed", linear) => {
                    let op = assemble_for(linear, &f)?;
                    let fed = FedConfig { m: cycle, eps, ..FedConfig::default() };
                    let o = gvo_fed(&f, &mask, &op, &fed, &cfg)?;
                    println!("gradient evaluations = {}", o.gradient_evaluations);
                    (o.grey, o.log, o.final_mse)
                }
                (other, _) => {
                    return Err(Error::InvalidInput(format!(
                        "unknown gvo method {:?} (expected direct, els, fed or eed)",
                        other
                    )))
                }
            };
            if let Some(path) = log {
                write_gvo_log(&path, &rows)?;
            }
            println!("mse = {:.6}", final_mse);
            let path = out_path(&cli.out, "tonal.csv");
            io::write_value_csv(&path, &grey.mask_entries(&mask))?;
            println!("tonal data: {}", path.display());
            let recon = reconstruct_from_grey(operator, &mask, &f, &grey, &cfg)?;
            let recon_path = path.with_extension("pgm");
            io::write_pgm(&recon, &recon_path)?;
            println!("reconstruction: {}", recon_path.display());
        }
        Command::Pipeline { config } => {
            let text = std::fs::read_to_string(&config)?;
            let mut pc = pipeline::parse_pipeline_config(&text)?;
            // Global flags override the file.
            if cli.seed != 0 {
                pc.seed = seed;
            }
            if cli.operator != "homogeneous" {
                pc.operator = operator;
            }
            if let Some(out) = &cli.out {
                pc.out_dir = out.clone();
            }
            let report = pipeline::run_pipeline(&pc)?;
            for stage in &report.stages {
                println!(
                    "{:>9}: mse = {:10.4}  density = {:.4}  iterations = {}",
                    stage.stage, stage.mse, stage.density, stage.iterations
                );
            }
            println!("report: {}", pc.out_dir.join("report.json").display());
        }
        Command::Freeknot1d { func, knots, method, iters, tol } => {
            if knots < 3 {
                return Err(Error::InvalidInput("need at least 3 knots".into()));
            }
            let f = ConvexFunction1d::by_name(&func)?;
            let intervals = knots - 1;
            let (outcome, error) = match method.as_str() {
                "interp" => {
                    let o = optimize_knots_interpolation(&f, intervals, None, iters, tol)?;
                    let e = *o.energy_history.last().unwrap();
                    (o, e)
                }
                "tonal" => {
                    let o = optimize_knots_interpolation(&f, intervals, None, iters, tol)?;
                    let spline = tonal_optimize_1d(&f, &o.knots)?;
                    let e = l1_spline_error(&f, &spline);
                    (o, e)
                }
                "hamideh" => {
                    let o = hamideh_knots(&f, intervals, None, iters, tol)?;
                    let e = l1_spline_error(&f, &o.spline);
                    (o, e)
                }
                other => {
                    return Err(Error::InvalidInput(format!(
                        "unknown method {:?} (expected interp, tonal or hamideh)",
                        other
                    )))
                }
            };
            println!("converged = {} after {} iterations", outcome.converged, outcome.iterations);
            println!("knots = {:?}", outcome.knots.positions());
            println!("l1 error = {:.6}", error);
            let path = out_path(&cli.out, "freeknot.csv");
            let mut w = std::io::BufWriter::new(std::fs::File::create(&path)?);
            writeln!(w, "iteration,l1_error")?;
            for (i, e) in outcome.energy_history.iter().enumerate() {
                writeln!(w, "{},{:.16e}", i, e)?;
            }
            println!("history: {}", path.display());
            // Interpolation errors are available for every method's knots.
            let interp_err = l1_interp_error(&f, &outcome.knots)?;
            println!("interpolation error at these knots = {:.6}", interp_err);
        }
        Command::Table1 => {
            let start = std::time::Instant::now();
            let table = reproduce_table1()?;
            println!("N+1 | no tonal | with tonal | hamideh");
            for row in &table.rows {
                println!(
                    "{:3} | {:8.3} | {:10.3} | {:7.3}   {}",
                    row.knots,
                    row.no_tonal,
                    row.with_tonal,
                    row.hamideh,
                    if row.passes.iter().all(|&p| p) { "PASS" } else { "FAIL" }
                );
            }
            println!(
                "reference check (±1%): {} in {:.2}s",
                if table.all_passed { "PASS" } else { "FAIL" },
                start.elapsed().as_secs_f64()
            );
            if !table.all_passed {
                return Err(Error::Numerical("table values outside ±1% of the reference".into()));
            }
        }
        Command::Synth { name, width, height } => {
            let img = synth_image(&name, width, height)?;
            let path = out_path(&cli.out, &format!("{}.pgm", name));
            io::write_pgm(&img, &path)?;
            println!("image: {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are not errors.
            if e.use_stderr() {
                eprint!("{}", e);
                return ExitCode::from(1);
            }
            print!("{}", e);
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}
