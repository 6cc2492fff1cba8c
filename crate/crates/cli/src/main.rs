mod demo;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rikit::maximal::{default_s_grid, density_criteria_report, index_report, maximal_decreasing, maximal_metric};
use rikit::metric::{capacity, minimal_hajlasz, minimal_upper_gradient, modulus, SolveResult};
use rikit::rearrange::{decreasing_rearrangement, GridFn};
use rikit::regularize::{lipschitz_truncation, pointwise_lipschitz};
use rikit::spaces::{norm, norm_samples, NormSpec};
use rikit::{Error, Ext};
use serde::Serialize;

use io::{cell, emit, ext_cell, Artifact, CliError, CliResult, Format, Profile, Table};

#[derive(Parser)]
#[command(name = "ri-kit", version, about = "Rearrangement-invariant norms, maximal operators, modulus programs and Lipschitz truncation")]
struct Cli {
    /// Seed for randomized presets and generators.
    #[arg(long, global = true, default_value_t = rikit::presets::DEFAULT_SEED)]
    seed: u64,
    /// Write artifacts into this directory instead of printing.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Largest KKT residual accepted from the convex solver.
    #[arg(long, global = true, default_value_t = rikit::metric::STALL_TOL)]
    tol: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decreasing rearrangement of weighted samples.
    Rearrange {
        #[arg(long = "fn")]
        function: PathBuf,
    },
    /// Norm of a sample set or step function.
    Norm {
        #[arg(long)]
        space: String,
        #[arg(long = "fn")]
        function: PathBuf,
    },
    /// `M_p` of a rearrangement, or the metric maximal function with `--mms`.
    Maximal {
        #[arg(long = "fn")]
        function: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        /// Metric measure space (JSON file or generator); `--fn` then holds point values.
        #[arg(long)]
        mms: Option<String>,
    },
    /// Upper fundamental and lower Boyd index estimates.
    Indices {
        #[arg(long)]
        space: String,
    },
    /// Density criteria report.
    Criteria {
        #[arg(long)]
        space: String,
        #[arg(long)]
        p: f64,
        /// The space is complete, enabling the relaxed conditions.
        #[arg(long)]
        complete: bool,
        #[arg(long, default_value_t = 1.0)]
        delta: f64,
        /// Print the human-readable table.
        #[arg(long)]
        table: bool,
    },
    /// `p`-modulus of a curve family.
    Modulus {
        #[command(flatten)]
        geo: Geometry,
        #[arg(long)]
        p: f64,
    },
    /// Sobolev capacity of a set of points.
    Capacity {
        #[command(flatten)]
        geo: Geometry,
        /// Comma-separated point indices.
        #[arg(long)]
        set: String,
        #[arg(long)]
        p: f64,
    },
    /// Minimal Hajłasz gradient, or the minimal upper gradient with `--upper`.
    Hajlasz {
        #[command(flatten)]
        geo: Geometry,
        #[arg(long = "fn")]
        function: PathBuf,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        upper: bool,
    },
    /// Lipschitz truncation of a point function.
    Regularize {
        #[command(flatten)]
        geo: Geometry,
        #[arg(long = "fn")]
        function: PathBuf,
        /// Hajłasz gradient; defaults to the pointwise Lipschitz constant.
        #[arg(long)]
        h: Option<PathBuf>,
        #[arg(long)]
        space: String,
        #[arg(long)]
        eps: f64,
        /// Triangle constant for quasi-normed spaces.
        #[arg(long, default_value_t = 2.0)]
        c_delta: f64,
    },
    /// Experiment presets.
    Demo(demo::DemoArgs),
    /// Print a generated metric measure space (`path:N`, `grid:M,N`, `tree:B,D`).
    Generate { kind: String },
}

#[derive(Args)]
struct Geometry {
    /// Metric measure space: JSON file or generator such as `grid:3,4`.
    #[arg(long)]
    mms: String,
    /// `shortest`, `subpaths`, `pairs`, `empty`, `khop:K` or a JSON file of vertex lists.
    #[arg(long, default_value = "shortest")]
    family: String,
}

/// Accepts a solver stall whose residual is within the requested tolerance.
fn accept(r: rikit::Result<SolveResult>, tol: f64) -> CliResult<SolveResult> {
    match r {
        Ok(s) if s.tolerance <= tol => Ok(s),
        Ok(s) => Err(CliError::Lib(Error::SolverStall {
            detail: format!("KKT residual {:.3e} above {tol:.0e}", s.tolerance),
            result: Box::new(s),
        })),
        Err(Error::SolverStall { result, .. }) if result.tolerance <= tol => Ok(*result),
        Err(e) => Err(e.into()),
    }
}

fn solve_artifact(name: &str, s: &SolveResult) -> CliResult<Artifact> {
    let mut t = Table::new(&["point", "minimizer", "auxiliary"]);
    for (i, x) in s.minimizer.iter().enumerate() {
        let aux = s.auxiliary.as_ref().map_or(String::new(), |a| ext_cell(a[i]));
        t.push(vec![cell(i), ext_cell(*x), aux]);
    }
    Ok(Artifact::new(name).json(s)?.table(t))
}

#[derive(Serialize)]
struct NormOutput {
    spec: NormSpec,
    value: Ext,
}

fn run(cli: Cli) -> CliResult<Vec<Artifact>> {
    let out = match cli.command {
        Command::Rearrange { function } => {
            let ustar = match io::profile(&function)? {
                Profile::Samples(s) => decreasing_rearrangement(&s),
                Profile::Steps(g) => g.rearranged(),
            };
            let mut t = Table::new(&["t_lo", "t_hi", "value"]);
            for (a, b, v) in ustar.csv_rows() {
                t.push(vec![ext_cell(a), ext_cell(b), ext_cell(v)]);
            }
            vec![Artifact::new("rearrangement").json(&ustar)?.table(t)]
        }
        Command::Norm { space, function } => {
            let spec = io::norm_spec(&space)?;
            let value = match io::profile(&function)? {
                Profile::Samples(s) => norm_samples(&s, &spec)?,
                Profile::Steps(g) => norm(&g, &spec)?,
            };
            let mut t = Table::new(&["value"]);
            t.push(vec![cell(value)]);
            vec![Artifact::new("norm").json(&NormOutput { spec, value })?.table(t)]
        }
        Command::Maximal { function, p, mms } => match mms {
            Some(m) => {
                let space = io::space(&m)?;
                let u = io::point_values(&function)?;
                let mu = maximal_metric(&space, &u, p)?;
                let mut t = Table::new(&["point", "value", "maximal"]);
                for (i, (a, b)) in u.iter().zip(&mu).enumerate() {
                    t.push(vec![cell(i), ext_cell(*a), ext_cell(*b)]);
                }
                vec![Artifact::new("maximal").json(&mu)?.table(t)]
            }
            None => {
                let ustar = match io::profile(&function)? {
                    Profile::Samples(s) => decreasing_rearrangement(&s),
                    Profile::Steps(g) => g.rearranged(),
                };
                let mut rows = Vec::new();
                for &t in ustar.breakpoints().iter().skip(1) {
                    rows.push((t, maximal_decreasing(&ustar, p, t)?));
                }
                let mut t = Table::new(&["t", "maximal"]);
                for (a, v) in &rows {
                    t.push(vec![ext_cell(*a), cell(v)]);
                }
                vec![Artifact::new("maximal").json(&rows)?.table(t)]
            }
        },
        Command::Indices { space } => {
            let spec = io::norm_spec(&space)?;
            let candidates: Vec<GridFn> = (-8..=8)
                .map(|k| GridFn::indicator(2f64.powi(k), 1.0))
                .collect::<rikit::Result<_>>()?;
            let r = index_report(&spec, &candidates, &default_s_grid())?;
            let mut t = Table::new(&["s", "k", "h"]);
            for ((s, k), (_, h)) in r.k_samples.iter().zip(&r.h_samples) {
                t.push(vec![ext_cell(*s), ext_cell(*k), ext_cell(*h)]);
            }
            vec![Artifact::new("indices").json(&r)?.table(t)]
        }
        Command::Criteria { space, p, complete, delta, table } => {
            let spec = io::norm_spec(&space)?;
            let r = density_criteria_report(&spec, p, complete, delta)?;
            if table {
                eprint!("{}", r.table());
            }
            let mut t = Table::new(&["id", "verdict", "value", "witness", "note"]);
            for c in r.conditions.iter().chain(&r.complete_conditions) {
                let verdict = serde_json::to_value(c.verdict).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
                t.push(vec![
                    c.id.clone(),
                    verdict,
                    c.value.map_or(String::new(), cell),
                    c.witness.map_or(String::new(), ext_cell),
                    c.note.clone(),
                ]);
            }
            vec![Artifact::new("criteria").json(&r)?.table(t)]
        }
        Command::Modulus { geo, p } => {
            let space = io::space(&geo.mms)?;
            let fam = io::family(&space, &geo.family)?;
            vec![solve_artifact("modulus", &accept(modulus(&space, &fam, p), cli.tol)?)?]
        }
        Command::Capacity { geo, set, p } => {
            let space = io::space(&geo.mms)?;
            let fam = io::family(&space, &geo.family)?;
            let set = io::index_list(&set)?;
            vec![solve_artifact("capacity", &accept(capacity(&space, &set, &fam, p), cli.tol)?)?]
        }
        Command::Hajlasz { geo, function, p, upper } => {
            let space = io::space(&geo.mms)?;
            let u = io::point_values(&function)?;
            let r = if upper {
                let fam = io::family(&space, &geo.family)?;
                minimal_upper_gradient(&space, &u, &fam, p)
            } else {
                minimal_hajlasz(&space, &u, p)
            };
            vec![solve_artifact("gradient", &accept(r, cli.tol)?)?]
        }
        Command::Regularize { geo, function, h, space, eps, c_delta } => {
            let mms = io::space(&geo.mms)?;
            let fam = io::family(&mms, &geo.family)?;
            let u = io::point_values(&function)?;
            let h = match h {
                Some(path) => io::point_values(&path)?,
                None => pointwise_lipschitz(&mms, &u)?,
            };
            let spec = io::norm_spec(&space)?;
            let r = lipschitz_truncation(&mms, &u, &h, &spec, Some(&fam), eps, c_delta)?;
            vec![Artifact::new("regularize").json(&r)?.table(trace_table(&r))]
        }
        Command::Demo(args) => demo::run(args, cli.seed)?,
        Command::Generate { kind } => {
            let space = rikit::metric::Mms::generate(&kind)?;
            let mut t = Table::new(&["i", "j", "distance"]);
            for (i, j) in space.edges() {
                t.push(vec![cell(i), cell(j), ext_cell(space.d(i, j))]);
            }
            vec![Artifact::new("space").json(&space)?.table(t)]
        }
    };
    Ok(out)
}

/// The level scans, one row per trial level.
fn trace_table(r: &rikit::regularize::LipTruncResult) -> Table {
    let mut t = Table::new(&["stage", "sigma", "first", "second", "pass"]);
    for row in &r.trace {
        t.push(vec![row.stage.clone(), ext_cell(row.sigma), cell(row.first), cell(row.second), cell(row.pass)]);
    }
    t
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (format, out) = (cli.format, cli.out.clone());
    if !(cli.tol.is_finite() && cli.tol > 0.0) {
        eprintln!("error: --tol must be positive");
        return ExitCode::from(2);
    }
    let result = run(cli).and_then(|arts| emit(&arts, format, out.as_ref()));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
