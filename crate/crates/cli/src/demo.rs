//! `demo` presets: thin wrappers over `rikit::presets` that tabulate rows.

use clap::Args;
use rikit::presets::{self, HERZ_RIESZ_ENVELOPES, LIP_TRUNC_EPS};

use crate::io::{cell, ext_cell, usage, Artifact, CliResult, Table};

#[derive(Args)]
pub struct DemoArgs {
    /// One of lorentz-embedding, herz-riesz, criteria-sweep, modulus-grid,
    /// lip-trunc-sweep, marcinkiewicz-gap.
    #[arg(value_parser = clap::builder::PossibleValuesParser::new(presets::PRESETS))]
    preset: String,
    /// Random instances (lorentz-embedding, lip-trunc-sweep).
    #[arg(long)]
    count: Option<u64>,
    /// Seeds per space (herz-riesz).
    #[arg(long, default_value_t = 100)]
    seeds: u64,
    /// Space generator (herz-riesz); all bundled spaces when omitted.
    #[arg(long)]
    space: Option<String>,
    /// Exponent (herz-riesz); comma-separated list (modulus-grid).
    #[arg(long)]
    p: Option<String>,
    #[arg(long, default_value_t = 3.0)]
    p0: f64,
    #[arg(long, default_value_t = 4.0)]
    q0: f64,
    /// `M,N` grid (modulus-grid) or radial points (marcinkiewicz-gap).
    #[arg(long)]
    grid: Option<String>,
    #[arg(long, default_value_t = 2.0)]
    alpha: f64,
    #[arg(long, default_value_t = 3)]
    n: u32,
}

fn floats(text: &str) -> CliResult<Vec<f64>> {
    text.split(',').map(|s| s.trim().parse().map_err(|_| usage(format!("bad number {s:?}")))).collect()
}

pub fn run(a: DemoArgs, seed: u64) -> CliResult<Vec<Artifact>> {
    Ok(match a.preset.as_str() {
        "lorentz-embedding" => {
            let rows = presets::lorentz_embedding(a.count.unwrap_or(10_000), seed)?;
            let mut t = Table::new(&["index", "q", "p", "ratio", "bound", "violation"]);
            for r in &rows {
                t.push(vec![cell(r.index), ext_cell(r.q), ext_cell(r.p), ext_cell(r.ratio), ext_cell(r.bound), cell(r.violation)]);
            }
            vec![Artifact::new("lorentz-embedding").json(&rows)?.table(t)]
        }
        "herz-riesz" => {
            let p = a.p.as_deref().map(str::parse::<f64>).transpose().map_err(|_| usage("bad --p"))?.unwrap_or(1.0);
            let spaces: Vec<String> = match a.space {
                Some(s) => vec![s],
                None => HERZ_RIESZ_ENVELOPES.iter().map(|e| e.0.to_string()).collect(),
            };
            let mut t = Table::new(&["space", "seed", "min_ratio", "max_ratio"]);
            let mut all = Vec::new();
            for s in &spaces {
                let rows = presets::herz_riesz(s, seed..seed + a.seeds, p)?;
                for r in &rows {
                    t.push(vec![s.clone(), cell(r.seed), ext_cell(r.min_ratio), ext_cell(r.max_ratio)]);
                }
                all.push((s.clone(), rows));
            }
            vec![Artifact::new("herz-riesz").json(&all)?.table(t)]
        }
        "criteria-sweep" => {
            let rows = presets::criteria_sweep(a.p0, a.q0, &presets::default_sweep_ps(a.p0))?;
            let mut t = Table::new(&["p", "complete", "density", "route", "verdicts", "implication_violations"]);
            for r in &rows {
                let verdicts: Vec<String> = r
                    .verdicts
                    .iter()
                    .map(|(id, v)| format!("{id}={}", serde_json::to_value(v).ok().and_then(|x| x.as_str().map(String::from)).unwrap_or_default()))
                    .collect();
                t.push(vec![
                    ext_cell(r.p),
                    cell(r.complete_space),
                    cell(r.density),
                    r.route.clone().unwrap_or_default(),
                    verdicts.join(" "),
                    cell(r.implication_violations),
                ]);
            }
            vec![Artifact::new("criteria-sweep").json(&rows)?.table(t)]
        }
        "modulus-grid" => {
            let (m, n) = match a.grid.as_deref().unwrap_or("4,6").split_once(',') {
                Some((m, n)) => (m.trim().parse().map_err(|_| usage("bad --grid"))?, n.trim().parse().map_err(|_| usage("bad --grid"))?),
                None => return Err(usage("modulus-grid needs --grid M,N")),
            };
            let ps = floats(a.p.as_deref().unwrap_or("1.5,2,3,4"))?;
            let rows = presets::modulus_grid(m, n, &ps)?;
            let mut t = Table::new(&["p", "curves", "modulus", "closed_form"]);
            for r in &rows {
                t.push(vec![ext_cell(r.p), cell(r.curves), ext_cell(r.modulus), ext_cell(r.closed_form)]);
            }
            vec![Artifact::new("modulus-grid").json(&rows)?.table(t)]
        }
        "lip-trunc-sweep" => {
            let rows = presets::lip_trunc_sweep(a.count.unwrap_or(20), seed, &LIP_TRUNC_EPS)?;
            let mut t =
                Table::new(&["instance", "spec", "eps", "sigma0", "sigma", "e_count", "e_measure", "norm_gap", "invariants_hold"]);
            for r in &rows {
                t.push(vec![
                    cell(r.instance),
                    r.spec.clone(),
                    ext_cell(r.eps),
                    ext_cell(r.sigma0),
                    ext_cell(r.sigma),
                    cell(r.e_count),
                    ext_cell(r.e_measure),
                    cell(r.norm_gap),
                    cell(r.invariants_hold),
                ]);
            }
            vec![Artifact::new("lip-trunc-sweep").json(&rows)?.table(t)]
        }
        "marcinkiewicz-gap" => {
            let grid = a.grid.as_deref().unwrap_or("200").trim().parse().map_err(|_| usage("bad --grid"))?;
            let rows = presets::marcinkiewicz_gap(a.alpha, a.n, grid)?;
            let mut t = Table::new(&["sigma", "weak_gap", "gradient", "lp_gap", "lp_gradient"]);
            for r in &rows {
                t.push(vec![ext_cell(r.sigma), cell(r.weak_gap), cell(r.weak_gradient), cell(r.lp_gap), cell(r.lp_gradient)]);
            }
            vec![Artifact::new("marcinkiewicz-gap").json(&rows)?.table(t)]
        }
        other => return Err(usage(format!("unknown preset {other:?}"))),
    })
}
