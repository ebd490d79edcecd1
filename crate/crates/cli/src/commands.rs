use std::path::Path;

use anyhow::{bail, Context};
use serde::Serialize;
use serde_json::json;

use rcquad::classify::{box_crossing_check, classify, one_arm_scan, pc_scan, ClassifyOptions, PcScanOptions, Verdict};
use rcquad::exact::{rect_graphs, run_corpus, Corpus, CorpusOptions};
use rcquad::measure::{Configuration, ModelParams};
use rcquad::sampler::{estimate_both, estimate_events, sample_configuration, Estimate, Schedule};
use rcquad::strip::{
    check_density_relation, check_power_monotonicity, estimate_density_p, estimate_density_q, pushing_probe,
    strip_estimate, DensityEstimate,
};

use crate::config::{RunConfig, SnapshotState};
use crate::output::{write_csv, write_json, write_text};
use crate::svg;

/// How a run ended, mapped to the process exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Success,
    VerificationFailed,
    Unreliable,
}

impl Outcome {
    pub fn code(self) -> u8 {
        match self {
            Outcome::Success => 0,
            Outcome::VerificationFailed => 3,
            Outcome::Unreliable => 4,
        }
    }
}

fn unreliable_if(flag: bool) -> Outcome {
    if flag {
        Outcome::Unreliable
    } else {
        Outcome::Success
    }
}

/// Everything a command needs besides its own section.
pub struct Ctx<'a> {
    pub cfg: &'a RunConfig,
    pub seed: u64,
    pub out: &'a Path,
}

impl Ctx<'_> {
    fn schedule(&self) -> anyhow::Result<Schedule> {
        self.cfg.schedule(self.seed)
    }

    fn classify_options(&self) -> anyhow::Result<ClassifyOptions> {
        Ok(ClassifyOptions { schedule: self.schedule()?, split: self.cfg.split(self.seed)? })
    }
}

fn estimate_row(label: &str, bc: &str, e: &Estimate) -> Vec<String> {
    vec![
        label.to_string(),
        bc.to_string(),
        e.mean.to_string(),
        e.stderr.to_string(),
        e.tau_int.to_string(),
        e.n.to_string(),
        serde_json::to_value(e.method).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default(),
        e.unreliable.to_string(),
    ]
}

const ESTIMATE_COLUMNS: [&str; 8] = ["event", "bc", "mean", "stderr", "tau_int", "samples", "method", "unreliable"];

pub fn exact_check(ctx: &Ctx) -> anyhow::Result<Outcome> {
    let sec = ctx.cfg.exact_check.clone().unwrap_or_default();
    if sec.max_edges > 24 {
        bail!("exact checks are limited to graphs with at most 24 edges");
    }
    let mut corpus = if sec.empty { Corpus::empty() } else { Corpus::standard() };
    if !sec.empty {
        corpus.graphs.retain(|g| g.region.num_edges() <= sec.max_edges);
        if sec.max_edges > 16 {
            corpus.graphs.extend(rect_graphs(sec.max_edges).into_iter().filter(|g| g.region.num_edges() > 16));
        }
        if sec.p.is_some() || sec.q.is_some() {
            let ps = sec.p.clone().unwrap_or_else(|| vec![0.2, 0.5, 0.8]);
            let qs = sec.q.clone().unwrap_or_else(|| vec![1.0, 1.5, 2.0, 4.0, 10.0]);
            corpus.params = ps
                .iter()
                .flat_map(|&p| qs.iter().map(move |&q| ModelParams::new(p, q)))
                .collect::<rcquad::Result<_>>()?;
        }
    }
    let report = run_corpus(&corpus, CorpusOptions { fkg_sign_flip: sec.fkg_sign_flip })?;
    let mut doc = json!({
        "total": report.total,
        "failed": report.failed,
        "by_identity": report.by_identity,
        "first_failure": report.first_failure(),
    });
    if report.total == 0 {
        eprintln!("warning: 0 checks");
        doc["warning"] = json!("0 checks");
    }
    write_json(ctx.out, "exact_check.json", &doc)?;
    if let Some(f) = report.first_failure() {
        eprintln!("{} failed: {} (margin {:e})", f.identity, f.context, f.margin);
        return Ok(Outcome::VerificationFailed);
    }
    eprintln!("{} checks passed", report.total);
    Ok(Outcome::Success)
}

pub fn estimate(ctx: &Ctx) -> anyhow::Result<Outcome> {
    let sec = ctx.cfg.section(&ctx.cfg.estimate, "estimate")?;
    let params = ctx.cfg.params()?;
    let schedule = ctx.schedule()?;
    let split = ctx.cfg.split(ctx.seed)?;
    if sec.events.is_empty() {
        bail!("[estimate] needs at least one event");
    }
    let mut rows = Vec::new();
    let mut unreliable = false;
    match (&sec.region, &sec.strip) {
        (Some(_), Some(_)) | (None, None) => bail!("[estimate] needs exactly one of region or strip"),
        (None, Some(strip)) => {
            let bc = format!("strip:{}:m={}", serde_json::to_value(strip.bc)?.as_str().unwrap_or(""), strip.m);
            for ev in &sec.events {
                let r = strip_estimate(strip, params, ev, &schedule, &split)?;
                if !r.converged {
                    eprintln!("warning: {} did not converge in the truncation (m = {})", ev.label(), r.m);
                }
                unreliable |= r.estimate.unreliable;
                rows.push(estimate_row(&ev.label(), &bc, &r.estimate));
            }
        }
        (Some(region_cfg), None) => {
            let region = region_cfg.build(&ctx.cfg.lattice()?)?;
            let bc = sec.bc.resolve(&region)?;
            let label = sec.bc.label();
            let ests = if sec.splitting {
                sec.events
                    .iter()
                    .map(|ev| Ok(estimate_both(&region, &bc, params, ev, &schedule, &split)?.0))
                    .collect::<rcquad::Result<Vec<_>>>()?
            } else {
                let compiled = sec.events.iter().map(|ev| ev.compile(&region)).collect::<rcquad::Result<Vec<_>>>()?;
                estimate_events(&region, &bc, params, &compiled, &schedule, sec.dynamics)?
            };
            for (ev, e) in sec.events.iter().zip(&ests) {
                unreliable |= e.unreliable;
                rows.push(estimate_row(&ev.label(), &label, e));
            }
        }
    }
    write_csv(ctx.out, "estimate.csv", &ESTIMATE_COLUMNS, &rows)?;
    Ok(unreliable_if(unreliable))
}

/// Largest region a snapshot will draw.
pub const MAX_SNAPSHOT_EDGES: usize = 100_000;

pub fn snapshot(ctx: &Ctx) -> anyhow::Result<Outcome> {
    let sec = ctx.cfg.section(&ctx.cfg.snapshot, "snapshot")?;
    let region = sec.region.build(&ctx.cfg.lattice()?)?;
    if region.num_edges() > MAX_SNAPSHOT_EDGES {
        bail!("snapshot region has {} edges, limit is {MAX_SNAPSHOT_EDGES}", region.num_edges());
    }
    if !(sec.scale > 0.0) {
        bail!("snapshot scale must be positive");
    }
    let m = region.num_edges();
    let config = match sec.state {
        SnapshotState::Open => Configuration::all_open(m),
        SnapshotState::Closed => Configuration::all_closed(m),
        SnapshotState::Sample => {
            let bc = sec.bc.resolve(&region)?;
            sample_configuration(&region, &bc, ctx.cfg.params()?, &ctx.schedule()?, sec.dynamics)?
        }
    };
    let (witness, title) = match &sec.event {
        Some(ev) => {
            let compiled = ev.compile(&region)?;
            (compiled.witness(&config), ev.label())
        }
        None => (None, format!("{}", region.rect())),
    };
    write_text(ctx.out, "snapshot.svg", &svg::render(&region, &config, witness.as_ref(), sec.scale, &title))?;
    Ok(Outcome::Success)
}

fn verdict_name(v: Verdict) -> String {
    serde_json::to_value(v).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

pub fn classify_cmd(ctx: &Ctx) -> anyhow::Result<Outcome> {
    let sec = ctx.cfg.section(&ctx.cfg.classify, "classify")?;
    let params = ctx.cfg.params()?;
    let v = classify(params, &sec.grid, &ctx.classify_options()?)?;
    write_json(ctx.out, "classify.json", &v)?;
    let rows: Vec<Vec<String>> = v
        .cells
        .iter()
        .map(|c| {
            vec![
                c.n.to_string(),
                c.free.mean.to_string(),
                c.free.stderr.to_string(),
                c.wired.mean.to_string(),
                c.wired.stderr.to_string(),
                c.bracket.as_ref().map(|b| b.gap.to_string()).unwrap_or_default(),
            ]
        })
        .collect();
    write_csv(ctx.out, "classify.csv", &["n", "free", "free_stderr", "wired", "wired_stderr", "bracket_gap"], &rows)?;
    eprintln!("verdict: {}", verdict_name(v.verdict));
    let unreliable = v.cells.iter().any(|c| c.free.unreliable || c.wired.unreliable);
    Ok(unreliable_if(unreliable))
}

pub fn pc_scan_cmd(ctx: &Ctx) -> anyhow::Result<Outcome> {
    let sec = ctx.cfg.section(&ctx.cfg.pc_scan, "pc_scan")?;
    let base = PcScanOptions {
        classify: ctx.classify_options()?,
        grid: sec.grid.clone(),
        tolerance: sec.tolerance,
        max_iter: sec.max_iter,
        lo: sec.lo,
        hi: sec.hi,
    };
    let scans = sec.q.iter().map(|&q| pc_scan(q, &base)).collect::<rcquad::Result<Vec<_>>>()?;
    write_json(ctx.out, "pc_scan.json", &scans)?;
    let rows: Vec<Vec<String>> = scans
        .iter()
        .map(|s| vec![s.q.to_string(), s.p_lo.to_string(), s.p_hi.to_string(), s.self_dual.to_string()])
        .collect();
    write_csv(ctx.out, "phase_diagram.csv", &["q", "p_lo", "p_hi", "selfdual_ref"], &rows)?;
    Ok(Outcome::Success)
}

#[derive(Serialize)]
struct DensitiesReport {
    params: ModelParams,
    p: Vec<DensityEstimate>,
    q: Vec<DensityEstimate>,
    power: Vec<rcquad::strip::PowerReport>,
    relation: Option<rcquad::strip::DensityRelationReport>,
}

pub fn densities(ctx: &Ctx) -> anyhow::Result<Outcome> {
    let sec = ctx.cfg.section(&ctx.cfg.densities, "densities")?;
    let params = ctx.cfg.params()?;
    let (schedule, split) = (ctx.schedule()?, ctx.cfg.split(ctx.seed)?);
    let mut p = Vec::new();
    let mut q = Vec::new();
    for &n in &sec.n {
        p.push(estimate_density_p(n, params, &sec.alphas, &schedule, &split)?);
        q.push(estimate_density_q(n, params, &sec.alphas, &schedule, &split)?);
    }
    let mut power = Vec::new();
    if let Some(lambda) = sec.power_lambda {
        for set in [&p, &q] {
            for a in set.iter() {
                if let Some(b) = set.iter().find(|d| d.n == a.n * lambda as i32) {
                    power.push(check_power_monotonicity(a.n, lambda, a, b)?);
                }
            }
        }
    }
    let relation = sec.relation_lambda.map(|l| check_density_relation(l, &p, &q)).transpose()?;
    let mut rows = Vec::new();
    for d in p.iter().chain(&q) {
        let kind = serde_json::to_value(d.density)?.as_str().unwrap_or("").to_string();
        let fit = d.fit.as_ref();
        rows.push(vec![
            kind,
            d.n.to_string(),
            d.value.map(|v| v.to_string()).unwrap_or_default(),
            d.value_stderr.to_string(),
            d.upper_bound.map(|v| v.to_string()).unwrap_or_default(),
            fit.map(|f| f.slope.to_string()).unwrap_or_default(),
            fit.map(|f| f.r2.to_string()).unwrap_or_default(),
            d.unreliable.to_string(),
        ]);
    }
    write_csv(
        ctx.out,
        "densities.csv",
        &["density", "n", "value", "value_stderr", "upper_bound", "slope", "r2", "unreliable"],
        &rows,
    )?;
    let unreliable = p.iter().chain(&q).any(|d| d.unreliable);
    let failed = power.iter().any(|r| !r.pass);
    write_json(ctx.out, "densities.json", &DensitiesReport { params, p, q, power, relation })?;
    Ok(if failed { Outcome::VerificationFailed } else { unreliable_if(unreliable) })
}

pub fn box_crossing(ctx: &Ctx) -> anyhow::Result<Outcome> {
    let sec = ctx.cfg.section(&ctx.cfg.box_crossing, "box_crossing")?;
    let params = ctx.cfg.params()?;
    let opts = ctx.classify_options()?;
    let reports = sec
        .rho
        .iter()
        .map(|&rho| box_crossing_check(params, rho, &sec.grid, &opts))
        .collect::<rcquad::Result<Vec<_>>>()?;
    write_json(ctx.out, "box_crossing.json", &reports)?;
    let mut rows = Vec::new();
    for r in &reports {
        for row in &r.rows {
            rows.push(vec![
                r.rho.to_string(),
                row.n.to_string(),
                row.free.mean.to_string(),
                row.free.stderr.to_string(),
                row.wired.mean.to_string(),
                row.wired.stderr.to_string(),
            ]);
        }
    }
    write_csv(ctx.out, "box_crossing.csv", &["rho", "n", "free", "free_stderr", "wired", "wired_stderr"], &rows)?;
    let unreliable = reports.iter().flat_map(|r| &r.rows).any(|r| r.free.unreliable || r.wired.unreliable);
    Ok(if reports.iter().all(|r| r.pass) { unreliable_if(unreliable) } else { Outcome::VerificationFailed })
}

pub fn one_arm(ctx: &Ctx) -> anyhow::Result<Outcome> {
    let sec = ctx.cfg.section(&ctx.cfg.one_arm, "one_arm")?;
    let r = one_arm_scan(ctx.cfg.params()?, &sec.grid, &ctx.classify_options()?)?;
    write_json(ctx.out, "one_arm.json", &r)?;
    let rows: Vec<Vec<String>> =
        r.points.iter().map(|p| estimate_row(&format!("one-arm(n={})", p.n), "wired", &p.estimate)).collect();
    write_csv(ctx.out, "one_arm.csv", &ESTIMATE_COLUMNS, &rows)?;
    Ok(unreliable_if(r.points.iter().any(|p| p.estimate.unreliable)))
}

pub fn pushing(ctx: &Ctx) -> anyhow::Result<Outcome> {
    let sec = ctx.cfg.section(&ctx.cfg.pushing_probe, "pushing_probe")?;
    let params = ctx.cfg.params()?;
    let r = pushing_probe(sec.n, &sec.alphas, params, &ctx.schedule()?, &ctx.cfg.split(ctx.seed)?)
        .context("pushing probe")?;
    write_json(ctx.out, "pushing_probe.json", &r)?;
    let rows = [("primal", &r.primal), ("dual", &r.dual)]
        .iter()
        .map(|(name, b)| vec![name.to_string(), b.c.to_string(), b.c_lower.to_string(), b.bounded_below.to_string()])
        .collect::<Vec<_>>();
    write_csv(ctx.out, "pushing_probe.csv", &["branch", "c", "c_lower", "bounded_below"], &rows)?;
    Ok(Outcome::Success)
}
