use std::fmt;
use std::path::Path;

use anyhow::{Context, Result};
use chebyshev_race::constructions::{self, Caps};
use chebyshev_race::density::{delta_r_way, delta_three_way, delta_two_way};
use chebyshev_race::exec::Exec;
use chebyshev_race::field::{FieldModel, FieldSpec};
use chebyshev_race::gaussian::{mvn_cdf, MvnOptions};
use chebyshev_race::group::GroupElement;
use chebyshev_race::race::{gamma_matrix, sigma_matrix, to_matrix, RaceSpec};
use chebyshev_race::simulator::{empirical_delta, sample_mu, SimConfig};
use chebyshev_race::zeros::{find_zeros_by_conductor, Tail, ZeroArchive, ZeroSumMode};
use num_bigint::BigUint;
use serde_json::{json, Value};

use crate::cache::Cache;
use crate::output::float;
use crate::{
    CapArgs, Cli, Command, ConstructCommand, FamilyCommand, ModeArg, OrthantArgs, RaceArgs, RaceCommand,
    SimulateArgs, TailArg, ZerosCommand,
};

/// Bad command-line input detected before reaching the library.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(Usage(msg.into()).into())
}

/// 2 for validation errors, 1 for failed computations.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.is::<Usage>() {
            return 2;
        }
        if let Some(err) = cause.downcast_ref::<chebyshev_race::Error>() {
            return if err.is_validation() { 2 } else { 1 };
        }
    }
    1
}

struct Ctx<'a> {
    cli: &'a Cli,
    exec: Exec,
}

pub fn run(cli: &Cli) -> Result<Value> {
    let ctx = Ctx {
        cli,
        exec: if cli.sequential { Exec::Sequential } else { Exec::Parallel },
    };
    match &cli.command {
        Command::Race(RaceCommand::Stats(a)) => race_stats(&ctx, a),
        Command::Race(RaceCommand::Density { race, samples }) => race_density(&ctx, race, *samples),
        Command::Family(FamilyCommand::Report { specs, tower }) => family_report(specs.as_deref(), tower.as_deref()),
        Command::Zeros(ZerosCommand::Find { q, field, height, tol, out }) => {
            zeros_find(&ctx, *q, field.as_deref(), *height, *tol, out.as_deref())
        }
        Command::Zeros(ZerosCommand::Ingest { field, file }) => zeros_ingest(field, file),
        Command::Simulate(a) => simulate(&ctx, a),
        Command::Orthant(a) => orthant(&ctx, a),
        Command::Construct(c) => construct(&ctx, c),
    }
}

pub fn load_field(arg: &str) -> Result<FieldModel> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg).with_context(|| format!("reading field spec {arg}"))?
    };
    Ok(FieldSpec::parse(&text)?.build()?)
}

/// Split on commas that are not inside parentheses.
fn split_top_level(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for ch in s.chars() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(std::mem::take(&mut cur));
                continue;
            }
            _ => {}
        }
        cur.push(ch);
    }
    out.push(cur);
    out.into_iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
}

fn parse_classes(field: &FieldModel, args: &[String]) -> Result<Vec<GroupElement>> {
    args.iter()
        .flat_map(|a| split_top_level(a))
        .map(|c| Ok(field.group().parse_element(&c)?))
        .collect()
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| Usage(format!("not a number: {v:?}")).into()))
        .collect()
}

fn build_race(ctx: &Ctx, a: &RaceArgs) -> Result<(RaceSpec, Value)> {
    let field = load_field(&a.field)?;
    let classes = parse_classes(&field, &a.classes)?;
    let (mut spec, source) = match a.mode {
        ModeArg::Asymptotic => {
            if a.archive.is_some() {
                return usage("--archive only applies to --mode zeros");
            }
            (RaceSpec::asymptotic(field, classes)?, json!("asymptotic"))
        }
        ModeArg::Zeros => {
            let archive = match &a.archive {
                Some(p) => ZeroArchive::ingest(p, &field)?,
                None => Cache::locate(ctx.cli.cache_dir.as_deref()).archive(&field, a.height, ctx.exec)?.0,
            };
            let tail = match a.tail {
                TailArg::None => Tail::None,
                TailArg::Density => Tail::DensityTail,
            };
            let h = archive.height();
            (
                RaceSpec::new(field, classes, ZeroSumMode::ZeroData { tail }, Some(&archive))?,
                json!(format!("zeros (height {h})")),
            )
        }
    };
    for c in &a.central {
        let Some((label, k)) = c.split_once('=') else {
            return usage(format!("--central expects LABEL=K, got {c:?}"));
        };
        let k: u32 = k.parse().map_err(|_| Usage(format!("bad central order in {c:?}")))?;
        spec.set_central_order(label, k)?;
    }
    Ok((spec, source))
}

fn classes_value(spec: &RaceSpec) -> Value {
    json!(spec.classes().iter().map(|c| c.to_string()).collect::<Vec<_>>())
}

fn race_stats(ctx: &Ctx, a: &RaceArgs) -> Result<Value> {
    let (spec, mode) = build_race(ctx, a)?;
    let report = spec.covariance_report()?;
    let means: Vec<f64> = spec
        .race_functions()
        .iter()
        .map(|t| spec.mean_e(t))
        .collect::<chebyshev_race::Result<_>>()?;
    let mut out = json!({
        "field": spec.field().spec().canonical(),
        "mode": mode,
        "classes": classes_value(&spec),
        "N_L": spec.n_l(),
        "E": means,
    });
    let extra = serde_json::to_value(&report)?;
    out.as_object_mut().unwrap().extend(extra.as_object().unwrap().clone());
    Ok(out)
}

fn race_density(ctx: &Ctx, a: &RaceArgs, samples: usize) -> Result<Value> {
    let (spec, mode) = build_race(ctx, a)?;
    let opts = MvnOptions {
        points: samples,
        seed: ctx.cli.seed,
        exec: ctx.exec,
        ..MvnOptions::default()
    };
    let est = match spec.classes().len() {
        2 => delta_two_way(&spec)?,
        3 => delta_three_way(&spec)?,
        _ => delta_r_way(&spec, &opts)?,
    };
    Ok(json!({
        "field": spec.field().spec().canonical(),
        "mode": mode,
        "classes": classes_value(&spec),
        "ordering": "pi(x; C_1) < pi(x; C_2) < ...",
        "formula": est.formula,
        "value": est.value,
        "stderr": est.stderr,
        "gaussian_value": est.gaussian_value,
        "remainder_scale": est.remainder_scale,
        "B": est.report.b,
        "Delta": est.report.delta,
        "lambda_min": est.report.lambda_min,
        "diagnostic": est.error_diagnostic,
        "seed": ctx.cli.seed,
    }))
}

fn report_rows(names: Vec<String>, fields: &[FieldModel]) -> Result<Value> {
    let reps = constructions::moderacy_report(fields)?;
    Ok(Value::Array(
        names
            .into_iter()
            .zip(reps)
            .map(|(name, r)| {
                json!({
                    "depth": r.depth,
                    "field": name,
                    "degree": r.degree,
                    "log_d": r.log_discriminant,
                    "r_G": r.r_g,
                    "two_moderacy_index": r.two_moderacy_index,
                    "uniform_criterion": r.uniform_criterion,
                    "u_min": r.u_range.first().copied().unwrap_or(0.0),
                    "u_max": r.max_abs_u(),
                })
            })
            .collect(),
    ))
}

fn family_report(specs: Option<&Path>, tower: Option<&str>) -> Result<Value> {
    match (specs, tower) {
        (Some(dir), None) => {
            let mut paths: Vec<_> = std::fs::read_dir(dir)
                .with_context(|| format!("reading {}", dir.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "json"))
                .collect();
            paths.sort();
            if paths.is_empty() {
                return usage(format!("no *.json field specs in {}", dir.display()));
            }
            let fields = paths
                .iter()
                .map(|p| load_field(&p.to_string_lossy()))
                .collect::<Result<Vec<_>>>()?;
            let names = paths
                .iter()
                .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
                .collect();
            report_rows(names, &fields)
        }
        (None, Some(list)) => {
            let primes = list
                .split(',')
                .map(|s| s.trim().parse::<BigUint>().map_err(|_| Usage(format!("not a prime: {s:?}")).into()))
                .collect::<Result<Vec<_>>>()?;
            let fields = constructions::multiquadratic_tower(&primes)?;
            let names = fields.iter().map(|f| f.spec().canonical()).collect();
            report_rows(names, &fields)
        }
        _ => usage("give exactly one of --specs or --tower"),
    }
}

fn zeros_find(ctx: &Ctx, q: Option<u64>, field: Option<&str>, height: f64, tol: f64, out: Option<&Path>) -> Result<Value> {
    if let Some(q) = q {
        let found = find_zeros_by_conductor(q, height, tol)?;
        if let Some(path) = out {
            let mut text = format!("height={height}\n");
            for (d, gammas) in &found {
                for g in gammas {
                    text.push_str(&format!("{d},{g:?}\n"));
                }
            }
            std::fs::write(path, text)?;
        }
        let rows = found
            .iter()
            .flat_map(|(d, gs)| gs.iter().map(move |g| json!({"discriminant": d, "gamma": float(*g)})))
            .collect();
        return Ok(Value::Array(rows));
    }
    let field = load_field(field.expect("clap requires --q or --field"))?;
    let archive = ZeroArchive::compute(&field, height, ctx.exec)?;
    if let Some(path) = out {
        archive.write(path)?;
    }
    archive_summary(&field, &archive)
}

fn archive_summary(field: &FieldModel, archive: &ZeroArchive) -> Result<Value> {
    Ok(Value::Array(
        archive
            .labels()
            .map(|l| {
                let g = archive.ordinates(l).unwrap_or(&[]);
                json!({
                    "field": field.fingerprint(),
                    "height": archive.height(),
                    "label": l,
                    "zeros": g.len(),
                    "first": g.first().copied(),
                })
            })
            .collect(),
    ))
}

fn zeros_ingest(field: &str, file: &Path) -> Result<Value> {
    let field = load_field(field)?;
    let archive = ZeroArchive::ingest(file, &field)?;
    archive_summary(&field, &archive)
}

fn simulate(ctx: &Ctx, a: &SimulateArgs) -> Result<Value> {
    let field = load_field(&a.field)?;
    let classes = parse_classes(&field, &a.classes)?;
    let archive = match &a.archive {
        Some(p) => ZeroArchive::ingest(p, &field)?,
        None => Cache::locate(ctx.cli.cache_dir.as_deref()).archive(&field, a.height, ctx.exec)?.0,
    };
    let archive = archive.truncated(a.height)?;
    let spec = RaceSpec::new(field, classes, ZeroSumMode::ZeroData { tail: Tail::None }, Some(&archive))?;
    let config = SimConfig {
        height: a.height,
        samples: a.samples,
        seed: ctx.cli.seed,
        exec: ctx.exec,
    };
    let m = sample_mu(&spec, &archive, &config)?;
    let (emp, se) = empirical_delta(&m)?;
    let formula = delta_r_way(&spec, &MvnOptions { seed: ctx.cli.seed, exec: ctx.exec, ..MvnOptions::default() })?;
    Ok(json!({
        "classes": classes_value(&spec),
        "height": a.height,
        "samples": a.samples,
        "empirical": emp,
        "stderr": se,
        "formula": formula.value,
        "formula_stderr": formula.stderr,
        "discrepancy": emp - formula.value,
        "seed": ctx.cli.seed,
    }))
}

fn parse_sigma(s: &str) -> Result<nalgebra::DMatrix<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let dim = |t: &str| t.parse::<usize>().map_err(|_| Usage(format!("bad dimension in {s:?}")));
    match parts.as_slice() {
        ["gamma", r] => Ok(gamma_matrix(dim(r)?)),
        ["sigma", r, rho] => {
            let rho: f64 = rho.parse().map_err(|_| Usage(format!("bad rho in {s:?}")))?;
            Ok(sigma_matrix(dim(r)?, rho))
        }
        _ => {
            let text = std::fs::read_to_string(s).with_context(|| format!("reading matrix file {s}"))?;
            let rows = text
                .lines()
                .filter(|l| !l.trim().is_empty())
                .map(|l| {
                    l.split(|c: char| c == ',' || c.is_whitespace())
                        .filter(|t| !t.is_empty())
                        .map(|t| t.parse::<f64>().map_err(|_| Usage(format!("bad matrix entry {t:?}")).into()))
                        .collect::<Result<Vec<f64>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            if rows.is_empty() || rows.iter().any(|r| r.len() != rows.len()) {
                return usage("matrix file must hold a square matrix");
            }
            Ok(to_matrix(&rows))
        }
    }
}

fn orthant(ctx: &Ctx, a: &OrthantArgs) -> Result<Value> {
    let sigma = parse_sigma(&a.sigma)?;
    let x = parse_list(&a.x)?;
    let opts = MvnOptions {
        points: a.samples,
        seed: ctx.cli.seed,
        force_mc: a.force_mc,
        exec: ctx.exec,
        ..MvnOptions::default()
    };
    let est = mvn_cdf(&x, &sigma, &opts)?;
    Ok(json!({
        "dimension": x.len(),
        "value": est.value,
        "stderr": est.stderr,
        "method": est.method,
        "sample_count": est.sample_count,
        "seed": ctx.cli.seed,
    }))
}

fn caps(ctx: &Ctx, c: &CapArgs) -> Caps {
    Caps {
        max_bits: c.max_bits,
        block_len: c.block_len,
        max_doublings: c.max_doublings,
        exec: ctx.exec,
    }
}

fn strings(ps: &[BigUint]) -> Vec<String> {
    ps.iter().map(|p| p.to_string()).collect()
}

fn construct(ctx: &Ctx, c: &ConstructCommand) -> Result<Value> {
    Ok(match c {
        ConstructCommand::PrimeStep { ell, alpha, caps: cap } => {
            let ell: BigUint = ell.parse().map_err(|_| Usage(format!("bad ell {ell:?}")))?;
            let cert = constructions::prime_density_step(&ell, *alpha, &caps(ctx, cap))?;
            json!({
                "ell": ell.to_string(),
                "alpha": cert.alpha,
                "primes": strings(&cert.primes),
                "ratio": cert.ratio,
                "achieved_gap": cert.achieved_gap,
                "gap_bound": cert.gap_bound,
                "window_bound": cert.window_bound,
                "doublings": cert.doublings,
                "certified": true,
            })
        }
        ConstructCommand::UDense { targets, caps: cap } => {
            let fam = constructions::build_u_dense_family(targets, &caps(ctx, cap))?;
            fam.verify()?;
            Value::Array(
                fam.blocks
                    .iter()
                    .enumerate()
                    .map(|(k, b)| {
                        json!({
                            "block": k + 1,
                            "target": b.alpha,
                            "primes": strings(&b.primes),
                            "ratio": b.ratio,
                            "achieved_gap": b.achieved_gap,
                            "gap_bound": b.gap_bound,
                            "window_bound": b.window_bound,
                            "doublings": b.doublings,
                            "certified": true,
                        })
                    })
                    .collect(),
            )
        }
        ConstructCommand::BDense { targets, caps: cap } => {
            let targets = targets
                .iter()
                .map(|t| {
                    let (x, eps) = match t.split_once(':') {
                        Some((x, e)) => (x.parse::<f64>(), e.parse::<f64>()),
                        None => (t.parse::<f64>(), t.parse::<f64>().map(|x| x / 10.0)),
                    };
                    match (x, eps) {
                        (Ok(x), Ok(e)) => Ok((x, e)),
                        _ => usage(format!("bad target {t:?}; expected x or x:eps")),
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            let fam = constructions::build_b_dense_family(&targets, &caps(ctx, cap))?;
            Value::Array(
                fam.blocks
                    .iter()
                    .enumerate()
                    .map(|(k, b)| {
                        json!({
                            "block": k + 1,
                            "target": b.target,
                            "eps": b.eps,
                            "primes": strings(&fam.primes[b.start..b.end]),
                            "value": b.value,
                            "lower": b.lower,
                            "log_p": b.log_last,
                            "upper": b.upper,
                            "doublings": b.doublings,
                            "certified": true,
                        })
                    })
                    .collect(),
            )
        }
        ConstructCommand::TheoremC { n, caps: cap } => {
            let pre = constructions::build_theorem_c_prefix(*n, &caps(ctx, cap))?;
            Value::Array(
                pre.primes
                    .iter()
                    .zip(&pre.margins)
                    .enumerate()
                    .map(|(k, (p, m))| json!({"depth": k + 1, "prime": p.to_string(), "margin": m, "certified": true}))
                    .collect(),
            )
        }
        ConstructCommand::TwoMod { targets, caps: cap } => {
            let fam = constructions::build_two_mod_u_dense(targets, &caps(ctx, cap))?;
            Value::Array(
                fam.blocks
                    .iter()
                    .enumerate()
                    .map(|(k, b)| {
                        json!({
                            "block": k + 1,
                            "target": b.alpha,
                            "primes": strings(&fam.primes[b.start..b.start + 2]),
                            "index_value": b.index_value,
                            "ratio": b.ratio,
                            "achieved_gap": b.achieved_gap,
                            "window_bound": b.window_bound,
                            "doublings": b.doublings,
                            "certified": true,
                        })
                    })
                    .collect(),
            )
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_outside_parentheses() {
        assert_eq!(split_top_level("e:(0,0),e:(1,0)"), vec!["e:(0,0)", "e:(1,0)"]);
        assert_eq!(split_top_level(" e:(1) "), vec!["e:(1)"]);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Usage("x".into()).into()), 2);
        let e: anyhow::Error = FieldSpec::parse("{").unwrap_err().into();
        assert_eq!(exit_code(&e), 2);
        let e: anyhow::Error = chebyshev_race::Error::CapExhausted("x".into()).into();
        assert_eq!(exit_code(&e), 1);
    }

    #[test]
    fn sigma_specs() {
        assert_eq!(parse_sigma("gamma:3").unwrap().nrows(), 3);
        assert_eq!(parse_sigma("sigma:2:0.5").unwrap()[(0, 1)], 0.5);
        assert!(parse_sigma("sigma:2").is_err());
    }
}
