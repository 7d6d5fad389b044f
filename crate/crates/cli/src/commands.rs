use rayon::prelude::*;
use serde_json::{json, Value};

use qj_core::coulomb::SplitPotential;
use qj_core::exchange::exchange_integral_detailed;
use qj_core::{critical_density, run_suite, solve_fugacity, two_term_free_energy, Error, Statistics, ThermoState};

use crate::args::{Common, DecomposeArgs, Format, PointArgs, ScanArgs, TextFormat, VerifyArgs};
use crate::config::Config;
use crate::output::{csv, emit, full, json_document, meta, sig12, text_record};
use crate::Failure;

pub const SCAN_COLUMNS: [&str; 9] =
    ["rho", "beta", "z", "f0", "exchange", "total", "f0_over_rho53", "exchange_over_rho43", "status"];

pub const DECOMPOSE_COLUMNS: [&str; 4] = ["s", "short", "long", "coulomb"];

fn from_core(e: Error) -> Failure {
    match e {
        Error::Condensation { rho, critical } => Failure::Condensed(condensed_message(rho, critical)),
        Error::Domain(m) => Failure::Usage(m),
        other => Failure::Compute(other.to_string()),
    }
}

fn condensed_message(rho: f64, critical: f64) -> String {
    format!("bose gas condenses: rho = {} is not below the critical density rho_c = {}", sig12(rho), sig12(critical))
}

fn bose_guard(stats: Statistics, beta: f64, rho: f64, n: u32) -> Result<(), Failure> {
    if stats == Statistics::Bose && beta > 0.0 && beta.is_finite() {
        let critical = critical_density(beta, n);
        if rho >= critical {
            return Err(Failure::Condensed(condensed_message(rho, critical)));
        }
    }
    Ok(())
}

struct Resolved {
    stats: Statistics,
    n: u32,
    alpha: f64,
}

fn resolve_common(c: &Common, cfg: &Config) -> Result<Resolved, Failure> {
    let stats = cfg.pick(c.stats, "stats")?.unwrap_or(Statistics::Fermi);
    let n = cfg.pick(c.n, "n")?.unwrap_or(1);
    let alpha = cfg.pick(c.alpha, "alpha")?.unwrap_or(0.1);
    if n == 0 {
        return Err(Failure::Usage("--n must be at least 1".into()));
    }
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Failure::Usage(format!("--alpha must be finite and nonnegative, got {alpha}")));
    }
    Ok(Resolved { stats, n, alpha })
}

fn resolve_point(a: &PointArgs, cfg: &Config) -> Result<(Resolved, f64, f64, TextFormat), Failure> {
    let common = resolve_common(&a.common, cfg)?;
    let beta: f64 = cfg.require(a.beta, "beta")?;
    let rho: f64 = cfg.require(a.rho, "rho")?;
    let format = match a.format {
        Some(f) => f,
        None => match cfg.get::<String>("format")?.as_deref() {
            None | Some("text") => TextFormat::Text,
            Some("json") => TextFormat::Json,
            Some(other) => return Err(Failure::Usage(format!("unknown format '{other}'"))),
        },
    };
    bose_guard(common.stats, beta, rho, common.n)?;
    Ok((common, beta, rho, format))
}

fn state_fields(st: &ThermoState) -> Vec<(&'static str, f64)> {
    let mut f = vec![("beta", st.beta), ("rho", st.rho), ("z", st.z), ("mu", st.mu)];
    if st.stats == Statistics::Bose {
        f.push(("rho_c", critical_density(st.beta, st.n)));
    }
    f
}

fn print_record(command: &str, stats: Statistics, n: u32, fields: &[(&str, f64)], format: TextFormat) -> Result<(), Failure> {
    let text = match format {
        TextFormat::Text => {
            let mut lines = vec![("stats", stats.to_string()), ("n", n.to_string())];
            lines.extend(fields.iter().map(|&(k, v)| (k, sig12(v))));
            text_record(&lines)
        }
        TextFormat::Json => {
            let row: serde_json::Map<String, Value> = fields.iter().map(|&(k, v)| (k.to_string(), json!(v))).collect();
            json_document(meta(command, json!({ "stats": stats, "n": n })), "rows", json!([row]))
        }
    };
    emit(None, &text)
}

pub fn free_energy(a: &PointArgs, cfg: &Config) -> Result<(), Failure> {
    let (c, beta, rho, format) = resolve_point(a, cfg)?;
    let fe = two_term_free_energy(beta, rho, c.alpha, c.n, c.stats).map_err(from_core)?;
    let mut fields = state_fields(&fe.state);
    fields.extend([("alpha", c.alpha), ("f0", fe.f0), ("exchange", fe.exchange), ("total", fe.total)]);
    print_record("free-energy", c.stats, c.n, &fields, format)
}

pub fn fugacity(a: &PointArgs, cfg: &Config) -> Result<(), Failure> {
    let (c, beta, rho, format) = resolve_point(a, cfg)?;
    let st = solve_fugacity(beta, rho, c.n, c.stats).map_err(from_core)?;
    let mut fields = state_fields(&st);
    fields.push(("ln_z", st.z.ln()));
    print_record("fugacity", c.stats, c.n, &fields, format)
}

pub fn exchange(a: &PointArgs, cfg: &Config) -> Result<(), Failure> {
    let (c, beta, rho, format) = resolve_point(a, cfg)?;
    let st = solve_fugacity(beta, rho, c.n, c.stats).map_err(from_core)?;
    let ex = exchange_integral_detailed(&st).map_err(from_core)?;
    let signed = c.stats.upper_minus() * 0.5 * c.alpha * c.n as f64 * ex.value;
    let mut fields = state_fields(&st);
    fields.extend([
        ("integral", ex.value),
        ("momentum_integral", ex.momentum_value),
        ("route_gap", ex.relative_route_gap()),
        ("tail_bound", ex.tail_bound),
        ("radius", ex.radius),
        ("integral_over_rho43", ex.value / rho.powf(4.0 / 3.0)),
        ("alpha", c.alpha),
        ("exchange", signed),
    ]);
    print_record("exchange", c.stats, c.n, &fields, format)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum ScanMode {
    FixedBeta(f64),
    FixedBetaRho23(f64),
}

impl ScanMode {
    fn beta(self, rho: f64) -> f64 {
        match self {
            ScanMode::FixedBeta(b) => b,
            ScanMode::FixedBetaRho23(t) => t / rho.powf(2.0 / 3.0),
        }
    }
}

fn geometric_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let ratio = (hi / lo).ln() / (count - 1) as f64;
    (0..count).map(|i| if i + 1 == count { hi } else { lo * (ratio * i as f64).exp() }).collect()
}

fn pick_format(flag: Option<Format>, cfg: &Config) -> Result<Format, Failure> {
    match flag {
        Some(f) => Ok(f),
        None => match cfg.get::<String>("format")?.as_deref() {
            None | Some("csv") => Ok(Format::Csv),
            Some("json") => Ok(Format::Json),
            Some(other) => Err(Failure::Usage(format!("unknown format '{other}'"))),
        },
    }
}

pub fn scan(a: &ScanArgs, cfg: &Config) -> Result<(), Failure> {
    let c = resolve_common(&a.common, cfg)?;
    let mode = match (cfg.pick(a.beta, "beta")?, cfg.pick(a.beta_rho23, "beta-rho23")?) {
        (Some(b), None) => ScanMode::FixedBeta(b),
        // A command-line mode replaces the other mode from the file.
        (Some(b), Some(_)) if a.beta.is_some() => ScanMode::FixedBeta(b),
        (_, Some(t)) => ScanMode::FixedBetaRho23(t),
        (None, None) => return Err(Failure::Usage("scan needs --beta or --beta-rho23".into())),
    };
    let lo: f64 = cfg.require(a.rho_min, "rho-min")?;
    let hi: f64 = cfg.require(a.rho_max, "rho-max")?;
    let count: usize = cfg.require(a.points, "points")?;
    if count == 0 {
        return Err(Failure::Usage("--points must be at least 1".into()));
    }
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
        return Err(Failure::Usage(format!("density bounds need 0 < rho-min <= rho-max, got {lo}, {hi}")));
    }
    let fixed = match mode {
        ScanMode::FixedBeta(b) | ScanMode::FixedBetaRho23(b) => b,
    };
    if !(fixed > 0.0) || !fixed.is_finite() {
        return Err(Failure::Usage(format!("the fixed temperature parameter must be positive, got {fixed}")));
    }
    let format = pick_format(a.format, cfg)?;
    let out = cfg.pick(a.out.clone(), "out")?;

    let grid = geometric_grid(lo, hi, count);
    for &rho in &grid {
        bose_guard(c.stats, mode.beta(rho), rho, c.n)?;
    }

    let rows: Vec<(f64, f64, Result<[f64; 6], String>)> = grid
        .par_iter()
        .map(|&rho| {
            let beta = mode.beta(rho);
            let row = two_term_free_energy(beta, rho, c.alpha, c.n, c.stats)
                .map(|fe| {
                    [fe.state.z, fe.f0, fe.exchange, fe.total, fe.f0 / rho.powf(5.0 / 3.0), fe.exchange / rho.powf(4.0 / 3.0)]
                })
                .map_err(|e| e.to_string());
            (rho, beta, row)
        })
        .collect();
    let failed = rows.iter().filter(|r| r.2.is_err()).count();

    let (mode_name, mode_value) = match mode {
        ScanMode::FixedBeta(b) => ("fixed-beta", b),
        ScanMode::FixedBetaRho23(t) => ("fixed-beta-rho23", t),
    };
    let text = match format {
        Format::Csv => {
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|(rho, beta, r)| {
                    let mut cells = vec![full(*rho), full(*beta)];
                    match r {
                        Ok(v) => {
                            cells.extend(v.iter().map(|&x| full(x)));
                            cells.push("ok".into());
                        }
                        Err(m) => {
                            cells.extend(std::iter::repeat_n("NaN".to_string(), 6));
                            cells.push(format!("error: {}", m.replace([',', '\n'], ";")));
                        }
                    }
                    cells
                })
                .collect();
            csv(&SCAN_COLUMNS, &table)
        }
        Format::Json => {
            let body: Vec<Value> = rows
                .iter()
                .map(|(rho, beta, r)| {
                    let (values, status) = match r {
                        Ok(v) => (v.map(|x| json!(x)), "ok".to_string()),
                        Err(m) => (std::array::from_fn(|_| Value::Null), format!("error: {m}")),
                    };
                    let mut obj = serde_json::Map::new();
                    obj.insert("rho".into(), json!(rho));
                    obj.insert("beta".into(), json!(beta));
                    for (k, v) in SCAN_COLUMNS[2..8].iter().zip(values) {
                        obj.insert(k.to_string(), v);
                    }
                    obj.insert("status".into(), json!(status));
                    Value::Object(obj)
                })
                .collect();
            let m = meta(
                "scan",
                json!({
                    "stats": c.stats, "n": c.n, "alpha": c.alpha, "mode": mode_name, "mode_value": mode_value,
                    "rho_min": lo, "rho_max": hi, "points": count, "columns": SCAN_COLUMNS,
                }),
            );
            json_document(m, "rows", Value::Array(body))
        }
    };
    emit(out.as_deref(), &text)?;
    if failed > 0 {
        return Err(Failure::Compute(format!("{failed} of {count} grid points failed; see the status column")));
    }
    Ok(())
}

pub fn verify(a: &VerifyArgs, cfg: &Config) -> Result<(), Failure> {
    let seed = cfg.pick(a.seed, "seed")?.unwrap_or(0);
    let out = cfg.pick(a.out.clone(), "out")?;
    let report = run_suite(a.suite, seed).map_err(from_core)?;
    let m = meta("verify", json!({ "suite": a.suite, "seed": seed }));
    let body = serde_json::to_value(&report).expect("serializable");
    emit(out.as_deref(), &json_document(m, "report", body))?;
    if !report.passed() {
        let failing: Vec<&str> = report.checks.iter().filter(|c| !c.passed()).map(|c| c.name.as_str()).collect();
        return Err(Failure::Violations(format!(
            "{} violations in {}; the violating instances are in the report",
            report.violations,
            failing.join(", ")
        )));
    }
    Ok(())
}

pub fn decompose(a: &DecomposeArgs, cfg: &Config) -> Result<(), Failure> {
    let radius: f64 = cfg.pick(a.radius, "radius")?.unwrap_or(1.0);
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Failure::Usage(format!("--radius must be positive, got {radius}")));
    }
    let s_max: f64 = cfg.pick(a.s_max, "s-max")?.unwrap_or(4.0 * radius);
    let points: usize = cfg.pick(a.points, "points")?.unwrap_or(200);
    if !(s_max > 0.0) || !s_max.is_finite() || points == 0 {
        return Err(Failure::Usage("--s-max must be positive and --points at least 1".into()));
    }
    let format = pick_format(a.format, cfg)?;
    let out = cfg.pick(a.out.clone(), "out")?;
    let grid: Vec<f64> = (1..=points).map(|i| s_max * i as f64 / points as f64).collect();
    let split = SplitPotential::tabulate(radius, grid).map_err(from_core)?;
    let rows: Vec<[f64; 4]> = split
        .short
        .grid()
        .iter()
        .zip(split.short.values())
        .zip(split.long.values())
        .map(|((&s, &short), &long)| [s, short, long, 1.0 / s])
        .collect();
    let text = match format {
        Format::Csv => {
            let table: Vec<Vec<String>> = rows.iter().map(|r| r.iter().map(|&x| full(x)).collect()).collect();
            csv(&DECOMPOSE_COLUMNS, &table)
        }
        Format::Json => {
            let body: Vec<Value> = rows
                .iter()
                .map(|r| Value::Object(DECOMPOSE_COLUMNS.iter().zip(r).map(|(k, &v)| (k.to_string(), json!(v))).collect()))
                .collect();
            let m = meta("decompose", json!({ "radius": radius, "s_max": s_max, "points": points, "columns": DECOMPOSE_COLUMNS }));
            json_document(m, "rows", Value::Array(body))
        }
    };
    emit(out.as_deref(), &text)
}
