//! Sweep orchestration, scaling-law fits, gap-scaling series, persistence,
//! and the on-disk result cache behind the `nessgap` binary.

use nessgap_core::chain::{build_drift_matrix, build_rhs_step, ChainParams, Convention};
use nessgap_core::constants::{
    compute_lambda, entropy_rate, lsi_constants, perturbation_budget, poincare_constant,
    PerturbationBounds,
};
use nessgap_core::error::{Error, Result};
use nessgap_core::lyapunov::solve_dense_kron;
use nessgap_core::spectral::{eigenvalues, pd_norms, spectral_gap};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::time::Instant;

pub mod cache;

/// Everything but N for a sweep.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SweepTemplate {
    pub a: f64,
    pub c: f64,
    pub gamma: f64,
    pub t_left: f64,
    pub t_right: f64,
    pub convention: Convention,
}

impl Default for SweepTemplate {
    /// Gap-scaling defaults: a = 0, c = 1, γ = 1, with T_L = 1.5, T_R = 0.5
    /// as the temperature choice recorded in output metadata.
    fn default() -> Self {
        SweepTemplate {
            a: 0.0,
            c: 1.0,
            gamma: 1.0,
            t_left: 1.5,
            t_right: 0.5,
            convention: Convention::Physical,
        }
    }
}

impl SweepTemplate {
    pub fn params(&self, n: usize) -> Result<ChainParams> {
        ChainParams::new(n, self.a, self.c, self.gamma, self.t_left, self.t_right)
    }
}

/// One solved parameter point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub n: usize,
    pub a: f64,
    pub c: f64,
    pub gamma: f64,
    pub t_left: f64,
    pub t_right: f64,
    pub convention: Convention,
    pub method: String,
    pub norm_b: f64,
    pub norm_b_inv: f64,
    pub rho: f64,
    pub trace_defect: f64,
    pub lambda_n: f64,
    pub budget: f64,
    pub poincare: f64,
    pub lsi_perturbed: f64,
    pub lsi_nonperturbed: f64,
    pub entropy_rate: f64,
    /// Wall time of the solve; metadata, lives only in JSON output.
    #[serde(default)]
    pub wall_time_ms: f64,
}

impl SweepRecord {
    /// Natural key of the record.
    pub fn key(&self) -> String {
        cache::point_key(
            self.n,
            self.a,
            self.c,
            self.gamma,
            self.t_left,
            self.t_right,
            self.convention,
        )
    }

    pub fn field(&self, name: &str) -> Option<f64> {
        Some(match name {
            "norm_b" => self.norm_b,
            "norm_b_inv" => self.norm_b_inv,
            "rho" => self.rho,
            "lambda_n" => self.lambda_n,
            "budget" => self.budget,
            "poincare" => self.poincare,
            "lsi_perturbed" => self.lsi_perturbed,
            "lsi_nonperturbed" => self.lsi_nonperturbed,
            "entropy_rate" => self.entropy_rate,
            _ => return None,
        })
    }
}

pub const RECORD_FIELDS: [&str; 9] = [
    "norm_b",
    "norm_b_inv",
    "rho",
    "lambda_n",
    "budget",
    "poincare",
    "lsi_perturbed",
    "lsi_nonperturbed",
    "entropy_rate",
];

/// Per-N outcome; a failed point never aborts the sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum SweepOutcome {
    Ok { record: SweepRecord },
    Failed { n: usize, error: String },
}

/// Automatic method choice for the step-N equation: the dense vectorized
/// solver up to 64 state dimensions, the structured path above that for
/// odd N. Even N beyond the dense cap has no solver.
pub fn solve_auto(
    params: &ChainParams,
    conv: Convention,
) -> Result<(nessgap_core::linalg::Mat, String)> {
    let n = params.n;
    if 2 * n <= 64 {
        let m = build_drift_matrix(params);
        let pi_n = build_rhs_step(params, n, conv)?;
        let sol = solve_dense_kron(&m, &pi_n.matrix())?;
        Ok((sol.b, "dense_kron".into()))
    } else if n % 2 == 1 {
        let sol = nessgap_core::structured::solve_structured(params, conv)?;
        Ok((sol.b, "structured".into()))
    } else {
        Err(Error::EvenNUnsupported(n))
    }
}

/// Solve one point with the automatic method choice: the dense vectorized
/// solver up to 64 states, the structured path above that for odd N.
pub fn solve_point(template: &SweepTemplate, n: usize) -> Result<SweepRecord> {
    let start = Instant::now();
    let params = template.params(n)?;
    let conv = template.convention;
    let (b, method) = solve_auto(&params, conv)?;
    let m = build_drift_matrix(&params);
    let eigs = eigenvalues(&m)?;
    let rho = spectral_gap(&eigs);
    let re_sum: f64 = eigs.iter().map(|l| l.re).sum();
    let (norm_b, norm_b_inv) = pd_norms(&b)?;
    let lambda_n = compute_lambda(norm_b, norm_b_inv, &PerturbationBounds::harmonic());
    let budget = perturbation_budget(norm_b, norm_b_inv);
    let (lsi_p, lsi_np) = lsi_constants(params.t_left, norm_b, norm_b_inv, lambda_n)?;
    Ok(SweepRecord {
        n,
        a: params.a,
        c: params.c,
        gamma: params.gamma,
        t_left: params.t_left,
        t_right: params.t_right,
        convention: conv,
        method,
        norm_b,
        norm_b_inv,
        rho,
        trace_defect: (re_sum - 2.0 * params.gamma).abs(),
        lambda_n,
        budget,
        poincare: poincare_constant(params.t_left, norm_b_inv, lambda_n)?,
        lsi_perturbed: lsi_p,
        lsi_nonperturbed: lsi_np,
        entropy_rate: entropy_rate(lambda_n, params.t_left, norm_b_inv)?,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Run a sweep over `n_list`, optionally through an on-disk cache, with at
/// most `jobs` worker threads (0 = library default). Outcomes come back in
/// the order of `n_list`.
pub fn run_sweep(
    template: &SweepTemplate,
    n_list: &[usize],
    jobs: usize,
    cache_dir: Option<&cache::CacheDir>,
) -> Result<Vec<SweepOutcome>> {
    if n_list.is_empty() {
        return Err(Error::InvalidParams(
            "sweep needs a non-empty N list".into(),
        ));
    }
    let work = |&n: &usize| -> SweepOutcome {
        if let Some(dir) = cache_dir {
            let key = cache::point_key(
                n,
                template.a,
                template.c,
                template.gamma,
                template.t_left,
                template.t_right,
                template.convention,
            );
            match dir.load(&key) {
                Ok(Some(record)) => return SweepOutcome::Ok { record },
                Ok(None) => {}
                Err(e) => {
                    return SweepOutcome::Failed {
                        n,
                        error: e.to_string(),
                    }
                }
            }
            match solve_point(template, n) {
                Ok(record) => match dir.store(&key, &record) {
                    Ok(()) => SweepOutcome::Ok { record },
                    Err(e) => SweepOutcome::Failed {
                        n,
                        error: e.to_string(),
                    },
                },
                Err(e) => SweepOutcome::Failed {
                    n,
                    error: e.to_string(),
                },
            }
        } else {
            match solve_point(template, n) {
                Ok(record) => SweepOutcome::Ok { record },
                Err(e) => SweepOutcome::Failed {
                    n,
                    error: e.to_string(),
                },
            }
        }
    };
    let outcomes: Vec<SweepOutcome> = if jobs == 1 {
        n_list.iter().map(work).collect()
    } else if jobs == 0 {
        n_list.par_iter().map(work).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::InvalidParams(format!("thread pool: {e}")))?;
        pool.install(|| n_list.par_iter().map(work).collect())
    };
    if outcomes
        .iter()
        .all(|o| matches!(o, SweepOutcome::Failed { .. }))
    {
        return Err(Error::VerificationFailure(
            "every sweep point failed".into(),
        ));
    }
    Ok(outcomes)
}

/// Least-squares fit of log(value) against log(N).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingFit {
    pub field: String,
    pub n_grid: Vec<usize>,
    pub exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn fit_power_law(field: &str, points: &[(usize, f64)]) -> Result<ScalingFit> {
    if points.len() < 5 {
        return Err(Error::InvalidParams(format!(
            "power-law fit needs at least 5 points, got {}",
            points.len()
        )));
    }
    let mut prev = 0usize;
    for &(n, v) in points {
        if n <= prev {
            return Err(Error::InvalidParams(
                "N grid must be strictly increasing".into(),
            ));
        }
        prev = n;
        if v <= 0.0 || !v.is_finite() {
            return Err(Error::InvalidParams(format!(
                "power-law fit needs positive values, got {v} at N = {n}"
            )));
        }
    }
    let xs: Vec<f64> = points.iter().map(|&(n, _)| (n as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, v)| v.ln()).collect();
    let m = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
    let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    let intercept = (sy - slope * sx) / m;
    let ybar = sy / m;
    let ss_tot: f64 = ys.iter().map(|y| (y - ybar) * (y - ybar)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let e = y - (slope * x + intercept);
            e * e
        })
        .sum();
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };
    Ok(ScalingFit {
        field: field.to_string(),
        n_grid: points.iter().map(|&(n, _)| n).collect(),
        exponent: slope,
        intercept,
        r_squared,
    })
}

/// Fit one record field over a sweep.
pub fn fit_record_field(records: &[SweepRecord], field: &str) -> Result<ScalingFit> {
    let mut pts = Vec::with_capacity(records.len());
    for r in records {
        let v = r
            .field(field)
            .ok_or_else(|| Error::InvalidParams(format!("unknown field '{field}'")))?;
        pts.push((r.n, v));
    }
    fit_power_law(field, &pts)
}

/// One row of the gap-scaling series.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Figure2Row {
    pub n: usize,
    pub rho: f64,
    pub rho_n3: f64,
}

/// Gap-scaling series on the grid N = 20, 40, .., max_n: smallest real part
/// of the spectrum of M and its N³ compensation.
pub fn figure2(template: &SweepTemplate, max_n: usize) -> Result<Vec<Figure2Row>> {
    if max_n > 400 {
        return Err(Error::InvalidParams(format!(
            "figure2: max_n = {max_n} exceeds 400"
        )));
    }
    if max_n < 20 {
        return Err(Error::InvalidParams("figure2 needs max_n >= 20".into()));
    }
    let grid: Vec<usize> = (1..=(max_n / 20)).map(|k| 20 * k).collect();
    grid.iter()
        .map(|&n| {
            let params = template.params(n)?;
            let m = build_drift_matrix(&params);
            let rho = spectral_gap(&eigenvalues(&m)?);
            Ok(Figure2Row {
                n,
                rho,
                rho_n3: rho * (n as f64).powi(3),
            })
        })
        .collect()
}

pub fn figure2_csv(rows: &[Figure2Row]) -> String {
    let mut out = String::from("n,rho,rho_n3\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{}\n",
            r.n,
            nessgap_core::io::fmt_f64(r.rho),
            nessgap_core::io::fmt_f64(r.rho_n3)
        ));
    }
    out
}

const CSV_HEADER: &str = "n,a,c,gamma,t_left,t_right,convention,method,norm_b,norm_b_inv,rho,trace_defect,lambda_n,budget,poincare,lsi_perturbed,lsi_nonperturbed,entropy_rate";

/// CSV emission: header row, 17-significant-digit floats, LF endings.
/// Wall time is JSON-only metadata and is not emitted here.
pub fn records_to_csv(records: &[SweepRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        let f = nessgap_core::io::fmt_f64;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.n,
            f(r.a),
            f(r.c),
            f(r.gamma),
            f(r.t_left),
            f(r.t_right),
            r.convention,
            r.method,
            f(r.norm_b),
            f(r.norm_b_inv),
            f(r.rho),
            f(r.trace_defect),
            f(r.lambda_n),
            f(r.budget),
            f(r.poincare),
            f(r.lsi_perturbed),
            f(r.lsi_nonperturbed),
            f(r.entropy_rate),
        ));
    }
    out
}

pub fn records_from_csv(text: &str) -> Result<Vec<SweepRecord>> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if header != CSV_HEADER {
        return Err(Error::Parse {
            path: "<csv>".into(),
            reason: format!("unexpected header '{header}'"),
        });
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split(',').collect();
        if toks.len() != 18 {
            return Err(Error::Parse {
                path: "<csv>".into(),
                reason: format!("line {}: expected 18 fields, got {}", i + 2, toks.len()),
            });
        }
        let pf = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::Parse {
                path: "<csv>".into(),
                reason: format!("bad float '{s}' on line {}", i + 2),
            })
        };
        out.push(SweepRecord {
            n: toks[0].parse().map_err(|_| Error::Parse {
                path: "<csv>".into(),
                reason: format!("bad n '{}'", toks[0]),
            })?,
            a: pf(toks[1])?,
            c: pf(toks[2])?,
            gamma: pf(toks[3])?,
            t_left: pf(toks[4])?,
            t_right: pf(toks[5])?,
            convention: toks[6].parse()?,
            method: toks[7].to_string(),
            norm_b: pf(toks[8])?,
            norm_b_inv: pf(toks[9])?,
            rho: pf(toks[10])?,
            trace_defect: pf(toks[11])?,
            lambda_n: pf(toks[12])?,
            budget: pf(toks[13])?,
            poincare: pf(toks[14])?,
            lsi_perturbed: pf(toks[15])?,
            lsi_nonperturbed: pf(toks[16])?,
            entropy_rate: pf(toks[17])?,
            wall_time_ms: 0.0,
        });
    }
    Ok(out)
}

pub fn records_to_json(records: &[SweepRecord]) -> Result<String> {
    serde_json::to_string_pretty(records)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| Error::Parse {
            path: "<json>".into(),
            reason: e.to_string(),
        })
}

pub fn records_from_json(text: &str) -> Result<Vec<SweepRecord>> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        path: "<json>".into(),
        reason: e.to_string(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmitFormat {
    Csv,
    Json,
}

impl std::str::FromStr for EmitFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(EmitFormat::Csv),
            "json" => Ok(EmitFormat::Json),
            other => Err(Error::InvalidParams(format!("unknown format '{other}'"))),
        }
    }
}

/// Write records to a path in the requested format.
pub fn emit(records: &[SweepRecord], format: EmitFormat, path: &Path) -> Result<()> {
    let text = match format {
        EmitFormat::Csv => records_to_csv(records),
        EmitFormat::Json => records_to_json(records)?,
    };
    nessgap_core::io::write_text(path, &text)
}

/// Resolve the cache directory: explicit flag, then NESSGAP_CACHE_DIR, then
/// `.nessgap_cache` under the working directory.
pub fn resolve_cache_dir(flag: Option<&str>) -> PathBuf {
    if let Some(f) = flag {
        return PathBuf::from(f);
    }
    if let Ok(env) = std::env::var("NESSGAP_CACHE_DIR") {
        if !env.is_empty() {
            return PathBuf::from(env);
        }
    }
    PathBuf::from(".nessgap_cache")
}
