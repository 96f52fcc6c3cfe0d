//! Monte-Carlo strong-error experiments on coupled paths.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::model::{initial_condition, InitialKind, ModelError, ModelSpec};
use crate::noise::NoisePath;
use crate::scheme::{
    compile_wood, reference_snapshots, BuiltinScheme, CompiledScheme, SchemeError,
};
use crate::spectral::{GridWorkspace, SpectralState};
use crate::term::psi_wood;
use crate::tree::{parse_wood, ParseError, SWood, TreeError};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("wood text: {0}")]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error("no data rows")]
    NoDataRows,
    #[error("io: {0}")]
    Io(#[from] io::Error),
}

/// What is compared against the fine reference.
#[derive(Clone, Debug, PartialEq)]
pub enum SchemeChoice {
    Builtin(BuiltinScheme),
    Wood(SWood),
    /// The reference map itself; its coupled error is exactly zero.
    Reference,
}

impl SchemeChoice {
    /// A builtin name, `reference`, or wood text.
    pub fn parse(s: &str) -> Result<Self, HarnessError> {
        let s = s.trim();
        if s == "reference" {
            return Ok(SchemeChoice::Reference);
        }
        if let Ok(b) = s.parse::<BuiltinScheme>() {
            return Ok(SchemeChoice::Builtin(b));
        }
        if s.starts_with('(') {
            return Ok(SchemeChoice::Wood(parse_wood(s)?));
        }
        Err(SchemeError::UnknownScheme(s.to_string()).into())
    }

    pub fn wood(&self) -> Option<SWood> {
        match self {
            SchemeChoice::Builtin(b) => Some(b.wood()),
            SchemeChoice::Wood(w) => Some(w.clone()),
            SchemeChoice::Reference => None,
        }
    }

    pub fn compiled(&self) -> Result<Option<CompiledScheme>, SchemeError> {
        self.wood().map(|w| compile_wood(&w)).transpose()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: String,
    /// Builtin name, `reference`, or wood text.
    pub scheme: String,
    pub t_end: f64,
    /// `log2` of the number of fine substeps on `[0, t_end]`.
    pub fine: u32,
    /// Coarse steps `h = t_end * 2^-k`, one entry `k` per rung.
    pub ladder: Vec<u32>,
    pub paths: usize,
    pub seed: u64,
    pub r: f64,
    pub p: f64,
    pub modes: usize,
    pub noise_modes: usize,
    pub initial: String,
    pub multi_step: bool,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            model: "heat-mult".into(),
            scheme: "exp-euler".into(),
            t_end: 0.25,
            fine: 12,
            ladder: vec![4, 5, 6, 7, 8],
            paths: 200,
            seed: 2008,
            r: 0.005,
            p: 2.0,
            modes: 64,
            noise_modes: 64,
            initial: "smooth_poly".into(),
            multi_step: false,
            out: None,
        }
    }
}

/// Optional overrides, as read from a config file or command-line flags.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    pub model: Option<String>,
    pub scheme: Option<String>,
    pub t_end: Option<f64>,
    pub fine: Option<u32>,
    pub ladder: Option<Vec<u32>>,
    pub paths: Option<usize>,
    pub seed: Option<u64>,
    pub r: Option<f64>,
    pub p: Option<f64>,
    pub modes: Option<usize>,
    pub noise_modes: Option<usize>,
    pub initial: Option<String>,
    pub multi_step: Option<bool>,
    pub out: Option<PathBuf>,
}

impl ConfigOverrides {
    /// Parses `key = value` lines (TOML syntax; `#` comments).
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn apply(self, cfg: &mut ExperimentConfig) {
        macro_rules! take {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { cfg.$f = v; } )* };
        }
        take!(model, scheme, t_end, fine, ladder, paths, seed, r, p, modes, noise_modes, initial, multi_step);
        if self.out.is_some() {
            cfg.out = self.out;
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end = {} must be positive", self.t_end));
        }
        if self.fine > 24 {
            return bad(format!("fine = {} is above 24", self.fine));
        }
        if self.ladder.is_empty() {
            return bad("ladder is empty".into());
        }
        let mut seen = self.ladder.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.ladder.len() {
            return bad("ladder has repeated entries".into());
        }
        if let Some(&k) = self.ladder.iter().find(|&&k| k + 4 > self.fine) {
            return bad(format!(
                "coarse step t_end*2^-{k} must be at least 16 fine steps (fine = {})",
                self.fine
            ));
        }
        if self.paths < 2 {
            return bad(format!("paths = {} must be at least 2", self.paths));
        }
        if !(self.p >= 1.0 && self.p.is_finite()) {
            return bad(format!("p = {} must be >= 1", self.p));
        }
        if self.modes == 0 || self.noise_modes == 0 {
            return bad("modes and noise_modes must be positive".into());
        }
        self.initial.parse::<InitialKind>()?;
        SchemeChoice::parse(&self.scheme)?;
        Ok(())
    }

    pub fn h_fine(&self) -> f64 {
        self.t_end / (1u64 << self.fine) as f64
    }

    pub fn model_spec(&self) -> Result<ModelSpec, HarnessError> {
        let spec = ModelSpec::by_name(&self.model, self.modes, self.noise_modes, self.r)?;
        let kind: InitialKind = self.initial.parse()?;
        Ok(spec.with_initial(initial_condition(kind, self.modes)))
    }

    /// Rungs as (k, substeps per coarse step), coarsest first.
    fn rungs(&self) -> Vec<(u32, usize)> {
        let mut ks = self.ladder.clone();
        ks.sort_unstable();
        ks.into_iter().map(|k| (k, 1usize << (self.fine - k))).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorRow {
    pub h: f64,
    pub error: f64,
    pub stderr: f64,
    pub n_paths: usize,
    pub n_excluded: usize,
    /// False when the point sits within 3 standard errors of the floor.
    pub in_fit: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    /// No predicted order (reference scheme).
    NotApplicable,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunMetadata {
    pub tool: String,
    pub version: String,
    pub config_sha256: String,
    pub git_commit: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorReport {
    pub config: ExperimentConfig,
    pub metadata: RunMetadata,
    pub rows: Vec<ErrorRow>,
    /// Error at `h = h_fine`, the resolution limit of the coupling.
    pub floor: ErrorRow,
    pub slope: Option<f64>,
    pub order: Option<String>,
    pub predicted: Option<f64>,
    pub verdict: Verdict,
}

/// Tolerance of the pass rule `slope >= predicted - 0.10`.
pub const VERDICT_MARGIN: f64 = 0.10;

/// Numeric order of a wood (text or builtin name) at `(gamma, delta)`.
pub fn predicted_order(wood_or_name: &str, gamma: f64, delta: f64) -> Result<f64, HarnessError> {
    let wood = match SchemeChoice::parse(wood_or_name)? {
        SchemeChoice::Reference => {
            return Err(HarnessError::Config("the reference has no order".into()))
        }
        other => other.wood().expect("not the reference"),
    };
    Ok(wood.order()?.eval(gamma, delta).0)
}

/// Summary of a wood: tree count, active nodes, order, Psi, requirements.
pub fn symbolic_report(wood_text: &str) -> Result<String, HarnessError> {
    let wood = parse_wood(wood_text)?;
    let mut s = String::new();
    let acn: Vec<String> = wood.active_nodes().iter().map(|a| a.to_string()).collect();
    writeln!(s, "wood: {wood}").unwrap();
    writeln!(s, "trees: {}", wood.len()).unwrap();
    writeln!(s, "active nodes: {{{}}}", acn.join(", ")).unwrap();
    match wood.order() {
        Ok(o) => writeln!(s, "order: {o}").unwrap(),
        Err(e) => writeln!(s, "order: undefined ({e})").unwrap(),
    }
    let psi = psi_wood(&wood);
    writeln!(s, "psi: {psi}").unwrap();
    let scheme = compile_wood(&wood)?;
    writeln!(s, "requires: {}", scheme.requirements()).unwrap();
    Ok(s)
}

/// Per-path `|error|^p` for every rung and the floor; `None` marks a
/// non-finite value.
type PathErrors = (Option<f64>, Vec<Option<f64>>);

pub fn run_convergence(cfg: &ExperimentConfig) -> Result<ErrorReport, HarnessError> {
    cfg.validate()?;
    let spec = cfg.model_spec()?;
    let choice = SchemeChoice::parse(&cfg.scheme)?;
    let scheme = choice.compiled()?;
    if let Some(s) = &scheme {
        s.check_model(&spec)?;
    }
    let rungs = cfg.rungs();
    let hf = cfg.h_fine();

    let per_path: Vec<Result<PathErrors, SchemeError>> = (0..cfg.paths)
        .into_par_iter()
        .map_init(
            || spec.workspace(),
            |ws, i| {
                if cfg.multi_step {
                    multi_step_path(cfg, &spec, scheme.as_ref(), &rungs, i as u64, ws)
                } else {
                    one_step_path(cfg, &spec, scheme.as_ref(), &rungs, i as u64, ws)
                }
            },
        )
        .collect();
    let mut floor_vals = Vec::new();
    let mut rung_vals = vec![Vec::new(); rungs.len()];
    let mut excluded_floor = 0;
    let mut excluded = vec![0usize; rungs.len()];
    for r in per_path {
        // only a mesh error can come back here; non-finite values are Nones
        let (f, vals) = r?;
        match f {
            Some(v) => floor_vals.push(v),
            None => excluded_floor += 1,
        }
        for (k, v) in vals.into_iter().enumerate() {
            match v {
                Some(v) => rung_vals[k].push(v),
                None => excluded[k] += 1,
            }
        }
    }
    let floor = summarize(hf, &floor_vals, excluded_floor, cfg.p);
    let mut rows: Vec<ErrorRow> = rungs
        .iter()
        .zip(&rung_vals)
        .zip(&excluded)
        .map(|((&(_, n), vals), &ex)| summarize(n as f64 * hf, vals, ex, cfg.p))
        .collect();
    for row in &mut rows {
        let gap = row.error - floor.error;
        let se = (row.stderr.powi(2) + floor.stderr.powi(2)).sqrt();
        row.in_fit = row.n_paths >= 2 && row.error > 0.0 && gap > 3.0 * se;
    }
    let fit: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.in_fit)
        .map(|r| (r.h.ln(), r.error.ln()))
        .collect();
    let slope = ols_slope(&fit);
    let wood = choice.wood();
    let (order, predicted) = match &wood {
        Some(w) => match w.order() {
            Ok(o) => (Some(o.to_string()), Some(o.eval(spec.gamma, spec.delta).0)),
            Err(_) => (None, None),
        },
        None => (None, None),
    };
    let verdict = match (predicted, slope) {
        (None, _) => Verdict::NotApplicable,
        (Some(p), Some(s)) if s >= p - VERDICT_MARGIN => Verdict::Pass,
        _ => Verdict::Fail,
    };
    Ok(ErrorReport {
        config: cfg.clone(),
        metadata: RunMetadata::collect(cfg),
        rows,
        floor,
        slope,
        order,
        predicted,
        verdict,
    })
}

fn one_step_path(
    cfg: &ExperimentConfig,
    spec: &ModelSpec,
    scheme: Option<&CompiledScheme>,
    rungs: &[(u32, usize)],
    index: u64,
    ws: &mut GridWorkspace,
) -> Result<PathErrors, SchemeError> {
    let hf = cfg.h_fine();
    let n_max = rungs.iter().map(|r| r.1).max().unwrap_or(1);
    let path = NoisePath::for_path(cfg.seed, index, n_max, spec.noise_modes, hf);
    let u0 = &spec.initial;
    let mut checkpoints: Vec<usize> = rungs.iter().map(|r| r.1).collect();
    checkpoints.push(1);
    checkpoints.sort_unstable();
    checkpoints.dedup();
    let refs = match reference_snapshots(spec, u0, &path, 0, &checkpoints, ws) {
        Ok(r) => r,
        Err(SchemeError::NonfiniteValue { .. }) => return Ok((None, vec![None; rungs.len()])),
        Err(e) => return Err(e),
    };
    let reference_at = |n: usize| &refs[checkpoints.iter().position(|&c| c == n).unwrap()];
    let mut err_at = |n: usize| -> Result<Option<f64>, SchemeError> {
        let approx = match scheme {
            Some(s) => match s.step(spec, u0, n as f64 * hf, &path, 0, ws) {
                Ok(r) => r.state,
                Err(SchemeError::NonfiniteValue { .. }) => return Ok(None),
                Err(e) => return Err(e),
            },
            None => reference_snapshots(spec, u0, &path, 0, &[n], ws)?.remove(0),
        };
        Ok(Some(approx.sub(reference_at(n)).norm().powf(cfg.p)))
    };
    let floor = err_at(1)?;
    let vals = rungs.iter().map(|r| err_at(r.1)).collect::<Result<_, _>>()?;
    Ok((floor, vals))
}

fn multi_step_path(
    cfg: &ExperimentConfig,
    spec: &ModelSpec,
    scheme: Option<&CompiledScheme>,
    rungs: &[(u32, usize)],
    index: u64,
    ws: &mut GridWorkspace,
) -> Result<PathErrors, SchemeError> {
    let hf = cfg.h_fine();
    let total = 1usize << cfg.fine;
    let path = NoisePath::for_path(cfg.seed, index, total, spec.noise_modes, hf);
    let u0 = &spec.initial;
    let reference = match reference_snapshots(spec, u0, &path, 0, &[total], ws) {
        Ok(mut r) => r.remove(0),
        Err(SchemeError::NonfiniteValue { .. }) => return Ok((None, vec![None; rungs.len()])),
        Err(e) => return Err(e),
    };
    let mut err_at = |n: usize| -> Result<Option<f64>, SchemeError> {
        let mut u = u0.clone();
        for start in (0..total).step_by(n) {
            u = match scheme {
                Some(s) => match s.step(spec, &u, n as f64 * hf, &path, start, ws) {
                    Ok(r) => r.state,
                    Err(SchemeError::NonfiniteValue { .. }) => return Ok(None),
                    Err(e) => return Err(e),
                },
                None => reference_snapshots(spec, &u, &path, start, &[n], ws)?.remove(0),
            };
        }
        Ok(Some(u.sub(&reference).norm().powf(cfg.p)))
    };
    let floor = err_at(1)?;
    let vals = rungs.iter().map(|r| err_at(r.1)).collect::<Result<_, _>>()?;
    Ok((floor, vals))
}

/// `L^p` error `(mean X)^{1/p}` of `X = |diff|^p`, with the delta-method
/// standard error `(1/p) m^{1/p - 1} sd(X) / sqrt(n)`.
fn summarize(h: f64, vals: &[f64], n_excluded: usize, p: f64) -> ErrorRow {
    let n = vals.len();
    let (error, stderr) = if n == 0 {
        (f64::NAN, f64::NAN)
    } else {
        let m = vals.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        let se_m = (var / n as f64).sqrt();
        let err = m.powf(1.0 / p);
        let se = if m > 0.0 {
            m.powf(1.0 / p - 1.0) * se_m / p
        } else {
            0.0
        };
        (err, se)
    };
    ErrorRow {
        h,
        error,
        stderr,
        n_paths: n,
        n_excluded,
        in_fit: false,
    }
}

/// Least-squares slope of `y` on `x`; `None` below two points.
pub fn ols_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}

impl RunMetadata {
    fn collect(cfg: &ExperimentConfig) -> Self {
        let echo = serde_json::to_string(cfg).expect("config serializes");
        let digest = Sha256::digest(echo.as_bytes());
        let config_sha256 = digest.iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        });
        static GIT: OnceLock<String> = OnceLock::new();
        let git_commit = GIT
            .get_or_init(|| {
                std::process::Command::new("git")
                    .args(["rev-parse", "--short=12", "HEAD"])
                    .output()
                    .ok()
                    .filter(|o| o.status.success())
                    .map(|o| String::from_utf8_lossy(&o.stdout).trim().to_string())
                    .unwrap_or_else(|| "unknown".into())
            })
            .clone();
        RunMetadata {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_sha256,
            git_commit,
        }
    }
}

impl ErrorReport {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<(), HarnessError> {
        if self.rows.is_empty() {
            return Err(HarnessError::NoDataRows);
        }
        writeln!(out, "h,error,stderr,n_paths,n_excluded")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.h, r.error, r.stderr, r.n_paths, r.n_excluded
            )?;
        }
        Ok(())
    }

    pub fn csv_string(&self) -> Result<String, HarnessError> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("ascii"))
    }

    pub fn to_json(&self) -> Result<String, HarnessError> {
        if self.rows.is_empty() {
            return Err(HarnessError::NoDataRows);
        }
        Ok(serde_json::to_string_pretty(self).expect("report serializes"))
    }

    /// Writes `report.csv` and `report.json` into `dir`.
    pub fn emit(&self, dir: &Path) -> Result<(PathBuf, PathBuf), HarnessError> {
        fs::create_dir_all(dir)?;
        let csv = dir.join("report.csv");
        let json = dir.join("report.json");
        fs::write(&csv, self.csv_string()?)?;
        fs::write(&json, self.to_json()?)?;
        Ok((csv, json))
    }

    /// Human-readable table.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        writeln!(
            s,
            "model {} scheme {} paths {} seed {}{}",
            self.config.model,
            self.config.scheme,
            self.config.paths,
            self.config.seed,
            if self.config.multi_step { " (multi-step)" } else { "" }
        )
        .unwrap();
        writeln!(s, "{:>12} {:>12} {:>12} {:>6} {:>6}", "h", "error", "stderr", "fit", "excl").unwrap();
        for r in &self.rows {
            writeln!(
                s,
                "{:>12.4e} {:>12.4e} {:>12.4e} {:>6} {:>6}",
                r.h,
                r.error,
                r.stderr,
                if r.in_fit { "yes" } else { "no" },
                r.n_excluded
            )
            .unwrap();
        }
        writeln!(s, "floor (h = {:.4e}): {:.4e}", self.floor.h, self.floor.error).unwrap();
        let fmt_opt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.4}"));
        writeln!(
            s,
            "slope {}  predicted {}{}  verdict {:?}",
            fmt_opt(self.slope),
            fmt_opt(self.predicted),
            self.order.as_ref().map_or(String::new(), |o| format!(" ({o})")),
            self.verdict
        )
        .unwrap();
        s
    }
}

/// Convenience for tests and bindings: the coupled one-step difference of a
/// scheme against the reference on a single path.
pub fn one_step_error(
    spec: &ModelSpec,
    scheme: &CompiledScheme,
    u0: &SpectralState,
    h: f64,
    path: &NoisePath,
    ws: &mut GridWorkspace,
) -> Result<f64, SchemeError> {
    let n = (h / path.h_fine()).round() as usize;
    let r = reference_snapshots(spec, u0, path, 0, &[n], ws)?.remove(0);
    Ok(scheme.step(spec, u0, h, path, 0, ws)?.state.sub(&r).norm())
}
