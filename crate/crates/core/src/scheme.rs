//! Compiling term expressions into one-step schemes and evaluating them on
//! the fine mesh of a noise path.
//!
//! Every process of the plan is tracked at the left points `r_j = j h_f`.
//! Leaves `I^0_0` and `I^0_1` have closed forms. Noise-driven operators
//! follow `v <- e^{-lambda h_f} (v + B^(n)(u0)(args(r_j)) dW_j / n!)` and drift
//! operators `v <- e^{-lambda h_f} v + phi_1 F^(n)(u0)(args(r_j)) / n!` with
//! `phi_1 = (1 - e^{-lambda h_f}) / lambda`.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use crate::model::{ModelSpec, NoiseIncrement};
use crate::noise::NoisePath;
use crate::spectral::{GridWorkspace, SpectralState};
use crate::term::{psi_wood, TermExpr};
use crate::tree::{reference_woods, NodeLabel, SWood};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum SchemeError {
    #[error("term {term} contains a starred operator and cannot be evaluated")]
    NotImplementable { term: String },
    #[error("model '{model}' does not provide {field}^({order})")]
    UnsupportedDerivativeOrder {
        model: String,
        field: char,
        order: usize,
    },
    #[error("mesh mismatch: {0}")]
    MeshMismatch(String),
    #[error("non-finite value in {term} at substep {substep}")]
    NonfiniteValue { term: String, substep: usize },
    #[error("unknown scheme '{0}'")]
    UnknownScheme(String),
}

/// Derivative orders of `F` and `B` a scheme evaluates.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Requirements {
    pub drift: BTreeSet<usize>,
    pub diffusion: BTreeSet<usize>,
}

impl fmt::Display for Requirements {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self
            .drift
            .iter()
            .map(|i| format!("F:{i}"))
            .chain(self.diffusion.iter().map(|i| format!("B:{i}")))
            .collect();
        write!(f, "{{{}}}", items.join(", "))
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Kind {
    /// `I^0_0(r) = (e^{-lambda r} - 1) u0`.
    Initial,
    /// `I^0_1(r) = phi_1(r) F(u0)`.
    FrozenDrift,
    Drift(Vec<usize>),
    Noise(Vec<usize>),
}

#[derive(Clone, Debug)]
struct PlanNode {
    kind: Kind,
    term: TermExpr,
}

#[derive(Clone, Debug)]
pub struct CompiledScheme {
    nodes: Vec<PlanNode>,
    /// (node, multiplicity) for every distinct summand.
    roots: Vec<(usize, usize)>,
    requirements: Requirements,
    expr: TermExpr,
    source: Option<SWood>,
}

#[derive(Clone, Debug)]
pub struct StepResult {
    pub state: SpectralState,
    /// Norm of each distinct summand, by compact rendering.
    pub term_norms: Vec<(String, f64)>,
}

pub fn compile(expr: &TermExpr) -> Result<CompiledScheme, SchemeError> {
    let expr = expr.canonical();
    let mut nodes = Vec::new();
    let mut index = HashMap::new();
    let mut requirements = Requirements::default();
    let mut roots: Vec<(usize, usize)> = Vec::new();
    for t in expr.terms() {
        let id = intern(t, &mut nodes, &mut index, &mut requirements)?;
        match roots.iter_mut().find(|(n, _)| *n == id) {
            Some((_, m)) => *m += 1,
            None => roots.push((id, 1)),
        }
    }
    Ok(CompiledScheme {
        nodes,
        roots,
        requirements,
        expr,
        source: None,
    })
}

/// `compile(psi(wood))`, remembering the wood.
pub fn compile_wood(wood: &SWood) -> Result<CompiledScheme, SchemeError> {
    let mut s = compile(&psi_wood(wood))?;
    s.source = Some(wood.clone());
    Ok(s)
}

fn intern(
    t: &TermExpr,
    nodes: &mut Vec<PlanNode>,
    index: &mut HashMap<TermExpr, usize>,
    req: &mut Requirements,
) -> Result<usize, SchemeError> {
    if let Some(&id) = index.get(t) {
        return Ok(id);
    }
    let kind = match t {
        TermExpr::Sum(_) => {
            return Err(SchemeError::NotImplementable {
                term: t.compact(),
            })
        }
        _ if t.label().is_some_and(NodeLabel::is_active) => {
            return Err(SchemeError::NotImplementable {
                term: t.compact(),
            })
        }
        TermExpr::Leaf(NodeLabel::Zero) => Kind::Initial,
        TermExpr::Leaf(NodeLabel::One) => {
            req.drift.insert(0);
            Kind::FrozenDrift
        }
        TermExpr::Leaf(_) => {
            req.diffusion.insert(0);
            Kind::Noise(Vec::new())
        }
        TermExpr::Integral { label, args } => {
            let ids = args
                .iter()
                .map(|a| intern(a, nodes, index, req))
                .collect::<Result<Vec<_>, _>>()?;
            if *label == NodeLabel::One {
                req.drift.insert(ids.len());
                Kind::Drift(ids)
            } else {
                req.diffusion.insert(ids.len());
                Kind::Noise(ids)
            }
        }
    };
    nodes.push(PlanNode {
        kind,
        term: t.clone(),
    });
    let id = nodes.len() - 1;
    index.insert(t.clone(), id);
    Ok(id)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

impl CompiledScheme {
    pub fn requirements(&self) -> &Requirements {
        &self.requirements
    }

    pub fn expr(&self) -> &TermExpr {
        &self.expr
    }

    pub fn source(&self) -> Option<&SWood> {
        self.source.as_ref()
    }

    /// Compact renderings of the distinct summands.
    pub fn plan_terms(&self) -> Vec<String> {
        self.roots
            .iter()
            .map(|&(id, _)| self.nodes[id].term.compact())
            .collect()
    }

    pub fn check_model(&self, spec: &ModelSpec) -> Result<(), SchemeError> {
        let unsupported = |field, order| SchemeError::UnsupportedDerivativeOrder {
            model: spec.name.clone(),
            field,
            order,
        };
        if let Some(&o) = self.requirements.drift.iter().find(|&&o| o > spec.drift.max_order()) {
            return Err(unsupported('F', o));
        }
        if let Some(&o) = self
            .requirements
            .diffusion
            .iter()
            .find(|&&o| o > spec.diffusion.max_order())
        {
            return Err(unsupported('B', o));
        }
        Ok(())
    }

    /// One step of size `h` from `u0`, driven by substeps
    /// `start..start + h / h_fine` of `path`.
    pub fn step(
        &self,
        spec: &ModelSpec,
        u0: &SpectralState,
        h: f64,
        path: &NoisePath,
        start: usize,
        ws: &mut GridWorkspace,
    ) -> Result<StepResult, SchemeError> {
        self.check_model(spec)?;
        let n = substeps_for(h, path, start)?;
        let hf = path.h_fine();
        let lam = &spec.eigenvalues;
        let decay: Vec<f64> = lam.iter().map(|l| (-l * hf).exp()).collect();
        let phi_f: Vec<f64> = lam.iter().map(|l| -(-l * hf).exp_m1() / l).collect();
        let frozen_f = if self.requirements.drift.contains(&0) {
            spec.drift.eval(u0, &[], ws)
        } else {
            SpectralState::zeros(u0.modes())
        };
        let closed = |kind: &Kind, r: f64| -> SpectralState {
            let c = match kind {
                Kind::Initial => u0
                    .coeffs()
                    .iter()
                    .zip(lam)
                    .map(|(u, l)| (-l * r).exp_m1() * u)
                    .collect(),
                Kind::FrozenDrift => frozen_f
                    .coeffs()
                    .iter()
                    .zip(lam)
                    .map(|(f, l)| -(-l * r).exp_m1() / l * f)
                    .collect(),
                _ => unreachable!(),
            };
            SpectralState::from_coeffs(c)
        };
        let stateful = |k: &Kind| matches!(k, Kind::Drift(_) | Kind::Noise(_));
        let any_noise = self.nodes.iter().any(|p| matches!(p.kind, Kind::Noise(_)));
        let any_stateful = self.nodes.iter().any(|p| stateful(&p.kind));

        let mut values: Vec<SpectralState> =
            vec![SpectralState::zeros(u0.modes()); self.nodes.len()];
        for j in 0..n {
            if !any_stateful {
                break;
            }
            let r = j as f64 * hf;
            for (v, p) in values.iter_mut().zip(&self.nodes) {
                if !stateful(&p.kind) {
                    *v = closed(&p.kind, r);
                }
            }
            let dw = if any_noise {
                Some(NoiseIncrement::new(path.increment(start + j).to_vec(), ws))
            } else {
                None
            };
            // parents before children, so arguments still hold their r_j values
            for id in (0..self.nodes.len()).rev() {
                let inc = match &self.nodes[id].kind {
                    Kind::Noise(args) => {
                        let a: Vec<&SpectralState> = args.iter().map(|&k| &values[k]).collect();
                        let mut inc =
                            spec.diffusion.apply(u0, &a, dw.as_ref().expect("noise"), ws);
                        inc.scale(1.0 / factorial(args.len()));
                        inc
                    }
                    Kind::Drift(args) => {
                        let a: Vec<&SpectralState> = args.iter().map(|&k| &values[k]).collect();
                        let mut inc = spec.drift.eval(u0, &a, ws);
                        inc.scale(1.0 / factorial(args.len()));
                        inc
                    }
                    _ => continue,
                };
                let v = values[id].coeffs_mut();
                match self.nodes[id].kind {
                    Kind::Noise(_) => {
                        for ((x, d), i) in v.iter_mut().zip(&decay).zip(inc.coeffs()) {
                            *x = d * (*x + i);
                        }
                    }
                    _ => {
                        for (((x, d), p), i) in v.iter_mut().zip(&decay).zip(&phi_f).zip(inc.coeffs()) {
                            *x = d * *x + p * i;
                        }
                    }
                }
                if !values[id].is_finite() {
                    return Err(SchemeError::NonfiniteValue {
                        term: self.nodes[id].term.compact(),
                        substep: start + j,
                    });
                }
            }
        }
        let mut state = u0.clone();
        let mut term_norms = Vec::with_capacity(self.roots.len());
        for &(id, mult) in &self.roots {
            let node = &self.nodes[id];
            let v = if stateful(&node.kind) {
                values[id].clone()
            } else {
                closed(&node.kind, n as f64 * hf)
            };
            term_norms.push((node.term.compact(), v.norm()));
            state.axpy(mult as f64, &v);
        }
        if !state.is_finite() {
            return Err(SchemeError::NonfiniteValue {
                term: self.expr.compact(),
                substep: start + n,
            });
        }
        Ok(StepResult { state, term_norms })
    }
}

fn substeps_for(h: f64, path: &NoisePath, start: usize) -> Result<usize, SchemeError> {
    let hf = path.h_fine();
    let ratio = h / hf;
    let n = ratio.round();
    if h.is_nan() || h <= 0.0 || n < 1.0 || (ratio - n).abs() > 1e-9 * ratio.max(1.0) {
        return Err(SchemeError::MeshMismatch(format!(
            "h = {h} is not a positive multiple of h_fine = {hf}"
        )));
    }
    let n = n as usize;
    if start + n > path.substeps() {
        return Err(SchemeError::MeshMismatch(format!(
            "path has {} substeps, step needs {}..{}",
            path.substeps(),
            start,
            start + n
        )));
    }
    Ok(n)
}

/// One substep of the fine-mesh reference:
/// `X <- e^{-lambda h_f} (X + B(X) dW_j) + phi_1 F(X)`.
fn reference_substep(
    spec: &ModelSpec,
    x: &mut SpectralState,
    dw: &[f64],
    hf: f64,
    drift_zero: bool,
    ws: &mut GridWorkspace,
) {
    let inc = NoiseIncrement::new(dw.to_vec(), ws);
    let b = spec.diffusion.apply(x, &[], &inc, ws);
    let f = if drift_zero {
        None
    } else {
        Some(spec.drift.eval(x, &[], ws))
    };
    for (i, (xi, l)) in x.coeffs_mut().iter_mut().zip(&spec.eigenvalues).enumerate() {
        let d = (-l * hf).exp();
        *xi = d * (*xi + b.coeffs()[i]);
        if let Some(f) = &f {
            *xi += -(-l * hf).exp_m1() / l * f.coeffs()[i];
        }
    }
}

/// Reference states after each substep count in `checkpoints` (ascending),
/// starting from `u0` at substep `start`.
pub fn reference_snapshots(
    spec: &ModelSpec,
    u0: &SpectralState,
    path: &NoisePath,
    start: usize,
    checkpoints: &[usize],
    ws: &mut GridWorkspace,
) -> Result<Vec<SpectralState>, SchemeError> {
    let last = checkpoints.iter().copied().max().unwrap_or(0);
    if start + last > path.substeps() {
        return Err(SchemeError::MeshMismatch(format!(
            "path has {} substeps, reference needs {}",
            path.substeps(),
            start + last
        )));
    }
    let drift_zero = spec.drift.is_zero();
    let mut x = u0.clone();
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut done = 0;
    for &c in checkpoints {
        assert!(c >= done, "checkpoints must be ascending");
        while done < c {
            reference_substep(spec, &mut x, path.increment(start + done), path.h_fine(), drift_zero, ws);
            done += 1;
            if !x.is_finite() {
                return Err(SchemeError::NonfiniteValue {
                    term: "reference".into(),
                    substep: start + done,
                });
            }
        }
        out.push(x.clone());
    }
    Ok(out)
}

/// Reference state at `t_end` from `u0` at time 0.
pub fn reference_solve(
    spec: &ModelSpec,
    u0: &SpectralState,
    t_end: f64,
    path: &NoisePath,
    ws: &mut GridWorkspace,
) -> Result<SpectralState, SchemeError> {
    if t_end == 0.0 {
        return Ok(u0.clone());
    }
    let n = substeps_for(t_end, path, 0)?;
    Ok(reference_snapshots(spec, u0, path, 0, &[n], ws)?.remove(0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BuiltinScheme {
    TaylorDelta,
    ExpEulerNoDrift,
    ExpEuler,
    MilsteinB0,
    Full2nd,
}

impl BuiltinScheme {
    pub const ALL: [BuiltinScheme; 5] = [
        BuiltinScheme::TaylorDelta,
        BuiltinScheme::ExpEulerNoDrift,
        BuiltinScheme::ExpEuler,
        BuiltinScheme::MilsteinB0,
        BuiltinScheme::Full2nd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BuiltinScheme::TaylorDelta => "taylor-delta",
            BuiltinScheme::ExpEulerNoDrift => "exp-euler-nodrift",
            BuiltinScheme::ExpEuler => "exp-euler",
            BuiltinScheme::MilsteinB0 => "milstein-b0",
            BuiltinScheme::Full2nd => "full-2nd",
        }
    }

    /// The wood behind the scheme: w0, w1, w2, w3 or w5.
    pub fn wood(self) -> SWood {
        let k = match self {
            BuiltinScheme::TaylorDelta => 0,
            BuiltinScheme::ExpEulerNoDrift => 1,
            BuiltinScheme::ExpEuler => 2,
            BuiltinScheme::MilsteinB0 => 3,
            BuiltinScheme::Full2nd => 5,
        };
        reference_woods()[k].clone()
    }

    pub fn compile(self) -> CompiledScheme {
        compile_wood(&self.wood()).expect("psi of a wood has no starred operator")
    }
}

impl FromStr for BuiltinScheme {
    type Err = SchemeError;

    fn from_str(s: &str) -> Result<Self, SchemeError> {
        BuiltinScheme::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| SchemeError::UnknownScheme(s.to_string()))
    }
}

impl fmt::Display for BuiltinScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
