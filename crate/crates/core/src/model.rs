//! SPDE data in spectral form: `dU = (AU + F(U)) dt + B(U) dW` with
//! diagonal `A e_i = -lambda_i e_i` and cylindrical noise truncated to `M`
//! modes.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::sync::Arc;

use crate::spectral::{GridWorkspace, SpectralState};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("noise mode {k} outside 1..={m}")]
    NoiseModeOutOfRange { k: usize, m: usize },
    #[error("unknown model '{0}' (expected heat-mult or heat-add)")]
    UnknownModel(String),
    #[error("unknown initial condition '{0}' (expected smooth_poly or first_mode)")]
    UnknownInitial(String),
}

/// One noise increment `dW = sum_k dW_k e_k` in coefficient and grid form.
#[derive(Clone, Debug)]
pub struct NoiseIncrement {
    pub coeffs: Vec<f64>,
    pub grid: Vec<f64>,
}

impl NoiseIncrement {
    pub fn new(coeffs: Vec<f64>, ws: &mut GridWorkspace) -> Self {
        let grid = ws.to_grid(&coeffs);
        NoiseIncrement { coeffs, grid }
    }

    /// Unit increment in noise mode `k`.
    pub fn unit(m: usize, k: usize, ws: &mut GridWorkspace) -> Self {
        let mut c = vec![0.0; m];
        c[k - 1] = 1.0;
        NoiseIncrement::new(c, ws)
    }
}

/// `F` and its Frechet derivatives.
pub trait DriftField: Send + Sync {
    /// Highest derivative order the field can evaluate.
    fn max_order(&self) -> usize {
        usize::MAX
    }

    /// `F^(n)(base)(args)`, with `args.len() == n`.
    fn eval(
        &self,
        base: &SpectralState,
        args: &[&SpectralState],
        ws: &mut GridWorkspace,
    ) -> SpectralState;

    fn is_zero(&self) -> bool {
        false
    }
}

/// `B` and its Frechet derivatives, applied to a noise increment.
pub trait DiffusionField: Send + Sync {
    fn max_order(&self) -> usize {
        usize::MAX
    }

    /// `B^(n)(base)(args)(dw)`, with `args.len() == n`.
    fn apply(
        &self,
        base: &SpectralState,
        args: &[&SpectralState],
        dw: &NoiseIncrement,
        ws: &mut GridWorkspace,
    ) -> SpectralState;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroDrift;

impl DriftField for ZeroDrift {
    fn eval(
        &self,
        base: &SpectralState,
        _args: &[&SpectralState],
        _ws: &mut GridWorkspace,
    ) -> SpectralState {
        SpectralState::zeros(base.modes())
    }

    fn is_zero(&self) -> bool {
        true
    }
}

/// `F(v) = c v`.
#[derive(Clone, Copy, Debug)]
pub struct LinearDrift(pub f64);

impl DriftField for LinearDrift {
    fn eval(
        &self,
        base: &SpectralState,
        args: &[&SpectralState],
        _ws: &mut GridWorkspace,
    ) -> SpectralState {
        match args {
            [] => {
                let mut s = base.clone();
                s.scale(self.0);
                s
            }
            [g] => {
                let mut s = (*g).clone();
                s.scale(self.0);
                s
            }
            _ => SpectralState::zeros(base.modes()),
        }
    }
}

/// `B(v)(w) = v * w` pointwise. Linear in `v`, so `B'(v) = B` and higher
/// derivatives vanish.
#[derive(Clone, Copy, Debug, Default)]
pub struct MultiplicationNoise;

impl DiffusionField for MultiplicationNoise {
    fn apply(
        &self,
        base: &SpectralState,
        args: &[&SpectralState],
        dw: &NoiseIncrement,
        ws: &mut GridWorkspace,
    ) -> SpectralState {
        let n = base.modes();
        let v = match args {
            [] => base,
            [g] => *g,
            _ => return SpectralState::zeros(n),
        };
        SpectralState::from_coeffs(ws.product_with_grid(v.coeffs(), &dw.grid, n))
    }
}

/// `B(v) w = sum_k b_k w_k e_k`, independent of `v`.
#[derive(Clone, Debug)]
pub struct DiagonalAdditive {
    pub weights: Vec<f64>,
}

impl DiffusionField for DiagonalAdditive {
    fn apply(
        &self,
        base: &SpectralState,
        args: &[&SpectralState],
        dw: &NoiseIncrement,
        _ws: &mut GridWorkspace,
    ) -> SpectralState {
        let mut out = SpectralState::zeros(base.modes());
        if args.is_empty() {
            for ((o, b), w) in out.coeffs_mut().iter_mut().zip(&self.weights).zip(&dw.coeffs) {
                *o = b * w;
            }
        }
        out
    }
}

#[derive(Clone)]
pub struct ModelSpec {
    pub name: String,
    /// `lambda_i`, `i = 1..=N`.
    pub eigenvalues: Vec<f64>,
    pub noise_modes: usize,
    pub drift: Arc<dyn DriftField>,
    pub diffusion: Arc<dyn DiffusionField>,
    pub gamma: f64,
    pub delta: f64,
    pub initial: SpectralState,
}

impl fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelSpec")
            .field("name", &self.name)
            .field("modes", &self.modes())
            .field("noise_modes", &self.noise_modes)
            .field("gamma", &self.gamma)
            .field("delta", &self.delta)
            .finish()
    }
}

impl ModelSpec {
    pub fn modes(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: String| Err(ModelError::BadParameter(m));
        if self.eigenvalues.is_empty() || self.noise_modes == 0 {
            return bad("need N, M >= 1".into());
        }
        if !self.eigenvalues.iter().all(|l| l.is_finite() && *l > 0.0) {
            return bad("eigenvalues must be positive".into());
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad(format!("gamma = {} outside (0,1)", self.gamma));
        }
        if !(self.delta > 0.0 && self.delta <= 0.5) {
            return bad(format!("delta = {} outside (0,1/2]", self.delta));
        }
        if self.initial.modes() != self.modes() || !self.initial.is_finite() {
            return bad("initial state must be finite with N modes".into());
        }
        Ok(())
    }

    /// Grid workspace sized for this model.
    pub fn workspace(&self) -> GridWorkspace {
        GridWorkspace::for_modes(self.modes().max(self.noise_modes))
    }

    pub fn with_initial(mut self, initial: SpectralState) -> Self {
        self.initial = initial;
        self
    }

    pub fn by_name(name: &str, n: usize, m: usize, r: f64) -> Result<ModelSpec, ModelError> {
        match name {
            "heat-mult" => heat_multiplicative_model(n, m, r),
            "heat-add" => heat_additive_model(n, m),
            other => Err(ModelError::UnknownModel(other.to_string())),
        }
    }
}

fn dirichlet_eigenvalues(n: usize) -> Vec<f64> {
    (1..=n).map(|i| PI * PI * (i * i) as f64).collect()
}

fn check_sizes(n: usize, m: usize) -> Result<(), ModelError> {
    if n == 0 || m == 0 {
        return Err(ModelError::BadParameter(format!(
            "need N, M >= 1, got N = {n}, M = {m}"
        )));
    }
    Ok(())
}

/// Heat equation on (0,1) with Dirichlet conditions, `F = 0` and
/// multiplication noise. `(gamma, delta) = (1/4 - r, 1/4)`.
pub fn heat_multiplicative_model(n: usize, m: usize, r: f64) -> Result<ModelSpec, ModelError> {
    check_sizes(n, m)?;
    if !(r > 0.0 && r < 0.25) {
        return Err(ModelError::BadParameter(format!("r = {r} outside (0, 1/4)")));
    }
    let spec = ModelSpec {
        name: "heat-mult".into(),
        eigenvalues: dirichlet_eigenvalues(n),
        noise_modes: m,
        drift: Arc::new(ZeroDrift),
        diffusion: Arc::new(MultiplicationNoise),
        gamma: 0.25 - r,
        delta: 0.25,
        initial: initial_condition(InitialKind::SmoothPoly, n),
    };
    spec.validate()?;
    Ok(spec)
}

/// Heat equation with additive noise `B = diag(1/k)` on the first
/// `min(N, M)` modes. `(gamma, delta) = (1/2, 1/2)`.
pub fn heat_additive_model(n: usize, m: usize) -> Result<ModelSpec, ModelError> {
    check_sizes(n, m)?;
    let spec = ModelSpec {
        name: "heat-add".into(),
        eigenvalues: dirichlet_eigenvalues(n),
        noise_modes: m,
        drift: Arc::new(ZeroDrift),
        diffusion: Arc::new(DiagonalAdditive {
            weights: (1..=n.min(m)).map(|k| 1.0 / k as f64).collect(),
        }),
        gamma: 0.5,
        delta: 0.5,
        initial: initial_condition(InitialKind::SmoothPoly, n),
    };
    spec.validate()?;
    Ok(spec)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitialKind {
    /// `x (1 - x)`.
    SmoothPoly,
    /// `e_1`.
    FirstMode,
}

impl std::str::FromStr for InitialKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, ModelError> {
        match s {
            "smooth_poly" | "smooth-poly" => Ok(InitialKind::SmoothPoly),
            "first_mode" | "first-mode" => Ok(InitialKind::FirstMode),
            other => Err(ModelError::UnknownInitial(other.to_string())),
        }
    }
}

impl fmt::Display for InitialKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InitialKind::SmoothPoly => "smooth_poly",
            InitialKind::FirstMode => "first_mode",
        })
    }
}

pub fn initial_condition(kind: InitialKind, n: usize) -> SpectralState {
    match kind {
        InitialKind::FirstMode => SpectralState::unit(n, 1),
        InitialKind::SmoothPoly => SpectralState::from_coeffs(
            (1..=n)
                .map(|i| {
                    if i % 2 == 1 {
                        4.0 * SQRT_2 / (PI.powi(3) * (i as f64).powi(3))
                    } else {
                        0.0
                    }
                })
                .collect(),
        ),
    }
}

/// `e^{At} state`, exact per mode.
pub fn apply_semigroup(state: &SpectralState, t: f64, spec: &ModelSpec) -> SpectralState {
    let coeffs = state
        .coeffs()
        .iter()
        .zip(&spec.eigenvalues)
        .map(|(c, l)| c * (-l * t).exp())
        .collect();
    SpectralState::from_coeffs(coeffs)
}

/// `B^(n)(base)(args)(e_k)`.
pub fn apply_diffusion(
    spec: &ModelSpec,
    base: &SpectralState,
    args: &[&SpectralState],
    k: usize,
    ws: &mut GridWorkspace,
) -> Result<SpectralState, ModelError> {
    if k == 0 || k > spec.noise_modes {
        return Err(ModelError::NoiseModeOutOfRange {
            k,
            m: spec.noise_modes,
        });
    }
    let dw = NoiseIncrement::unit(spec.noise_modes, k, ws);
    Ok(spec.diffusion.apply(base, args, &dw, ws))
}

/// `F^(n)(base)(args)`.
pub fn apply_drift(
    spec: &ModelSpec,
    base: &SpectralState,
    args: &[&SpectralState],
    ws: &mut GridWorkspace,
) -> SpectralState {
    spec.drift.eval(base, args, ws)
}

/// `|e^{At} B(v)|_HS` over the `N x M` truncation.
pub fn smoothed_hs_norm(
    spec: &ModelSpec,
    v: &SpectralState,
    t: f64,
    ws: &mut GridWorkspace,
) -> f64 {
    let mut total = 0.0;
    for k in 1..=spec.noise_modes {
        let col = apply_diffusion(spec, v, &[], k, ws).expect("k in range");
        total += apply_semigroup(&col, t, spec).norm_sq();
    }
    total.sqrt()
}
