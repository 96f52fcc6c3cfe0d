//! Sine-basis states and the collocation grid used for pointwise products.
//!
//! States are coefficient vectors against `e_i(x) = sqrt(2) sin(i pi x)`,
//! `i = 1..=N`. Grid values live on the interior points `x_p = p / P`,
//! `p = 1..P-1`, and are reached through a DST-I of length `P - 1`.

use std::fmt;
use std::io::{self, Write};
use std::sync::Arc;

use rustdct::{DctPlanner, Dst1};

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralState {
    coeffs: Vec<f64>,
}

impl SpectralState {
    pub fn zeros(modes: usize) -> Self {
        SpectralState {
            coeffs: vec![0.0; modes],
        }
    }

    pub fn from_coeffs(coeffs: Vec<f64>) -> Self {
        SpectralState { coeffs }
    }

    /// Unit coefficient on mode `i` (1-based).
    pub fn unit(modes: usize, i: usize) -> Self {
        let mut s = SpectralState::zeros(modes);
        s.coeffs[i - 1] = 1.0;
        s
    }

    pub fn modes(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// H-norm, equal to the Euclidean norm of the coefficients.
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    pub fn axpy(&mut self, a: f64, x: &SpectralState) {
        for (y, x) in self.coeffs.iter_mut().zip(&x.coeffs) {
            *y += a * x;
        }
    }

    pub fn scale(&mut self, a: f64) {
        self.coeffs.iter_mut().for_each(|c| *c *= a);
    }

    pub fn sub(&self, other: &SpectralState) -> SpectralState {
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a - b)
            .collect();
        SpectralState { coeffs }
    }

    /// Writes `mode,coefficient` lines with a header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "mode,coefficient")?;
        for (i, c) in self.coeffs.iter().enumerate() {
            writeln!(out, "{},{:e}", i + 1, c)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("grid with P = {points} cannot resolve products of {modes}-mode functions (need P >= {})", 2 * .modes)]
pub struct GridTooCoarse {
    pub points: usize,
    pub modes: usize,
}

/// Scratch space and transform plan for one thread.
pub struct GridWorkspace {
    points: usize,
    dst: Arc<dyn Dst1<f64>>,
    scratch: Vec<f64>,
}

impl fmt::Debug for GridWorkspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridWorkspace")
            .field("points", &self.points)
            .finish()
    }
}

impl Clone for GridWorkspace {
    fn clone(&self) -> Self {
        GridWorkspace {
            points: self.points,
            dst: Arc::clone(&self.dst),
            scratch: vec![0.0; self.scratch.len()],
        }
    }
}

impl GridWorkspace {
    /// Workspace with `P = points` for functions of up to `modes` modes.
    pub fn new(points: usize, modes: usize) -> Result<Self, GridTooCoarse> {
        if points < 2 * modes || points < 2 {
            return Err(GridTooCoarse { points, modes });
        }
        let dst = DctPlanner::new().plan_dst1(points - 1);
        let scratch = vec![0.0; dst.get_scratch_len()];
        Ok(GridWorkspace {
            points,
            dst,
            scratch,
        })
    }

    /// The default `P = 4 * modes`.
    pub fn for_modes(modes: usize) -> Self {
        GridWorkspace::new(4 * modes.max(1), modes).expect("4N >= 2N")
    }

    pub fn points(&self) -> usize {
        self.points
    }

    /// Interior grid coordinates `p / P`.
    pub fn nodes(&self) -> Vec<f64> {
        (1..self.points)
            .map(|p| p as f64 / self.points as f64)
            .collect()
    }

    /// Grid values `f(x_p) = sum_i c_i sqrt(2) sin(i pi x_p)`.
    pub fn to_grid(&mut self, coeffs: &[f64]) -> Vec<f64> {
        let mut buf = vec![0.0; self.points - 1];
        let n = coeffs.len().min(buf.len());
        buf[..n].copy_from_slice(&coeffs[..n]);
        self.dst.process_dst1_with_scratch(&mut buf, &mut self.scratch);
        let s = std::f64::consts::SQRT_2;
        buf.iter_mut().for_each(|v| *v *= s);
        buf
    }

    /// First `modes` sine coefficients of grid values, by the discrete
    /// orthogonality `sum_p sin(i pi x_p) sin(m pi x_p) = P/2 delta_im`.
    pub fn to_coeffs(&mut self, grid: &[f64], modes: usize) -> Vec<f64> {
        let mut buf = grid.to_vec();
        self.dst.process_dst1_with_scratch(&mut buf, &mut self.scratch);
        let s = std::f64::consts::SQRT_2 / self.points as f64;
        let mut out = vec![0.0; modes];
        for (o, b) in out.iter_mut().zip(&buf) {
            *o = b * s;
        }
        out
    }

    /// Coefficients of the pointwise product `f * g`, truncated to `modes`.
    pub fn product_with_grid(&mut self, f: &[f64], g_grid: &[f64], modes: usize) -> Vec<f64> {
        let mut fg = self.to_grid(f);
        for (a, b) in fg.iter_mut().zip(g_grid) {
            *a *= b;
        }
        self.to_coeffs(&fg, modes)
    }

    /// Quadrature `sqrt(sum_p f_p^2 / P)` of the L2 norm on (0,1).
    pub fn grid_l2_norm(&self, grid: &[f64]) -> f64 {
        (grid.iter().map(|v| v * v).sum::<f64>() / self.points as f64).sqrt()
    }
}
