//! Lanczos approximation of `exp(−iHt)·v` with adaptive sub-stepping.
//!
//! Each sub-step builds an orthonormal Krylov basis `V` (full
//! re-orthogonalization) and tridiagonal `T = VᵀHV`, then uses
//! `exp(−iHτ)v ≈ β V exp(−iτT) e₁`. The a-posteriori estimate
//! `β · β_m · |e_mᵀ exp(−iτT) e₁|` bounds the truncation error; the basis grows
//! until the remaining interval meets its share of the tolerance, or, at the
//! dimension cap, the step is shortened until it does.
//!
//! Because `e^{−iτT}` commutes with `T` and `V` is orthonormal, each step
//! preserves ‖v‖ and ⟨H⟩ up to round-off, independent of the truncation error.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::hamiltonian::StaticHamiltonian;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KrylovOptions {
    /// Absolute tolerance on the propagated vector over a whole segment.
    pub tol: f64,
    pub max_dim: usize,
    pub max_substeps: usize,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_dim: 30,
            max_substeps: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct KrylovStats {
    pub substeps: usize,
    pub matvecs: usize,
}

/// Eigen-decomposition of the Lanczos tridiagonal, used to evaluate
/// `exp(−iτT)e₁` for many trial τ.
struct SmallExp {
    vectors: DMatrix<f64>,
    values: Vec<f64>,
    first_row: Vec<f64>,
}

impl SmallExp {
    fn new(alpha: &[f64], beta: &[f64]) -> Self {
        let m = alpha.len();
        let mut t = DMatrix::<f64>::zeros(m, m);
        for k in 0..m {
            t[(k, k)] = alpha[k];
            if k + 1 < m {
                t[(k, k + 1)] = beta[k];
                t[(k + 1, k)] = beta[k];
            }
        }
        let eig = SymmetricEigen::new(t);
        let first_row = (0..m).map(|k| eig.eigenvectors[(0, k)]).collect();
        Self {
            values: eig.eigenvalues.iter().copied().collect(),
            vectors: eig.eigenvectors,
            first_row,
        }
    }

    fn dim(&self) -> usize {
        self.values.len()
    }

    /// `exp(−iτT) e₁`
    fn apply(&self, tau: f64) -> Vec<C64> {
        let m = self.dim();
        let w: Vec<C64> = (0..m)
            .map(|k| C64::from_polar(self.first_row[k], -tau * self.values[k]))
            .collect();
        (0..m)
            .map(|r| (0..m).map(|k| w[k] * self.vectors[(r, k)]).sum())
            .collect()
    }

    fn last_component(&self, tau: f64) -> f64 {
        let m = self.dim();
        let r = m - 1;
        (0..m)
            .map(|k| C64::from_polar(self.first_row[k], -tau * self.values[k]) * self.vectors[(r, k)])
            .sum::<C64>()
            .norm()
    }
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// In-place `v ← exp(−iH·t) v`.
pub fn expm_multiply(h: &StaticHamiltonian, v: &mut [C64], t: f64, opts: &KrylovOptions) -> Result<KrylovStats> {
    let mut stats = KrylovStats::default();
    if t == 0.0 {
        return Ok(stats);
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Convergence(format!("segment length must be >= 0, got {t}")));
    }
    if !(opts.tol > 0.0) || opts.max_dim < 2 {
        return Err(Error::Convergence("tolerance must be positive and max_dim >= 2".into()));
    }
    let dim = v.len();
    let max_dim = opts.max_dim.min(dim);
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(max_dim + 1);
    let mut w = vec![C64::new(0.0, 0.0); dim];
    let mut done = 0.0;
    let mut last_step: Option<f64> = None;

    while t - done > t * 1e-15 {
        if stats.substeps >= opts.max_substeps {
            return Err(Error::Convergence(format!(
                "exceeded {} sub-steps at t = {done} of {t}",
                opts.max_substeps
            )));
        }
        let remaining = t - done;
        let beta0 = norm(v);
        if beta0 == 0.0 {
            break;
        }
        basis.clear();
        basis.push(v.iter().map(|x| x / beta0).collect());
        let mut alpha: Vec<f64> = Vec::with_capacity(max_dim);
        let mut beta: Vec<f64> = Vec::with_capacity(max_dim);
        let budget = |tau: f64| opts.tol * tau / t;

        let mut accepted: Option<(SmallExp, f64)> = None;
        for j in 0..max_dim {
            h.apply(&basis[j], &mut w);
            stats.matvecs += 1;
            let a = dot(&basis[j], &w).re;
            alpha.push(a);
            for (wk, vk) in w.iter_mut().zip(&basis[j]) {
                *wk -= vk * a;
            }
            if j > 0 {
                let b = beta[j - 1];
                for (wk, vk) in w.iter_mut().zip(&basis[j - 1]) {
                    *wk -= vk * b;
                }
            }
            for vk in basis.iter() {
                let c = dot(vk, &w);
                for (wk, x) in w.iter_mut().zip(vk) {
                    *wk -= x * c;
                }
            }
            let b = norm(&w);
            let scale = alpha.iter().map(|x| x.abs()).fold(b, f64::max).max(1.0);
            let small = SmallExp::new(&alpha, &beta);

            // Invariant subspace: the projection is exact for any step.
            if b <= 1e-13 * scale {
                accepted = Some((small, remaining));
                break;
            }
            if j + 1 >= 2 && beta0 * b * small.last_component(remaining) <= budget(remaining) {
                accepted = Some((small, remaining));
                break;
            }
            if j + 1 == max_dim {
                let err = |tau: f64| beta0 * b * small.last_component(tau);
                let mut ok = last_step.unwrap_or(remaining).min(remaining);
                while err(ok) > budget(ok) {
                    ok *= 0.5;
                    if ok < t * 1e-12 {
                        return Err(Error::Convergence(format!(
                            "step collapsed below {:.3e} µs with krylov dimension {max_dim}",
                            t * 1e-12
                        )));
                    }
                }
                // grow toward the largest admissible step
                let mut bad = remaining;
                if err(bad) <= budget(bad) {
                    ok = bad;
                } else {
                    for _ in 0..8 {
                        let mid = 0.5 * (ok + bad);
                        if err(mid) <= budget(mid) {
                            ok = mid;
                        } else {
                            bad = mid;
                        }
                    }
                }
                accepted = Some((small, ok));
                break;
            }
            let inv = 1.0 / b;
            beta.push(b);
            basis.push(w.iter().map(|x| x * inv).collect());
        }

        let (small, tau) = accepted.expect("loop always accepts");
        let y = small.apply(tau);
        v.iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));
        for (yk, vk) in y.iter().zip(&basis) {
            let c = yk * beta0;
            for (x, b) in v.iter_mut().zip(vk) {
                *x += b * c;
            }
        }
        last_step = Some(tau);
        done += tau;
        stats.substeps += 1;
    }
    Ok(stats)
}
