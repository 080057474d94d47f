//! Derivative-free minimization with the adaptive Nelder–Mead simplex.
//!
//! Coefficients scale with the dimension (Gao & Han 2012), which keeps the
//! simplex from collapsing prematurely in the 10–20 parameter range used by
//! the variational compiler. After convergence the simplex is rebuilt around
//! the best vertex and the search resumed until a rebuild stops improving.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    /// Converged when every vertex lies within this distance (max norm) of the best.
    pub xtol: f64,
    /// ... and the spread of function values is below this.
    pub ftol: f64,
    /// Edge length of the initial simplex.
    pub initial_step: f64,
    /// Simplex rebuilds after convergence.
    pub rebuilds: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_evals: 20_000,
            xtol: 1e-9,
            ftol: 1e-12,
            initial_step: 0.25,
            rebuilds: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
}

struct Counter<F> {
    f: F,
    evals: usize,
}

impl<F: FnMut(&[f64]) -> f64> Counter<F> {
    fn eval(&mut self, x: &[f64]) -> Result<f64> {
        self.evals += 1;
        let v = (self.f)(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Numeric(format!("cost is {v} at {x:?}")))
        }
    }
}

/// Minimizes `f` from `x0`. A non-finite function value aborts the search
/// with [`Error::Numeric`].
pub fn minimize<F>(f: F, x0: &[f64], opts: &NelderMeadOptions) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> f64,
{
    if x0.is_empty() {
        return Err(Error::domain("cannot minimize over zero parameters"));
    }
    let mut counter = Counter { f, evals: 0 };
    let mut best_x = x0.to_vec();
    let mut best = counter.eval(&best_x)?;
    for _ in 0..=opts.rebuilds {
        let (x, v) = run_simplex(&mut counter, &best_x, best, opts)?;
        let improved = best - v > opts.ftol;
        if v < best {
            best = v;
            best_x = x;
        }
        if !improved || counter.evals >= opts.max_evals {
            break;
        }
    }
    Ok(Minimum { x: best_x, value: best, evals: counter.evals })
}

fn run_simplex<F: FnMut(&[f64]) -> f64>(
    counter: &mut Counter<F>,
    start: &[f64],
    start_value: f64,
    opts: &NelderMeadOptions,
) -> Result<(Vec<f64>, f64)> {
    let n = start.len();
    let nf = n as f64;
    let (alpha, beta, gamma, delta) = if n >= 2 {
        (1.0, 1.0 + 2.0 / nf, 0.75 - 1.0 / (2.0 * nf), 1.0 - 1.0 / nf)
    } else {
        (1.0, 2.0, 0.5, 0.5)
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((start.to_vec(), start_value));
    for i in 0..n {
        let mut x = start.to_vec();
        x[i] += opts.initial_step;
        let v = counter.eval(&x)?;
        simplex.push((x, v));
    }

    loop {
        // stable sort keeps equal values in insertion order
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best_x, best_v) = (&simplex[0].0, simplex[0].1);
        let spread = simplex[n].1 - best_v;
        let size = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(best_x).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if (size <= opts.xtol && spread <= opts.ftol) || counter.evals >= opts.max_evals {
            break;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / nf)
            .collect();
        let worst = simplex[n].0.clone();
        let along = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&worst).map(|(c, w)| c + t * (c - w)).collect()
        };

        let xr = along(alpha);
        let fr = counter.eval(&xr)?;
        if fr < simplex[0].1 {
            let xe = along(alpha * beta);
            let fe = counter.eval(&xe)?;
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc, accept_at) = if fr < simplex[n].1 {
                let xc = along(alpha * gamma);
                let fc = counter.eval(&xc)?;
                (xc, fc, fr)
            } else {
                let xc = along(-gamma);
                let fc = counter.eval(&xc)?;
                (xc, fc, simplex[n].1)
            };
            if fc < accept_at || (fc <= accept_at && fr >= simplex[n].1) {
                simplex[n] = (xc, fc);
            } else {
                let anchor = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> = anchor
                        .iter()
                        .zip(&vertex.0)
                        .map(|(a, v)| a + delta * (v - a))
                        .collect();
                    let v = counter.eval(&x)?;
                    *vertex = (x, v);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, v) = simplex.swap_remove(0);
    Ok((x, v))
}
