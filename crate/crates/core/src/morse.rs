//! Critical values of half-squared diagonal lengths.
//!
//! For a hexagon `A1..A6` with side `ℓ_i = |A_i A_{i+1}|` and diagonal
//! `A1A4`, the diagonal only sees the two three-bar chains it closes, so the
//! critical values of `d = |A1A4|` are those of folded chains. The numeric
//! oracle finds critical points of `ν = d²/2` on the configuration space of
//! any linkage by Riemannian Newton iteration from random starts.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{min_norm_solve, ConstraintSystem};
use crate::rng::derive_seed;

#[derive(Clone, Debug, PartialEq)]
pub struct CriticalValueReport {
    pub max_value: f64,
    pub saddle_values: Vec<f64>,
    pub min_value: f64,
    /// Listed values that coincide; the lengths are not generic.
    pub warnings: Vec<String>,
}

impl CriticalValueReport {
    /// All listed values, ascending, without duplicates.
    pub fn values(&self) -> Vec<f64> {
        let mut v = vec![self.min_value, self.max_value];
        v.extend(&self.saddle_values);
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    /// Listed values inside `[min, max]`, the range swept by the diagonal.
    pub fn feasible_values(&self) -> Vec<f64> {
        self.values()
            .into_iter()
            .filter(|v| *v >= self.min_value && *v <= self.max_value)
            .collect()
    }

    pub fn is_generic(&self) -> bool {
        self.warnings.is_empty()
    }
}

/// Critical values of `|A1A4|` on the hexagon with sides `ℓ_1..ℓ_6`.
///
/// Each chain's sides are sorted and the chain with the smaller total is
/// labelled `ℓ_1 ≤ ℓ_2 ≤ ℓ_3`, the other `ℓ_4 ≤ ℓ_5 ≤ ℓ_6`.
pub fn hexagon_critical_values(lengths: &[f64; 6]) -> Result<CriticalValueReport> {
    if lengths.iter().any(|l| !l.is_finite() || *l <= 0.0) {
        return Err(Error::InfeasibleLengths);
    }
    let longest = lengths.iter().copied().fold(0.0, f64::max);
    let rest = lengths.iter().sum::<f64>() - longest;
    if longest > rest {
        return Err(Error::InfeasibleHexagon { longest, rest });
    }

    let mut first = [lengths[0], lengths[1], lengths[2]];
    let mut second = [lengths[3], lengths[4], lengths[5]];
    first.sort_by(f64::total_cmp);
    second.sort_by(f64::total_cmp);
    if first.iter().sum::<f64>() > second.iter().sum::<f64>() {
        std::mem::swap(&mut first, &mut second);
    }
    let [l1, l2, l3] = first;
    let [l4, l5, l6] = second;

    let inner = l1 + l2 - l3;
    let outer = l4 + l5 - l6;
    let mut saddle_values = Vec::new();
    if inner > 0.0 {
        saddle_values.push(inner);
    }
    saddle_values.extend([l3 + l2 - l1, l3 + l1 - l2]);
    if outer > 0.0 {
        saddle_values.push(outer);
    }
    saddle_values.extend([l6 + l5 - l4, l6 + l4 - l5]);

    let max_value = l1 + l2 + l3;
    let min_value = if inner > 0.0 && outer > 0.0 {
        0.0
    } else {
        (l3 - l1 - l2).max(l6 - l4 - l5).max(0.0)
    };

    let mut all = vec![min_value, max_value];
    all.extend(&saddle_values);
    all.sort_by(f64::total_cmp);
    let mut warnings = Vec::new();
    for w in all.windows(2) {
        if (w[1] - w[0]).abs() <= 1e-12 * (1.0 + w[1].abs()) {
            let message = format!("listed critical values coincide at {}", w[0]);
            if !warnings.contains(&message) {
                warnings.push(message);
            }
        }
    }

    Ok(CriticalValueReport {
        max_value,
        saddle_values,
        min_value,
        warnings,
    })
}

#[derive(Clone, Debug)]
pub struct CriticalPoint {
    /// Diagonal length `d`.
    pub value: f64,
    /// `ν = d²/2`.
    pub nu: f64,
    pub gradient_norm: f64,
    /// Negative eigenvalues of the Hessian transversal to the critical set.
    pub index: usize,
    /// Zero eigenvalues: the dimension of the critical set through the point.
    pub nullity: usize,
    /// Number of converged starts in the cluster.
    pub hits: usize,
    pub point: DVector<f64>,
}

const GRADIENT_TOLERANCE: f64 = 1e-8;
const CLUSTER_TOLERANCE: f64 = 1e-6;
const EIGEN_THRESHOLD: f64 = 1e-6;

struct Searcher<'a> {
    system: &'a ConstraintSystem,
    ends: (usize, usize),
    hessian: DMatrix<f64>,
    bar_hessians: Vec<DMatrix<f64>>,
    step_cap: f64,
}

struct Local {
    basis: DMatrix<f64>,
    gradient: DVector<f64>,
    hessian: DMatrix<f64>,
}

impl<'a> Searcher<'a> {
    fn new(system: &'a ConstraintSystem, diagonal: usize) -> Self {
        let ends = system.diagonal_endpoints(diagonal);
        let bar_hessians = (0..system.bar_count())
            .map(|i| {
                let (a, b) = system.bar_endpoints(i);
                system.distance_hessian(a, b)
            })
            .collect();
        let mean = system.spec().edges().iter().map(|e| e.length).sum::<f64>()
            / system.spec().edges().len().max(1) as f64;
        Self {
            system,
            ends,
            hessian: system.distance_hessian(ends.0, ends.1),
            bar_hessians,
            step_cap: 0.5 * mean,
        }
    }

    fn nu(&self, x: &DVector<f64>) -> f64 {
        let p = self.system.positions(x);
        (p[self.ends.0] - p[self.ends.1]).norm_squared() / 2.0
    }

    /// Tangent-space gradient and Lagrangian Hessian of `ν`.
    fn local(&self, x: &DVector<f64>) -> Result<Local> {
        let basis = self.system.tangent_basis(x, false)?;
        let full = self.system.distance_gradient(x, self.ends.0, self.ends.1);
        let j = self.system.bar_jacobian(x);
        let multipliers = min_norm_solve(&j.transpose(), &full, 1e-12);
        let mut h = self.hessian.clone();
        for (lambda, hb) in multipliers.iter().zip(&self.bar_hessians) {
            h -= hb * *lambda;
        }
        Ok(Local {
            gradient: basis.transpose() * full,
            hessian: basis.transpose() * h * &basis,
            basis,
        })
    }

    fn newton(&self, mut x: DVector<f64>) -> Option<(DVector<f64>, Local)> {
        for _ in 0..100 {
            let local = self.local(&x).ok()?;
            if local.gradient.norm() <= 1e-13 * (1.0 + self.step_cap) {
                return Some((x, local));
            }
            let eigen = local.hessian.clone().symmetric_eigen();
            let cut = eigen.eigenvalues.amax() * 1e-10;
            let mut step = DVector::zeros(local.gradient.len());
            for (k, lambda) in eigen.eigenvalues.iter().enumerate() {
                if lambda.abs() > cut {
                    let v = eigen.eigenvectors.column(k);
                    step -= v * (v.dot(&local.gradient) / lambda);
                }
            }
            let norm = step.norm();
            if norm > self.step_cap {
                step *= self.step_cap / norm;
            }
            let next = self.system.project(&(x.clone() + &local.basis * step)).ok()?;
            let moved = (&next - &x).norm();
            x = next;
            if moved <= 1e-15 * (1.0 + x.norm()) {
                break;
            }
        }
        let local = self.local(&x).ok()?;
        (local.gradient.norm() <= GRADIENT_TOLERANCE).then_some((x, local))
    }

    /// Projected gradient ascent (`sign = 1`) or descent (`sign = -1`).
    fn gradient_flow(&self, mut x: DVector<f64>, sign: f64) -> Option<DVector<f64>> {
        let h = 0.2;
        for _ in 0..200 {
            let local = self.local(&x).ok()?;
            let mut step = &local.basis * &local.gradient * (sign * h);
            let norm = step.norm();
            if norm <= GRADIENT_TOLERANCE {
                break;
            }
            if norm > self.step_cap {
                step *= self.step_cap / norm;
            }
            x = self.system.project(&(x + step)).ok()?;
        }
        Some(x)
    }

    fn classify(&self, x: DVector<f64>, local: &Local) -> CriticalPoint {
        let eigen = local.hessian.clone().symmetric_eigen();
        let nu = self.nu(&x);
        CriticalPoint {
            value: (2.0 * nu).sqrt(),
            nu,
            gradient_norm: local.gradient.norm(),
            index: eigen.eigenvalues.iter().filter(|l| **l < -EIGEN_THRESHOLD).count(),
            nullity: eigen
                .eigenvalues
                .iter()
                .filter(|l| l.abs() <= EIGEN_THRESHOLD)
                .count(),
            hits: 1,
            point: x,
        }
    }
}

/// Multi-start search for critical points of `ν = d²/2` for marked diagonal
/// `diagonal` of `system`. Each start is polished by Newton's method directly
/// and after projected gradient ascent and descent. Converged points are
/// clustered by `ν`, ascending.
pub fn numeric_critical_values(
    system: &ConstraintSystem,
    diagonal: usize,
    seed: u64,
    starts: usize,
) -> Result<Vec<CriticalPoint>> {
    if diagonal >= system.diagonal_count() {
        return Err(Error::DimensionMismatch {
            expected: system.diagonal_count(),
            got: diagonal,
        });
    }
    let searcher = Searcher::new(system, diagonal);

    let samples: Vec<DVector<f64>> = (0..starts as u64)
        .into_par_iter()
        .filter_map(|s| {
            system
                .random_feasible(derive_seed(seed, s), 50)
                .ok()
                .map(|r| r.coordinates)
        })
        .collect();
    if samples.is_empty() {
        return Err(Error::NoRealization { attempts: starts * 50 });
    }
    let varies = samples.iter().take(16).any(|x| {
        searcher
            .local(x)
            .map(|l| l.gradient.norm() > GRADIENT_TOLERANCE)
            .unwrap_or(false)
    });
    if !varies {
        return Err(Error::ConstantFunction);
    }

    let mut found: Vec<CriticalPoint> = samples
        .par_iter()
        .flat_map_iter(|x| {
            let candidates = [
                Some(x.clone()),
                searcher.gradient_flow(x.clone(), 1.0),
                searcher.gradient_flow(x.clone(), -1.0),
            ];
            candidates
                .into_iter()
                .flatten()
                .filter_map(|y| searcher.newton(y))
                .map(|(y, local)| searcher.classify(y, &local))
                .collect::<Vec<_>>()
        })
        .collect();
    found.sort_by(|a, b| a.nu.total_cmp(&b.nu));

    let mut clusters: Vec<CriticalPoint> = Vec::new();
    for p in found {
        match clusters.last_mut() {
            Some(c) if (p.nu - c.nu).abs() <= CLUSTER_TOLERANCE => {
                let hits = c.hits + 1;
                if p.gradient_norm < c.gradient_norm {
                    *c = p;
                }
                c.hits = hits;
            }
            _ => clusters.push(p),
        }
    }
    Ok(clusters)
}

/// Whether critical points of `ν` with the same value exist near `point`
/// along the null directions of the transversal Hessian.
pub fn is_non_isolated(system: &ConstraintSystem, diagonal: usize, point: &DVector<f64>) -> Result<bool> {
    let searcher = Searcher::new(system, diagonal);
    let local = searcher.local(point)?;
    let eigen = local.hessian.clone().symmetric_eigen();
    let nu = searcher.nu(point);
    let epsilon = 1e-3 * searcher.step_cap;
    for (k, lambda) in eigen.eigenvalues.iter().enumerate() {
        if lambda.abs() > EIGEN_THRESHOLD {
            continue;
        }
        let direction = &local.basis * eigen.eigenvectors.column(k);
        for sign in [1.0, -1.0] {
            let Ok(moved) = system.project(&(point + &direction * (sign * epsilon))) else {
                continue;
            };
            if let Some((y, _)) = searcher.newton(moved) {
                if (y.clone() - point).norm() > 0.5 * epsilon
                    && (searcher.nu(&y) - nu).abs() <= 1e-9 * (1.0 + nu)
                {
                    return Ok(true);
                }
            }
        }
    }
    Ok(false)
}
