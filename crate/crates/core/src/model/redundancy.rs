//! Redundant bars: bars whose length function depends on the other bars'.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::PinnedSpec;
use crate::error::{Error, Result};
use crate::geometry::{min_norm_solve, numerical_rank, ConstraintSystem};
use crate::rng::derive_seed;

#[derive(Clone, Debug, PartialEq)]
pub struct RedundantBar {
    /// Index of the redundant bar in the unpinned spec.
    pub edge: usize,
    /// Earlier independent bars whose gradients span this bar's gradient.
    pub depends_on: Vec<usize>,
    /// Corank of the full bar Jacobian at the first sample.
    pub corank: usize,
}

/// Samples realizations of `pinned` and reports, in bar order, every bar
/// whose gradient lies in the span of the preceding independent bars at all
/// samples. Gradients are taken over all non-base coordinates of the
/// unpinned linkage so the bar removed by pinning is examined too.
pub fn detect_redundant_bars(
    pinned: &PinnedSpec,
    samples: usize,
    seed: u64,
) -> Result<Vec<RedundantBar>> {
    let system = ConstraintSystem::new(pinned.clone());
    let full = ConstraintSystem::new(PinnedSpec::unpinned(pinned.original()));
    let rank_cut = system.tolerances().rank;

    let jacobians: Vec<DMatrix<f64>> = (0..samples as u64)
        .into_par_iter()
        .filter_map(|s| {
            system
                .random_feasible(derive_seed(seed, s), 50)
                .ok()
                .map(|r| full.bar_jacobian(&full.coordinates_of(&r.positions)))
        })
        .collect();
    if jacobians.is_empty() {
        return Err(Error::InfeasibleLengths);
    }

    let rows_of = |j: &DMatrix<f64>, idx: &[usize]| -> DMatrix<f64> {
        DMatrix::from_fn(idx.len(), j.ncols(), |r, c| j[(idx[r], c)])
    };

    let bars = full.bar_count();
    let corank = bars - numerical_rank(&jacobians[0], rank_cut);
    let mut independent: Vec<usize> = Vec::new();
    let mut out = Vec::new();
    for i in 0..bars {
        let mut with_i = independent.clone();
        with_i.push(i);
        let dependent = jacobians.iter().all(|j| {
            numerical_rank(&rows_of(j, &with_i), rank_cut)
                == numerical_rank(&rows_of(j, &independent), rank_cut)
        });
        if !dependent {
            independent.push(i);
            continue;
        }
        let j = &jacobians[0];
        let basis = rows_of(j, &independent).transpose();
        let target: DVector<f64> = j.row(i).transpose();
        let coefficients = min_norm_solve(&basis, &target, 1e-12);
        let biggest = coefficients.amax();
        let depends_on = independent
            .iter()
            .zip(coefficients.iter())
            .filter(|(_, c)| c.abs() > 1e-8 * biggest)
            .map(|(&e, _)| e)
            .collect();
        out.push(RedundantBar {
            edge: i,
            depends_on,
            corank,
        });
    }
    Ok(out)
}
