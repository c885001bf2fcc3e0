//! The pinned constraint system `μ(x) = ℓ²/2` over the movable-vertex
//! coordinates, with Gauss–Newton realization solving and projection.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::Svd;
use crate::model::{pin, LinkageSpec, PinnedSpec, Point};
use crate::rng::rng;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Residual (relative to `1 + max ℓ²`) at which iteration stops.
    pub iteration: f64,
    /// Residual (relative to `1 + max ℓ²`) at which a point is accepted.
    pub acceptance: f64,
    /// Singular values below `rank * σ_max` count as zero.
    pub rank: f64,
    pub max_halvings: usize,
    /// Default iteration cap for [`ConstraintSystem::project`].
    pub projection_iterations: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            iteration: 1e-12,
            acceptance: 1e-10,
            rank: 1e-8,
            max_halvings: 30,
            projection_iterations: 50,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Slot {
    Fixed(Point),
    Movable(usize),
}

/// A solved placement of every vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct Realization {
    pub coordinates: DVector<f64>,
    pub positions: Vec<Point>,
    /// `max_i |μ_i - ℓ_i²/2|`.
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug)]
pub struct ConstraintSystem {
    pinned: PinnedSpec,
    slots: Vec<Slot>,
    bars: Vec<(usize, usize)>,
    targets: DVector<f64>,
    diagonals: Vec<(usize, usize)>,
    scale: f64,
    tolerances: Tolerances,
}

impl ConstraintSystem {
    pub fn new(pinned: PinnedSpec) -> Self {
        let spec = pinned.spec();
        let mut slots: Vec<Slot> = (0..spec.vertex_count())
            .map(|v| Slot::Fixed(spec.base_position(v).unwrap_or_else(Point::zeros)))
            .collect();
        for (i, &v) in pinned.movable().iter().enumerate() {
            slots[v] = Slot::Movable(i);
        }
        let bars = spec.edges().iter().map(|e| (e.a, e.b)).collect();
        let targets = DVector::from_iterator(
            spec.edges().len(),
            spec.edges().iter().map(|e| e.length * e.length / 2.0),
        );
        let max_sq = spec
            .edges()
            .iter()
            .map(|e| e.length * e.length)
            .fold(0.0, f64::max);
        let diagonals = spec.diagonals().iter().map(|d| (d.a, d.b)).collect();
        Self {
            pinned,
            slots,
            bars,
            targets,
            diagonals,
            scale: 1.0 + max_sq,
            tolerances: Tolerances::default(),
        }
    }

    /// Moves a fixed vertex without touching the spec.
    pub(crate) fn move_fixed(&mut self, v: usize, p: Point) {
        if let Slot::Fixed(q) = &mut self.slots[v] {
            *q = p;
        }
    }

    /// Pins `spec` with the default bar and builds its system.
    pub fn for_spec(spec: &LinkageSpec) -> Result<Self> {
        Ok(Self::new(pin(spec, None)?))
    }

    pub fn with_tolerances(mut self, tolerances: Tolerances) -> Self {
        self.tolerances = tolerances;
        self
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tolerances
    }

    pub fn pinned(&self) -> &PinnedSpec {
        &self.pinned
    }

    pub fn spec(&self) -> &LinkageSpec {
        self.pinned.spec()
    }

    /// Number of coordinates, `2n`.
    pub fn dim(&self) -> usize {
        self.pinned.coordinate_count()
    }

    pub fn bar_count(&self) -> usize {
        self.bars.len()
    }

    pub fn diagonal_count(&self) -> usize {
        self.diagonals.len()
    }

    pub fn targets(&self) -> &DVector<f64> {
        &self.targets
    }

    /// Residual at which a realization is accepted.
    pub fn acceptance_tolerance(&self) -> f64 {
        self.tolerances.acceptance * self.scale
    }

    fn check(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    fn position(&self, x: &DVector<f64>, v: usize) -> Point {
        match self.slots[v] {
            Slot::Fixed(p) => p,
            Slot::Movable(i) => Point::new(x[2 * i], x[2 * i + 1]),
        }
    }

    /// Positions of every vertex (base vertices at their fixed points).
    pub fn positions(&self, x: &DVector<f64>) -> Vec<Point> {
        (0..self.slots.len()).map(|v| self.position(x, v)).collect()
    }

    /// Coordinate vector from a full list of vertex positions; base entries
    /// are ignored.
    pub fn coordinates_of(&self, positions: &[Point]) -> DVector<f64> {
        let mut x = DVector::zeros(self.dim());
        for (i, &v) in self.pinned.movable().iter().enumerate() {
            x[2 * i] = positions[v].x;
            x[2 * i + 1] = positions[v].y;
        }
        x
    }

    /// Index of vertex `v` in the coordinate vector, if movable.
    pub fn slot_of(&self, v: usize) -> Option<usize> {
        match self.slots[v] {
            Slot::Movable(i) => Some(i),
            Slot::Fixed(_) => None,
        }
    }

    fn half_sq(&self, x: &DVector<f64>, (a, b): (usize, usize)) -> f64 {
        (self.position(x, a) - self.position(x, b)).norm_squared() / 2.0
    }

    /// Bar values `μ_i` and diagonal values `ν_d`.
    pub fn evaluate(&self, x: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>)> {
        self.check(x)?;
        Ok((self.bar_values(x), self.diagonal_values(x)))
    }

    pub(crate) fn bar_values(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.bars.len(), self.bars.iter().map(|&p| self.half_sq(x, p)))
    }

    pub(crate) fn diagonal_values(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.diagonals.len(),
            self.diagonals.iter().map(|&p| self.half_sq(x, p)),
        )
    }

    fn fill_row(&self, m: &mut DMatrix<f64>, row: usize, x: &DVector<f64>, (a, b): (usize, usize)) {
        let d = self.position(x, a) - self.position(x, b);
        if let Slot::Movable(i) = self.slots[a] {
            m[(row, 2 * i)] += d.x;
            m[(row, 2 * i + 1)] += d.y;
        }
        if let Slot::Movable(i) = self.slots[b] {
            m[(row, 2 * i)] -= d.x;
            m[(row, 2 * i + 1)] -= d.y;
        }
    }

    /// Gradient rows of the bars, then of the marked diagonals.
    pub fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check(x)?;
        let diagonals: Vec<usize> = (0..self.diagonals.len()).collect();
        Ok(self.stacked_jacobian(x, &diagonals))
    }

    pub(crate) fn bar_jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        self.stacked_jacobian(x, &[])
    }

    /// Bar rows in order, then the rows of the selected diagonals.
    pub(crate) fn stacked_jacobian(&self, x: &DVector<f64>, diagonals: &[usize]) -> DMatrix<f64> {
        self.ordered_jacobian(x, &(0..self.bars.len()).collect::<Vec<_>>(), diagonals)
    }

    pub(crate) fn ordered_jacobian(
        &self,
        x: &DVector<f64>,
        bars: &[usize],
        diagonals: &[usize],
    ) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(bars.len() + diagonals.len(), self.dim());
        for (row, &i) in bars.iter().enumerate() {
            self.fill_row(&mut m, row, x, self.bars[i]);
        }
        for (k, &d) in diagonals.iter().enumerate() {
            self.fill_row(&mut m, bars.len() + k, x, self.diagonals[d]);
        }
        m
    }

    /// Gradient row of the half squared distance between any two vertices.
    pub(crate) fn distance_gradient(&self, x: &DVector<f64>, a: usize, b: usize) -> DVector<f64> {
        let mut m = DMatrix::zeros(1, self.dim());
        self.fill_row(&mut m, 0, x, (a, b));
        m.row(0).transpose()
    }

    /// Hessian of the half squared distance between vertices `a` and `b`
    /// (constant in `x`).
    pub(crate) fn distance_hessian(&self, a: usize, b: usize) -> DMatrix<f64> {
        let mut h = DMatrix::zeros(self.dim(), self.dim());
        let (sa, sb) = (self.slot_of(a), self.slot_of(b));
        for k in 0..2 {
            if let Some(i) = sa {
                h[(2 * i + k, 2 * i + k)] += 1.0;
            }
            if let Some(j) = sb {
                h[(2 * j + k, 2 * j + k)] += 1.0;
            }
            if let (Some(i), Some(j)) = (sa, sb) {
                h[(2 * i + k, 2 * j + k)] -= 1.0;
                h[(2 * j + k, 2 * i + k)] -= 1.0;
            }
        }
        h
    }

    pub(crate) fn bar_endpoints(&self, i: usize) -> (usize, usize) {
        self.bars[i]
    }

    pub(crate) fn diagonal_endpoints(&self, d: usize) -> (usize, usize) {
        self.diagonals[d]
    }

    /// `max_i |μ_i(x) - ℓ_i²/2|`.
    pub fn residual(&self, x: &DVector<f64>) -> f64 {
        (self.bar_values(x) - &self.targets).amax()
    }

    pub fn is_feasible(&self, x: &DVector<f64>) -> bool {
        x.len() == self.dim() && self.residual(x) <= self.acceptance_tolerance()
    }

    fn realization(&self, x: DVector<f64>, iterations: usize) -> Realization {
        Realization {
            positions: self.positions(&x),
            residual: self.residual(&x),
            coordinates: x,
            iterations,
        }
    }

    /// Gauss–Newton on `μ(x) - ℓ²/2` with minimum-norm least-squares steps
    /// and step halving.
    pub fn solve_realization(&self, initial: &DVector<f64>, max_iter: usize) -> Result<Realization> {
        self.check(initial)?;
        let mut x = initial.clone();
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::NumericalBlowUp);
        }
        let stop = self.tolerances.iteration * self.scale;
        let mut r = self.bar_values(&x) - &self.targets;
        let mut iterations = 0;
        while r.amax() > stop && iterations < max_iter && self.dim() > 0 {
            let j = self.bar_jacobian(&x);
            let step = min_norm_solve(&j, &r, self.tolerances.rank * 1e-2);
            if !step.iter().all(|v| v.is_finite()) {
                return Err(Error::NumericalBlowUp);
            }
            let norm = r.norm();
            let mut alpha = 1.0;
            let mut accepted = None;
            for _ in 0..=self.tolerances.max_halvings {
                let trial = &x - &step * alpha;
                let trial_r = self.bar_values(&trial) - &self.targets;
                if !trial_r.iter().all(|v| v.is_finite()) {
                    return Err(Error::NumericalBlowUp);
                }
                if trial_r.norm() < norm {
                    accepted = Some((trial, trial_r));
                    break;
                }
                alpha *= 0.5;
            }
            iterations += 1;
            match accepted {
                Some((nx, nr)) => {
                    x = nx;
                    r = nr;
                }
                None => break,
            }
        }
        let residual = r.amax();
        if residual <= self.acceptance_tolerance() {
            Ok(self.realization(x, iterations))
        } else {
            Err(Error::NonConvergence {
                iterations,
                residual,
            })
        }
    }

    /// Nearest-point retraction onto the constraint manifold. Gauss–Newton
    /// steps lie in the row space of the Jacobian, so the correction is
    /// normal to the level set to first order.
    pub fn project(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.solve_realization(x, self.tolerances.projection_iterations)
            .map(|r| r.coordinates)
    }

    /// Orthonormal basis (as columns) of the common kernel of the bar rows
    /// and, optionally, the diagonal rows.
    pub fn tangent_basis(&self, x: &DVector<f64>, include_diagonals: bool) -> Result<DMatrix<f64>> {
        self.check(x)?;
        let diagonals: Vec<usize> = if include_diagonals {
            (0..self.diagonals.len()).collect()
        } else {
            Vec::new()
        };
        kernel_basis(&self.stacked_jacobian(x, &diagonals), self.tolerances.rank)
    }

    /// Random initial guesses in a box of side `2 Σℓ` around the base
    /// centroid, each polished by [`Self::solve_realization`].
    pub fn random_feasible(&self, seed: u64, attempts: usize) -> Result<Realization> {
        let mut rng = rng(seed);
        let spec = self.spec();
        let centroid = if spec.base().is_empty() {
            Point::zeros()
        } else {
            spec.base().iter().map(|b| b.position).sum::<Point>() / spec.base().len() as f64
        };
        let half = spec.edges().iter().map(|e| e.length).sum::<f64>().max(1e-3);
        for _ in 0..attempts {
            let x = DVector::from_fn(self.dim(), |i, _| {
                let c = if i % 2 == 0 { centroid.x } else { centroid.y };
                c + rng.random_range(-half..half)
            });
            if let Ok(r) = self.solve_realization(&x, 200) {
                return Ok(r);
            }
        }
        Err(Error::NoRealization { attempts })
    }
}

/// Minimum-norm least-squares solution of `m s = r`.
pub(crate) fn min_norm_solve(m: &DMatrix<f64>, r: &DVector<f64>, relative_cut: f64) -> DVector<f64> {
    if m.ncols() == 0 || m.nrows() == 0 {
        return DVector::zeros(m.ncols());
    }
    let svd = Svd::new(m);
    let cut = svd.largest() * relative_cut;
    let mut s = DVector::zeros(m.ncols());
    for (k, &sigma) in svd.s.iter().enumerate() {
        if sigma > cut {
            let coefficient = svd.u.column(k).dot(r) / sigma;
            s += svd.v.column(k) * coefficient;
        }
    }
    s
}

/// Numerical rank with a relative singular-value cut.
pub fn numerical_rank(m: &DMatrix<f64>, relative: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let svd = Svd::new(m);
    let cut = svd.largest() * relative;
    svd.s.iter().filter(|&&v| v > cut).count()
}

/// Orthonormal kernel basis of `m`; errors if the rows are dependent.
pub(crate) fn kernel_basis(m: &DMatrix<f64>, relative: f64) -> Result<DMatrix<f64>> {
    let n = m.ncols();
    let rows = m.nrows();
    if rows == 0 {
        return Ok(DMatrix::identity(n, n));
    }
    if n == 0 {
        return Err(Error::SingularConfiguration { corank: rows });
    }
    let svd = Svd::new(m);
    let cut = svd.largest() * relative;
    let rank = svd.s.iter().filter(|&&s| s > cut).count();
    if rank < rows {
        return Err(Error::SingularConfiguration {
            corank: rows - rank,
        });
    }
    let null: Vec<usize> = (0..n)
        .filter(|&i| i >= svd.s.len() || svd.s[i] <= cut)
        .collect();
    let mut basis = DMatrix::zeros(n, null.len());
    for (c, &i) in null.iter().enumerate() {
        basis.set_column(c, &svd.v.column(i));
    }
    Ok(basis)
}
