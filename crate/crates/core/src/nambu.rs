//! Canonical contravariant volume contractions.
//!
//! With the coordinate volume `∂x₁ ∧ ∂y₁ ∧ … ∧ ∂yₙ` on the pinned coordinate
//! space, contracting by the differentials of all bar functions and of a
//! chosen set of marked-diagonal functions leaves
//!
//! * a vector field when `2n - 1` differentials are used: component `j` is
//!   `(-1)^j` (zero-based) times the minor of the stacked Jacobian with
//!   column `j` deleted;
//! * a scalar when `2n` differentials are used: the determinant of the
//!   stacked Jacobian.
//!
//! Rows are stacked bars first (in the chosen edge order), then diagonals.
//! Swapping two rows flips the sign of both outputs.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::flows::VectorField;
use crate::geometry::ConstraintSystem;
use crate::model::{LinkageSpec, PinnedSpec, Point};

#[derive(Clone, Debug)]
pub struct NambuField {
    system: ConstraintSystem,
    diagonals: Vec<usize>,
    edge_order: Vec<usize>,
}

impl NambuField {
    /// Uses the marked diagonals with the given indices as first integrals,
    /// in that order.
    pub fn new(system: ConstraintSystem, diagonals: Vec<usize>) -> Self {
        assert!(
            diagonals.iter().all(|&d| d < system.diagonal_count()),
            "diagonal index out of range"
        );
        let edge_order = (0..system.bar_count()).collect();
        Self {
            system,
            diagonals,
            edge_order,
        }
    }

    /// Bars only: the contravariant volume of the configuration space itself.
    pub fn canonical(system: ConstraintSystem) -> Self {
        Self::new(system, Vec::new())
    }

    /// Every marked diagonal, in marked order.
    pub fn with_all_diagonals(system: ConstraintSystem) -> Self {
        let all = (0..system.diagonal_count()).collect();
        Self::new(system, all)
    }

    /// Reorders the bar rows. `order` must be a permutation of the bar
    /// indices.
    pub fn with_edge_order(mut self, order: Vec<usize>) -> Self {
        let mut sorted = order.clone();
        sorted.sort_unstable();
        assert!(
            sorted == (0..self.system.bar_count()).collect::<Vec<_>>(),
            "edge order must be a permutation of the bars"
        );
        self.edge_order = order;
        self
    }

    pub fn system(&self) -> &ConstraintSystem {
        &self.system
    }

    pub(crate) fn system_mut(&mut self) -> &mut ConstraintSystem {
        &mut self.system
    }

    pub fn diagonals(&self) -> &[usize] {
        &self.diagonals
    }

    pub fn row_count(&self) -> usize {
        self.edge_order.len() + self.diagonals.len()
    }

    pub fn stacked_jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        if x.len() != self.system.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.system.dim(),
                got: x.len(),
            });
        }
        Ok(self
            .system
            .ordered_jacobian(x, &self.edge_order, &self.diagonals))
    }

    /// The Nambu vector field; requires `2n - 1` stacked rows. Vanishes
    /// wherever the rows are dependent.
    pub fn evaluate_field(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let n = self.system.dim();
        if self.row_count() + 1 != n {
            return Err(Error::NotNambuConfiguration {
                rows: self.row_count(),
                columns: n,
            });
        }
        let j = self.stacked_jacobian(x)?;
        Ok(DVector::from_fn(n, |col, _| {
            let minor = j.clone().remove_column(col).determinant();
            if col % 2 == 0 {
                minor
            } else {
                -minor
            }
        }))
    }

    /// The full contraction; requires `2n` stacked rows.
    pub fn evaluate_scalar(&self, x: &DVector<f64>) -> Result<f64> {
        let n = self.system.dim();
        if self.row_count() != n {
            return Err(Error::NotRigidConfiguration {
                rows: self.row_count(),
                columns: n,
            });
        }
        Ok(self.stacked_jacobian(x)?.determinant())
    }
}

impl VectorField for NambuField {
    fn dim(&self) -> usize {
        self.system.dim()
    }

    fn evaluate(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.evaluate_field(x)
    }
}

/// Pairs the orbit-space volume of a snake (a chain of `k` bars hanging from
/// a base vertex at the origin) with `dθ₁ ∧ … ∧ dθₖ`, where `θ_i` is the
/// direction angle of bar `i`. The configuration is given by those angles.
/// The pairing is the determinant of the bar gradients stacked over the
/// angle gradients, all in Cartesian coordinates.
pub fn snake_volume_check(lengths: &[f64], angles: &[f64]) -> Result<f64> {
    if lengths.len() != angles.len() {
        return Err(Error::DimensionMismatch {
            expected: lengths.len(),
            got: angles.len(),
        });
    }
    let k = lengths.len();
    let names: Vec<String> = (0..=k).map(|i| format!("A{i}")).collect();
    let mut spec = LinkageSpec::new(&names);
    for (i, &c) in lengths.iter().enumerate() {
        spec.add_edge(&names[i], &names[i + 1], c)?;
    }
    spec.add_base(&names[0], 0.0, 0.0)?;
    let system = ConstraintSystem::new(PinnedSpec::unpinned(&spec));

    let mut positions = vec![Point::zeros()];
    for (&c, &t) in lengths.iter().zip(angles) {
        let last = *positions.last().unwrap();
        positions.push(last + Point::new(c * t.cos(), c * t.sin()));
    }
    let x = system.coordinates_of(&positions);

    let mut m = DMatrix::zeros(2 * k, 2 * k);
    m.rows_mut(0, k).copy_from(&system.bar_jacobian(&x));
    for i in 0..k {
        // θ_i = atan2(u_y, u_x) with u = A_{i+1} - A_i.
        let u = positions[i + 1] - positions[i];
        let g = Point::new(-u.y, u.x) / u.norm_squared();
        m[(k + i, 2 * i)] = g.x;
        m[(k + i, 2 * i + 1)] = g.y;
        if i > 0 {
            m[(k + i, 2 * (i - 1))] = -g.x;
            m[(k + i, 2 * (i - 1) + 1)] = -g.y;
        }
    }
    Ok(m.determinant())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::pin;

    /// A=(0,0), B=(3,0) based, |CA| = 4, |CB| = 5, pendant |CD| = d.
    fn pendant_triangle(c: (f64, f64), d_len: f64) -> (ConstraintSystem, DVector<f64>) {
        let mut s = LinkageSpec::new(["A", "B", "C", "D"]);
        s.add_base("A", 0.0, 0.0).unwrap();
        s.add_base("B", 3.0, 0.0).unwrap();
        let ca = c.0.hypot(c.1);
        let cb = (c.0 - 3.0).hypot(c.1);
        s.add_edge("C", "A", ca).unwrap();
        s.add_edge("C", "B", cb).unwrap();
        s.add_edge("C", "D", d_len).unwrap();
        let sys = ConstraintSystem::for_spec(&s).unwrap();
        let x = DVector::from_vec(vec![c.0, c.1, c.0 + d_len, c.1]);
        (sys, x)
    }

    fn angular_speed(x: &DVector<f64>, v: &DVector<f64>) -> f64 {
        let u = Point::new(x[2] - x[0], x[3] - x[1]);
        let w = Point::new(v[2] - v[0], v[3] - v[1]);
        (u.x * w.y - u.y * w.x) / u.norm_squared()
    }

    #[test]
    fn pendant_rotates_at_twice_the_area() {
        for d in [1.0, 0.5, 2.5] {
            let (sys, x) = pendant_triangle((0.0, 4.0), d);
            let v = NambuField::canonical(sys).evaluate_field(&x).unwrap();
            // C is rigid; only D moves.
            assert!(v[0].abs() < 1e-12 && v[1].abs() < 1e-12);
            assert!((angular_speed(&x, &v).abs() - 12.0).abs() < 1e-9);
        }
    }

    #[test]
    fn collinear_pendant_triangle_has_zero_field() {
        let (sys, x) = pendant_triangle((1.0, 0.0), 1.0);
        let v = NambuField::canonical(sys).evaluate_field(&x).unwrap();
        assert!(v.iter().all(|c| *c == 0.0), "{v}");
    }

    #[test]
    fn rigid_triangle_scalar_is_twice_the_area() {
        let mut s = LinkageSpec::new(["A", "B", "C"]);
        s.add_base("A", 0.0, 0.0).unwrap();
        s.add_base("B", 3.0, 0.0).unwrap();
        s.add_edge("C", "A", 4.0).unwrap();
        s.add_edge("C", "B", 5.0).unwrap();
        let field = NambuField::canonical(ConstraintSystem::for_spec(&s).unwrap());
        let up = field.evaluate_scalar(&DVector::from_vec(vec![0.0, 4.0])).unwrap();
        let down = field.evaluate_scalar(&DVector::from_vec(vec![0.0, -4.0])).unwrap();
        assert!((up.abs() - 12.0).abs() < 1e-12);
        assert!((up + down).abs() < 1e-12);

        let scaled = NambuField::canonical(ConstraintSystem::for_spec(&s.scale(2.0)).unwrap());
        let v = scaled.evaluate_scalar(&DVector::from_vec(vec![0.0, 8.0])).unwrap();
        assert!((v - 4.0 * up).abs() < 1e-9);

        let mut flat = LinkageSpec::new(["A", "B", "C"]);
        flat.add_base("A", 0.0, 0.0).unwrap();
        flat.add_base("B", 3.0, 0.0).unwrap();
        flat.add_edge("C", "A", 1.0).unwrap();
        flat.add_edge("C", "B", 2.0).unwrap();
        let field = NambuField::canonical(ConstraintSystem::for_spec(&flat).unwrap());
        assert_eq!(field.evaluate_scalar(&DVector::from_vec(vec![1.0, 0.0])).unwrap(), 0.0);
    }

    #[test]
    fn wrong_row_counts_rejected() {
        let (sys, x) = pendant_triangle((0.0, 4.0), 1.0);
        let field = NambuField::canonical(sys);
        assert!(matches!(
            field.evaluate_scalar(&x),
            Err(Error::NotRigidConfiguration { rows: 3, columns: 4 })
        ));
        let q = LinkageSpec::polygon(&["A", "B", "C", "D", "E"], &[1.0; 5]).unwrap();
        let five = NambuField::canonical(ConstraintSystem::for_spec(&q).unwrap());
        assert!(matches!(
            five.evaluate_field(&DVector::zeros(6)),
            Err(Error::NotNambuConfiguration { rows: 4, columns: 6 })
        ));
    }

    #[test]
    fn transposing_bars_negates() {
        let q = LinkageSpec::polygon(&["A", "B", "C", "D"], &[1.0, 2.0, 2.0, 2.0]).unwrap();
        let sys = ConstraintSystem::new(pin(&q, None).unwrap());
        let x = sys.random_feasible(4, 20).unwrap().coordinates;
        let a = NambuField::canonical(sys.clone()).evaluate_field(&x).unwrap();
        let b = NambuField::canonical(sys)
            .with_edge_order(vec![1, 0, 2])
            .evaluate_field(&x)
            .unwrap();
        assert!((a + b).norm() < 1e-12);
    }

    #[test]
    fn snake_volume_is_unit() {
        for (lengths, angles) in [
            (vec![1.0], vec![0.3]),
            (vec![1.0, 2.5, 0.3], vec![0.1, 2.0, -1.3]),
            (vec![1.0, 1.0], vec![0.7, 0.2]),
            (vec![1.0, 1.0], vec![-2.1, 1.9]),
        ] {
            let v = snake_volume_check(&lengths, &angles).unwrap();
            assert!((v.abs() - 1.0).abs() < 1e-12, "{v}");
        }
    }
}
