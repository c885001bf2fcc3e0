//! Fixed-step RK4 integration on the constraint manifold, with a projection
//! after every step, and the commutation / conservation diagnostics built
//! on it.

use std::io::{self, Write};
use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::geometry::ConstraintSystem;

/// Below this norm the field is treated as an equilibrium.
pub const EQUILIBRIUM_NORM: f64 = 1e-12;

/// A vector field on the pinned coordinate space of some constraint system.
pub trait VectorField: Send + Sync {
    fn dim(&self) -> usize;
    fn evaluate(&self, x: &DVector<f64>) -> Result<DVector<f64>>;
}

impl<F: VectorField + ?Sized> VectorField for &F {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn evaluate(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        (**self).evaluate(x)
    }
}

impl<F: VectorField + ?Sized> VectorField for Box<F> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn evaluate(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        (**self).evaluate(x)
    }
}

impl<F: VectorField + ?Sized> VectorField for Arc<F> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn evaluate(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        (**self).evaluate(x)
    }
}

/// Wraps a closure as a [`VectorField`].
pub struct FnField<F> {
    dim: usize,
    f: F,
}

impl<F> FnField<F>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>> + Send + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> VectorField for FnField<F>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>> + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn evaluate(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        (self.f)(x)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowState {
    pub time: f64,
    pub point: DVector<f64>,
    pub residual: f64,
    /// Marked-diagonal values `ν_d`, in marked order.
    pub integrals: DVector<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub states: Vec<FlowState>,
    /// Integration stopped early at an equilibrium of the field.
    pub halted: bool,
}

impl Trajectory {
    pub fn last(&self) -> &FlowState {
        self.states.last().expect("trajectories hold at least the start")
    }

    /// CSV with header `time,residual,F_1..F_k,x_1,y_1,...` and 17
    /// significant digits per value.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let Some(first) = self.states.first() else {
            return Ok(());
        };
        let mut header = vec!["time".to_owned(), "residual".to_owned()];
        header.extend((1..=first.integrals.len()).map(|k| format!("F_{k}")));
        for i in 1..=first.point.len() / 2 {
            header.push(format!("x_{i}"));
            header.push(format!("y_{i}"));
        }
        writeln!(out, "{}", header.join(","))?;
        for s in &self.states {
            let row: Vec<String> = [s.time, s.residual]
                .into_iter()
                .chain(s.integrals.iter().copied())
                .chain(s.point.iter().copied())
                .map(|v| format!("{v:.16e}"))
                .collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

fn check_dim(field: &dyn VectorField, system: &ConstraintSystem, x: &DVector<f64>) -> Result<()> {
    if field.dim() != system.dim() || x.len() != system.dim() {
        return Err(Error::DimensionMismatch {
            expected: system.dim(),
            got: if field.dim() != system.dim() {
                field.dim()
            } else {
                x.len()
            },
        });
    }
    Ok(())
}

fn state(system: &ConstraintSystem, time: f64, point: DVector<f64>) -> FlowState {
    FlowState {
        time,
        residual: system.residual(&point),
        integrals: system.diagonal_values(&point),
        point,
    }
}

/// One classical RK4 step of size `h` followed by projection.
pub fn rk4_step(
    field: &dyn VectorField,
    system: &ConstraintSystem,
    x: &DVector<f64>,
    h: f64,
) -> Result<DVector<f64>> {
    let k1 = field.evaluate(x)?;
    let k2 = field.evaluate(&(x + &k1 * (h / 2.0)))?;
    let k3 = field.evaluate(&(x + &k2 * (h / 2.0)))?;
    let k4 = field.evaluate(&(x + &k3 * h))?;
    let next = x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    if !next.iter().all(|v| v.is_finite()) {
        return Err(Error::NumericalBlowUp);
    }
    system.project(&next)
}

fn step_count(t: f64, dt: f64) -> usize {
    assert!(dt > 0.0, "time step must be positive");
    (t.abs() / dt - 1e-9).ceil().max(0.0) as usize
}

/// Integrates `field` from `x0` for time `t` (negative runs backwards) with
/// steps of at most `dt`, projecting after each step. Stops early, with
/// `halted` set, when the field vanishes.
pub fn integrate(
    field: &dyn VectorField,
    system: &ConstraintSystem,
    x0: &DVector<f64>,
    t: f64,
    dt: f64,
) -> Result<Trajectory> {
    check_dim(field, system, x0)?;
    let steps = step_count(t, dt);
    let h = if steps == 0 { 0.0 } else { t / steps as f64 };
    let mut states = Vec::with_capacity(steps + 1);
    states.push(state(system, 0.0, x0.clone()));
    let mut x = x0.clone();
    for k in 1..=steps {
        if field.evaluate(&x)?.norm() < EQUILIBRIUM_NORM {
            return Ok(Trajectory {
                states,
                halted: true,
            });
        }
        x = rk4_step(field, system, &x, h)?;
        states.push(state(system, h * k as f64, x.clone()));
    }
    Ok(Trajectory {
        states,
        halted: false,
    })
}

/// End point of the flow of `field` for time `t`.
pub fn flow(
    field: &dyn VectorField,
    system: &ConstraintSystem,
    x0: &DVector<f64>,
    t: f64,
    dt: f64,
) -> Result<DVector<f64>> {
    Ok(integrate(field, system, x0, t, dt)?.last().point.clone())
}

/// `‖Φ_A^s Φ_B^t x0 − Φ_B^t Φ_A^s x0‖`.
pub fn commutation_defect(
    a: &dyn VectorField,
    b: &dyn VectorField,
    system: &ConstraintSystem,
    x0: &DVector<f64>,
    s: f64,
    t: f64,
    dt: f64,
) -> Result<f64> {
    let ab = flow(a, system, &flow(b, system, x0, t, dt)?, s, dt)?;
    let ba = flow(b, system, &flow(a, system, x0, s, dt)?, t, dt)?;
    Ok((ab - ba).norm())
}

/// Central-difference estimate of `[A, B](x) = DB·A − DA·B`, moving along
/// each field by one projected RK4 step of size `±h` so the difference
/// quotients stay on the manifold.
pub fn lie_bracket_fd(
    a: &dyn VectorField,
    b: &dyn VectorField,
    system: &ConstraintSystem,
    x: &DVector<f64>,
    h: f64,
) -> Result<DVector<f64>> {
    check_dim(a, system, x)?;
    check_dim(b, system, x)?;
    let along_a = |sign: f64| rk4_step(a, system, x, sign * h);
    let along_b = |sign: f64| rk4_step(b, system, x, sign * h);
    let db_a = (b.evaluate(&along_a(1.0)?)? - b.evaluate(&along_a(-1.0)?)?) / (2.0 * h);
    let da_b = (a.evaluate(&along_b(1.0)?)? - a.evaluate(&along_b(-1.0)?)?) / (2.0 * h);
    Ok(db_a - da_b)
}

/// Largest deviation of any marked-diagonal value from its initial value
/// along the flow.
pub fn integral_drift(
    field: &dyn VectorField,
    system: &ConstraintSystem,
    x0: &DVector<f64>,
    t: f64,
    dt: f64,
) -> Result<f64> {
    let trajectory = integrate(field, system, x0, t, dt)?;
    let start = &trajectory.states[0].integrals;
    Ok(trajectory
        .states
        .iter()
        .map(|s| (&s.integrals - start).amax())
        .fold(0.0, f64::max))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClosedOrbit {
    pub period: f64,
    /// Distance between the start and the closest return.
    pub gap: f64,
}

/// Integrates forward until the trajectory comes back to `x0`, then locates
/// the closest return to sub-step precision.
pub fn find_return(
    field: &dyn VectorField,
    system: &ConstraintSystem,
    x0: &DVector<f64>,
    dt: f64,
    t_max: f64,
) -> Result<ClosedOrbit> {
    check_dim(field, system, x0)?;
    let speed = field.evaluate(x0)?.norm();
    if speed < EQUILIBRIUM_NORM {
        return Ok(ClosedOrbit {
            period: 0.0,
            gap: 0.0,
        });
    }
    // Leave a neighbourhood of x0 before looking for a minimum.
    let radius = 50.0 * dt * speed;
    let mut left = false;
    let mut window = [x0.clone(), x0.clone(), x0.clone()];
    let mut dist = [0.0_f64; 3];
    let mut time = 0.0;
    while time < t_max {
        let next = rk4_step(field, system, &window[2], dt)?;
        time += dt;
        window.rotate_left(1);
        dist.rotate_left(1);
        dist[2] = (&next - x0).norm();
        window[2] = next;
        if dist[2] > radius {
            left = true;
        }
        if left && dist[1] < radius && dist[1] <= dist[0] && dist[1] <= dist[2] {
            let from = window[0].clone();
            let gap_at = |tau: f64| -> Result<f64> {
                Ok((rk4_step(field, system, &from, tau)? - x0).norm())
            };
            let (tau, gap) = golden_section(gap_at, 0.0, 2.0 * dt, 1e-14)?;
            return Ok(ClosedOrbit {
                period: time - 2.0 * dt + tau,
                gap,
            });
        }
    }
    Err(Error::NoReturn { t_max })
}

fn golden_section(
    f: impl Fn(f64) -> Result<f64>,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - ratio * (hi - lo);
    let mut d = lo + ratio * (hi - lo);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while hi - lo > tol {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - ratio * (hi - lo);
            fc = f(c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + ratio * (hi - lo);
            fd = f(d)?;
        }
    }
    let mid = (lo + hi) / 2.0;
    Ok((mid, f(mid)?))
}
