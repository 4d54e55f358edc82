//! Embedded Dormand–Prince 5(4) integration of the gradient flow.

use crate::error::{Error, Result};
use crate::geometry::vec3::{self, P3};
use crate::geometry::MorseModel;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Uphill,
    Downhill,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Uphill => 1.0,
            Direction::Downhill => -1.0,
        }
    }

    pub fn reverse(self) -> Direction {
        match self {
            Direction::Uphill => Direction::Downhill,
            Direction::Downhill => Direction::Uphill,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    /// Local error tolerance (absolute and relative).
    pub tol: f64,
    pub max_step: f64,
    /// Caps the distance travelled per accepted step (polyline resolution).
    pub max_spatial_step: f64,
    pub min_step: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { tol: 1e-10, max_step: 0.5, max_spatial_step: f64::INFINITY, min_step: 1e-14 }
    }
}

/// Integrator state; on the torus the position is kept unwrapped.
#[derive(Clone, Copy, Debug)]
pub struct FlowState {
    pub p: P3,
    pub t: f64,
    pub h: f64,
}

impl FlowState {
    pub fn new(p: P3) -> FlowState {
        FlowState { p, t: 0.0, h: 1e-2 }
    }
}

// Dormand–Prince tableau
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[inline]
fn field(model: &MorseModel, dir: Direction, p: P3) -> P3 {
    vec3::scale(model.gradient(p), dir.sign())
}

#[inline]
fn lin(p: P3, terms: &[(f64, P3)], h: f64) -> P3 {
    let mut out = p;
    for &(c, k) in terms {
        out = vec3::axpy(out, h * c, k);
    }
    out
}

/// Integrates until `state.t == t_end`, calling `on_step` with each
/// accepted position and its velocity. Returns early with `true` as soon as
/// `on_step` asks to stop.
pub fn advance<F: FnMut(P3, P3) -> bool>(
    model: &MorseModel,
    dir: Direction,
    state: &mut FlowState,
    t_end: f64,
    opts: &OdeOptions,
    mut on_step: F,
) -> Result<bool> {
    let sphere = model.is_sphere();
    let mut k1 = field(model, dir, state.p);
    while state.t < t_end {
        let mut h = state.h.min(opts.max_step).min(t_end - state.t);
        let speed = vec3::norm(k1);
        if opts.max_spatial_step.is_finite() && speed > 0.0 {
            h = h.min(opts.max_spatial_step / speed);
        }
        if h < opts.min_step && state.t + h < t_end {
            return Err(Error::Integration(format!("step size underflow at t = {}", state.t)));
        }
        let p = state.p;
        let k2 = field(model, dir, lin(p, &[(A21, k1)], h));
        let k3 = field(model, dir, lin(p, &[(A31, k1), (A32, k2)], h));
        let k4 = field(model, dir, lin(p, &[(A41, k1), (A42, k2), (A43, k3)], h));
        let k5 = field(model, dir, lin(p, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)], h));
        let k6 = field(model, dir, lin(p, &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)], h));
        let y = lin(p, &[(B1, k1), (B3, k3), (B4, k4), (B5, k5), (B6, k6)], h);
        let k7 = field(model, dir, y);
        let err = lin([0.0; 3], &[(E1, k1), (E3, k3), (E4, k4), (E5, k5), (E6, k6), (E7, k7)], h);
        let mut en: f64 = 0.0;
        for i in 0..3 {
            let sc = opts.tol + opts.tol * p[i].abs().max(y[i].abs());
            en = en.max(err[i].abs() / sc);
        }
        if en <= 1.0 || h <= opts.min_step {
            state.t = if t_end - state.t - h < 1e-15 * t_end.abs().max(1.0) { t_end } else { state.t + h };
            if sphere {
                state.p = vec3::normalize(y);
                k1 = field(model, dir, state.p);
            } else {
                state.p = y;
                k1 = k7;
            }
            let stop = on_step(state.p, k1);
            let fac = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
            state.h = (h * fac).max(opts.min_step);
            if stop {
                return Ok(true);
            }
        } else {
            state.h = h * (0.9 * en.powf(-0.2)).clamp(0.1, 1.0);
        }
    }
    Ok(false)
}

/// Position after flowing for time t from x0.
pub fn flow_map(model: &MorseModel, x0: P3, t: f64, dir: Direction, opts: &OdeOptions) -> Result<P3> {
    if t < 0.0 {
        return Err(Error::Domain("negative flow time".into()));
    }
    let x0 = model.canonical_point(x0)?;
    let mut st = FlowState::new(x0);
    advance(model, dir, &mut st, t, opts, |_, _| false)?;
    model.canonical_point(st.p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::field::FieldExpr;

    #[test]
    fn equator_point_flows_to_south_pole() {
        let m = MorseModel::sphere(FieldExpr::sphere_linear([0.0, 0.0, 1.0]));
        let p = flow_map(&m, [1.0, 0.0, 0.0], 5.0, Direction::Downhill, &OdeOptions::default()).unwrap();
        // angle from the south pole obeys θ' = -sin θ, so tan(θ/2) = e^{-t}
        let theta = 2.0 * (-5.0f64).exp().atan();
        assert!((p[2] + theta.cos()).abs() < 1e-9, "{p:?}");
        assert!(p[1].abs() < 1e-15);
        assert!((p[2] + 1.0).abs() < 1e-3);
    }

    #[test]
    fn equilibrium_stays_put() {
        let m = MorseModel::torus(FieldExpr::torus_cosine(1.0, [0.0, 0.0]));
        let p = flow_map(&m, [0.5, 0.5, 0.0], 10.0, Direction::Downhill, &OdeOptions::default()).unwrap();
        assert!(m.distance(p, [0.5, 0.5, 0.0]) < 1e-15);
    }

    #[test]
    fn torus_separable_flow_matches_closed_form() {
        // x' = sin(2πx)/2π downhill gives tan(πx) ∝ e^t
        let m = MorseModel::torus(FieldExpr::torus_cosine(1.0, [0.0, 0.0]));
        let x0 = 0.1;
        let t = 3.0;
        let p = flow_map(&m, [x0, 0.5, 0.0], t, Direction::Downhill, &OdeOptions::default()).unwrap();
        let exact = ((std::f64::consts::PI * x0).tan() * t.exp()).atan() / std::f64::consts::PI;
        assert!((p[0] - exact).abs() < 1e-9, "{} vs {}", p[0], exact);
    }
}
