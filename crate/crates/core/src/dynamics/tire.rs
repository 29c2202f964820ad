//! Tire-road contact: magic-formula forces, wheel slips and vertical loads.

use super::params::{PacejkaAxis, VehicleParams};
use super::state::ChassisState;
use crate::error::DynamicsError;

/// Simplified Pacejka magic formula, pure slip:
/// `F_z * D * sin(C * atan(B s - E (B s - atan(B s))))`.
pub fn pacejka_force(slip: f64, fz: f64, coeffs: &PacejkaAxis) -> Result<f64, DynamicsError> {
    if !slip.is_finite() {
        return Err(DynamicsError::Domain(format!("non-finite slip {slip}")));
    }
    if !(fz >= 0.0) || !fz.is_finite() {
        return Err(DynamicsError::Domain(format!("vertical load must be >= 0, got {fz}")));
    }
    Ok(magic_formula(slip, fz, coeffs))
}

/// Unchecked evaluation used in the inner integration loop.
#[inline]
pub(crate) fn magic_formula(slip: f64, fz: f64, c: &PacejkaAxis) -> f64 {
    let bs = c.b * slip;
    fz * c.d * (c.c * (bs - c.e * (bs - bs.atan())).atan()).sin()
}

/// Longitudinal (`lambda`) and lateral (`alpha`) slip of every corner.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CornerSlips {
    pub lambda: [f64; 4],
    pub alpha: [f64; 4],
}

/// Wheel-centre velocity in each wheel frame, `(v_x, v_y)` per corner.
///
/// Rigid-body transport of the CG velocity to the corner positions
/// `(l_f, +t/2), (l_f, -t/2), (-l_r, +t/2), (-l_r, -t/2)`, then a rotation
/// by `-delta` on the steered front corners.
pub fn wheel_frame_velocities(
    state: &ChassisState,
    steer: f64,
    params: &VehicleParams,
) -> [(f64, f64); 4] {
    let half_t = 0.5 * params.track;
    let (sd, cd) = steer.sin_cos();
    let mut out = [(0.0, 0.0); 4];
    for (i, v) in out.iter_mut().enumerate() {
        let lever = if i < 2 { params.l_f } else { -params.l_r };
        let side = if i % 2 == 0 { half_t } else { -half_t };
        let bx = state.v_x - state.yaw_rate * side;
        let by = state.v_y + state.yaw_rate * lever;
        *v = if i < 2 {
            (bx * cd + by * sd, -bx * sd + by * cd)
        } else {
            (bx, by)
        };
    }
    out
}

/// Per-corner slips with the `eps_v` floor in the denominators.
///
/// Below `2 eps_v` of wheel/ground speed the longitudinal slip is blended
/// linearly to zero so that standstill stays well defined.
pub fn compute_slips(
    state: &ChassisState,
    steer: f64,
    params: &VehicleParams,
    eps_v: f64,
) -> Result<CornerSlips, DynamicsError> {
    if !state.is_finite() || !steer.is_finite() {
        return Err(DynamicsError::Domain("non-finite state or steer".into()));
    }
    Ok(slips_unchecked(state, steer, params, eps_v))
}

pub(crate) fn slips_unchecked(
    state: &ChassisState,
    steer: f64,
    params: &VehicleParams,
    eps_v: f64,
) -> CornerSlips {
    let vel = wheel_frame_velocities(state, steer, params);
    let mut slips = CornerSlips::default();
    for i in 0..4 {
        let (vx, vy) = vel[i];
        let rw = params.wheel_radius[i] * state.omega[i];
        let reference = rw.max(vx);
        let mut lambda = (rw - vx) / reference.max(eps_v);
        if reference < 2.0 * eps_v {
            lambda *= reference.max(0.0) / (2.0 * eps_v);
        }
        slips.lambda[i] = lambda;
        slips.alpha[i] = (vy / vx.max(eps_v)).atan();
    }
    slips
}

/// Vertical loads per corner with a count of corners clamped at zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerticalLoads {
    pub fz: [f64; 4],
    pub clamped: u8,
}

/// Static split plus longitudinal and per-axle lateral load transfer.
///
/// Positive `a_x` loads the rear axle, positive `a_y` (to the left) loads
/// the right-hand corners.
pub fn vertical_loads(params: &VehicleParams, a_x: f64, a_y: f64) -> VerticalLoads {
    let l = params.wheelbase();
    let m = params.mass;
    let h = params.cg_height;
    let front_static = m * params.gravity * params.l_r / (2.0 * l);
    let rear_static = m * params.gravity * params.l_f / (2.0 * l);
    let pitch = m * a_x * h / (2.0 * l);
    let roll_front = m * params.l_r / l * a_y * h / params.track;
    let roll_rear = m * params.l_f / l * a_y * h / params.track;
    let raw = [
        front_static - pitch - roll_front,
        front_static - pitch + roll_front,
        rear_static + pitch - roll_rear,
        rear_static + pitch + roll_rear,
    ];
    let mut clamped = 0;
    let fz = raw.map(|f| {
        if f < 0.0 {
            clamped += 1;
            0.0
        } else {
            f
        }
    });
    if clamped > 0 {
        log::debug!("vertical load clamped at {clamped} corner(s) (a_x={a_x}, a_y={a_y})");
    }
    VerticalLoads { fz, clamped }
}
