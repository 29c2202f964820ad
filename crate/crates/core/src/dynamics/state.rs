/// Benchmark state: `v_x, v_y, yaw_rate, omega_fl, omega_fr, omega_rl, omega_rr`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ChassisState {
    pub v_x: f64,
    pub v_y: f64,
    pub yaw_rate: f64,
    pub omega: [f64; 4],
}

pub const CORNERS: [&str; 4] = ["fl", "fr", "rl", "rr"];

pub const STATE_LABELS: [&str; 7] = [
    "v_x", "v_y", "yaw_rate", "omega_fl", "omega_fr", "omega_rl", "omega_rr",
];

pub const OUTPUT_LABELS: [&str; 7] = [
    "a_x", "a_y", "yaw_rate", "omega_fl", "omega_fr", "omega_rl", "omega_rr",
];

/// Tire-force channels, longitudinal first: `f_x_fl .. f_x_rr, f_y_fl .. f_y_rr`.
pub const FORCE_LABELS: [&str; 8] = [
    "f_x_fl", "f_x_fr", "f_x_rl", "f_x_rr", "f_y_fl", "f_y_fr", "f_y_rl", "f_y_rr",
];

pub const INPUT_LABELS: [&str; 7] = [
    "steer",
    "brake_fl",
    "brake_fr",
    "brake_rl",
    "brake_rr",
    "engine_torque",
    "gear",
];

impl ChassisState {
    pub fn to_array(&self) -> [f64; 7] {
        [
            self.v_x,
            self.v_y,
            self.yaw_rate,
            self.omega[0],
            self.omega[1],
            self.omega[2],
            self.omega[3],
        ]
    }

    pub fn from_slice(s: &[f64]) -> Self {
        ChassisState {
            v_x: s[0],
            v_y: s[1],
            yaw_rate: s[2],
            omega: [s[3], s[4], s[5], s[6]],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    pub(crate) fn first_non_finite(&self) -> Option<&'static str> {
        self.to_array()
            .iter()
            .position(|v| !v.is_finite())
            .map(|i| STATE_LABELS[i])
    }
}

/// Driver commands held constant over one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriverInputs {
    /// Front steer angle (rad), equal on both corners.
    pub steer: f64,
    /// Brake pressure per corner (bar).
    pub brake: [f64; 4],
    /// Engine torque (N m).
    pub engine_torque: f64,
    /// Engaged gear, 1-based.
    pub gear: i64,
}

impl Default for DriverInputs {
    fn default() -> Self {
        DriverInputs {
            steer: 0.0,
            brake: [0.0; 4],
            engine_torque: 0.0,
            gear: 1,
        }
    }
}

impl DriverInputs {
    pub fn to_array(&self) -> [f64; 7] {
        [
            self.steer,
            self.brake[0],
            self.brake[1],
            self.brake[2],
            self.brake[3],
            self.engine_torque,
            self.gear as f64,
        ]
    }

    /// Inverse of [`DriverInputs::to_array`]; the gear channel is rounded.
    pub fn from_slice(u: &[f64]) -> Self {
        DriverInputs {
            steer: u[0],
            brake: [u[1], u[2], u[3], u[4]],
            engine_torque: u[5],
            gear: u[6].round() as i64,
        }
    }
}

/// Tire forces acting on the chassis, in each wheel frame (N).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CornerForces {
    pub fx: [f64; 4],
    pub fy: [f64; 4],
    pub fz: [f64; 4],
}

impl CornerForces {
    /// `fx` then `fy`, matching [`FORCE_LABELS`].
    pub fn planar(&self) -> [f64; 8] {
        let mut out = [0.0; 8];
        out[..4].copy_from_slice(&self.fx);
        out[4..].copy_from_slice(&self.fy);
        out
    }
}

/// Additive offsets on the tire-convention forces, in [`FORCE_LABELS`] order.
pub type ForceOffsets = [f64; 8];

/// Sensor-side view of the vehicle: `a_x, a_y, yaw_rate, omega x4`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MeasuredOutputs {
    pub a_x: f64,
    pub a_y: f64,
    pub yaw_rate: f64,
    pub omega: [f64; 4],
}

impl MeasuredOutputs {
    pub fn to_array(&self) -> [f64; 7] {
        [
            self.a_x,
            self.a_y,
            self.yaw_rate,
            self.omega[0],
            self.omega[1],
            self.omega[2],
            self.omega[3],
        ]
    }
}
