//! Double-track chassis, wheel dynamics and the forward-Euler steppers of the
//! benchmark and plant models.
//!
//! Both models share one force evaluation. The plant adds tire relaxation,
//! a friction ellipse and filtered load transfer; with those switched off it
//! runs exactly the benchmark arithmetic.
//!
//! Sign convention: tire-convention forces (`model_forces`, force offsets and
//! the `f_*` dataset channels) carry the magic-formula sign, so lateral force
//! is positive for a positive slip angle. The chassis receives `(F_x, -F_y)`.
//! Force offsets are external forces on the chassis; wheel spin sees only the
//! tire-model `F_x`.
//!
//! Timing convention: a step from `x(k)` under inputs `u(k)` returns `x(k+1)`
//! together with the outputs and tire forces evaluated at `x(k+1)` with the
//! same (held) inputs. Reported accelerations are `F^T / M` of those forces.

use super::params::{Integration, PlantEffects, TireCoeffs, VehicleParams};
use super::state::{ChassisState, CornerForces, DriverInputs, ForceOffsets, MeasuredOutputs};
use super::tire::{magic_formula, slips_unchecked, vertical_loads, wheel_frame_velocities, CornerSlips};
use crate::error::DynamicsError;

/// Resultant planar force and yaw moment of the four tire forces.
pub fn chassis_totals(forces: &CornerForces, steer: f64, params: &VehicleParams) -> (f64, f64, f64) {
    let fx = &forces.fx;
    let fy = &forces.fy;
    let (sd, cd) = steer.sin_cos();
    let half_t = 0.5 * params.track;
    let fx_front = fx[0] + fx[1];
    let fy_front = fy[0] + fy[1];
    let total_x = fx_front * cd - fy_front * sd + fx[2] + fx[3];
    let total_y = fx_front * sd + fy_front * cd + fy[2] + fy[3];
    let yaw_moment = params.l_f * fy_front * cd + half_t * (fy[0] - fy[1]) * sd
        - half_t * (fx[0] - fx[1]) * cd
        + params.l_f * fx_front * sd
        - params.l_r * (fy[2] + fy[3])
        - half_t * (fx[2] - fx[3]);
    (total_x, total_y, yaw_moment)
}

/// Planar rigid-body derivatives `(dv_x, dv_y, dyaw_rate)`.
pub fn chassis_derivatives(
    state: &ChassisState,
    forces: &CornerForces,
    steer: f64,
    params: &VehicleParams,
) -> (f64, f64, f64) {
    let (total_x, total_y, yaw_moment) = chassis_totals(forces, steer, params);
    (
        total_x / params.mass + state.v_y * state.yaw_rate,
        total_y / params.mass - state.v_x * state.yaw_rate,
        yaw_moment / params.yaw_inertia,
    )
}

/// Brake and traction torque per corner (N m).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WheelTorques {
    pub brake: [f64; 4],
    pub traction: [f64; 4],
}

/// Brake torque `k_b p_b` everywhere; engine torque split evenly on the rear axle.
pub fn wheel_torques(inputs: &DriverInputs, params: &VehicleParams) -> Result<WheelTorques, DynamicsError> {
    let ratio = params.gear_ratio(inputs.gear)?;
    let rear = 0.5 * inputs.engine_torque * ratio;
    Ok(WheelTorques {
        brake: inputs.brake.map(|p| params.brake_gain * p),
        traction: [0.0, 0.0, rear, rear],
    })
}

/// Internal memory of the plant: relaxed slips and filtered accelerations.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlantMemory {
    pub slips: CornerSlips,
    pub accel: (f64, f64),
}

/// Full plant state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlantState {
    pub chassis: ChassisState,
    pub memory: PlantMemory,
}

pub const PLANT_EXTRA_LABELS: [&str; 10] = [
    "relaxed_slip_x_fl",
    "relaxed_slip_x_fr",
    "relaxed_slip_x_rl",
    "relaxed_slip_x_rr",
    "relaxed_slip_y_fl",
    "relaxed_slip_y_fr",
    "relaxed_slip_y_rl",
    "relaxed_slip_y_rr",
    "filtered_a_x",
    "filtered_a_y",
];

impl PlantState {
    pub fn from_chassis(chassis: ChassisState) -> Self {
        PlantState {
            chassis,
            memory: PlantMemory::default(),
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.chassis.to_array().to_vec();
        v.extend_from_slice(&self.memory.slips.lambda);
        v.extend_from_slice(&self.memory.slips.alpha);
        v.push(self.memory.accel.0);
        v.push(self.memory.accel.1);
        v
    }

    pub fn from_slice(s: &[f64]) -> Self {
        let mut slips = CornerSlips::default();
        slips.lambda.copy_from_slice(&s[7..11]);
        slips.alpha.copy_from_slice(&s[11..15]);
        PlantState {
            chassis: ChassisState::from_slice(&s[..7]),
            memory: PlantMemory {
                slips,
                accel: (s[15], s[16]),
            },
        }
    }
}

/// Forces at one instant together with everything derived from them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceEval {
    /// Forces acting on the chassis (tire model plus offsets).
    pub forces: CornerForces,
    /// Tire-model forces without offsets, `fx` then `fy`, in tire convention.
    pub model_forces: [f64; 8],
    pub accel: (f64, f64),
    pub clamped: u8,
    /// Memory the plant carries into the next sample.
    pub next_memory: PlantMemory,
}

fn tire_forces(
    slips: &CornerSlips,
    fz: [f64; 4],
    tires: &TireCoeffs,
    ellipse: bool,
    offsets: &ForceOffsets,
) -> (CornerForces, [f64; 8]) {
    let mut forces = CornerForces {
        fz,
        ..Default::default()
    };
    let mut model = [0.0; 8];
    for i in 0..4 {
        let fx = magic_formula(slips.lambda[i], fz[i], &tires.longitudinal);
        let mut fy = magic_formula(slips.alpha[i], fz[i], &tires.lateral);
        if ellipse {
            let cap = tires.longitudinal.d * fz[i];
            let budget = if cap > 0.0 { 1.0 - (fx / cap).powi(2) } else { 0.0 };
            fy *= budget.max(0.0).sqrt();
        }
        model[i] = fx;
        model[i + 4] = fy;
        forces.fx[i] = fx + offsets[i];
        // The tire pushes back against the wheel's lateral sliding velocity.
        forces.fy[i] = -(fy + offsets[i + 4]);
    }
    (forces, model)
}

/// Force evaluation shared by both models. `effects == NONE` is the benchmark.
pub fn evaluate_forces(
    state: &PlantState,
    steer: f64,
    params: &VehicleParams,
    tires: &TireCoeffs,
    effects: &PlantEffects,
    offsets: &ForceOffsets,
    dt: f64,
) -> ForceEval {
    let chassis = &state.chassis;
    let mut slips = slips_unchecked(chassis, steer, params, tires.eps_v);
    if effects.relaxation_length > 0.0 {
        let vel = wheel_frame_velocities(chassis, steer, params);
        for i in 0..4 {
            let speed = vel[i].0.abs().max(tires.eps_v);
            let decay = (-speed * dt / effects.relaxation_length).exp();
            let mem = &state.memory.slips;
            slips.lambda[i] += (mem.lambda[i] - slips.lambda[i]) * decay;
            slips.alpha[i] += (mem.alpha[i] - slips.alpha[i]) * decay;
        }
    }

    let mass = params.mass;
    let (forces, model_forces, clamped) = if effects.load_filter_hz > 0.0 {
        let (ax, ay) = state.memory.accel;
        let loads = vertical_loads(params, ax, ay);
        let (f, m) = tire_forces(&slips, loads.fz, tires, effects.friction_ellipse, offsets);
        (f, m, loads.clamped)
    } else {
        // Two-pass fixed point on the load-transfer accelerations.
        let loads = vertical_loads(params, 0.0, 0.0);
        let (f0, _) = tire_forces(&slips, loads.fz, tires, effects.friction_ellipse, offsets);
        let (tx, ty, _) = chassis_totals(&f0, steer, params);
        let loads = vertical_loads(params, tx / mass, ty / mass);
        let (f, m) = tire_forces(&slips, loads.fz, tires, effects.friction_ellipse, offsets);
        (f, m, loads.clamped)
    };
    let (tx, ty, _) = chassis_totals(&forces, steer, params);
    let accel = (tx / mass, ty / mass);

    let next_accel = if effects.load_filter_hz > 0.0 {
        let decay = (-2.0 * std::f64::consts::PI * effects.load_filter_hz * dt).exp();
        let (mx, my) = state.memory.accel;
        (accel.0 + (mx - accel.0) * decay, accel.1 + (my - accel.1) * decay)
    } else {
        accel
    };
    ForceEval {
        forces,
        model_forces,
        accel,
        clamped,
        next_memory: PlantMemory {
            slips,
            accel: next_accel,
        },
    }
}

/// Result of advancing a model by one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResult<S> {
    pub next: S,
    pub outputs: MeasuredOutputs,
    /// Forces acting on the chassis at the post-step state.
    pub forces: CornerForces,
    /// Tire-model forces at the post-step state, without offsets, in tire convention.
    pub model_forces: [f64; 8],
    /// Vertical-load clamps over all force evaluations of the step.
    pub clamped: u32,
}

fn euler(
    state: &PlantState,
    eval: &ForceEval,
    torques: &WheelTorques,
    steer: f64,
    params: &VehicleParams,
    dt: f64,
) -> Result<PlantState, DynamicsError> {
    let c = &state.chassis;
    let (dvx, dvy, dr) = chassis_derivatives(c, &eval.forces, steer, params);
    let mut omega = c.omega;
    // Force offsets act on the chassis only. Fed into the spin equation, the
    // torque balance would cancel them in steady state and hide them from a_x.
    for i in 0..4 {
        let domega = (torques.traction[i]
            - torques.brake[i]
            - params.wheel_radius[i] * eval.model_forces[i])
            / params.wheel_inertia;
        // Brake torque cannot spin a wheel backwards.
        omega[i] = (omega[i] + dt * domega).max(0.0);
    }
    let chassis = ChassisState {
        v_x: c.v_x + dt * dvx,
        v_y: c.v_y + dt * dvy,
        yaw_rate: c.yaw_rate + dt * dr,
        omega,
    };
    if let Some(channel) = chassis.first_non_finite() {
        return Err(DynamicsError::NonFinite {
            channel: channel.to_string(),
        });
    }
    Ok(PlantState {
        chassis,
        memory: eval.next_memory,
    })
}

/// Advance `substeps` forward-Euler steps of `dt / substeps` each.
#[allow(clippy::too_many_arguments)]
pub fn advance(
    state: &PlantState,
    inputs: &DriverInputs,
    params: &VehicleParams,
    tires: &TireCoeffs,
    effects: &PlantEffects,
    offsets: &ForceOffsets,
    dt: f64,
    substeps: u32,
) -> Result<StepResult<PlantState>, DynamicsError> {
    if !(dt > 0.0) {
        return Err(DynamicsError::Domain(format!("dt must be > 0, got {dt}")));
    }
    let torques = wheel_torques(inputs, params)?;
    let h = dt / substeps.max(1) as f64;
    let mut current = *state;
    let mut eval = evaluate_forces(&current, inputs.steer, params, tires, effects, offsets, h);
    let mut clamped = eval.clamped as u32;
    for _ in 0..substeps.max(1) {
        current = euler(&current, &eval, &torques, inputs.steer, params, h)?;
        eval = evaluate_forces(&current, inputs.steer, params, tires, effects, offsets, h);
        clamped += eval.clamped as u32;
    }
    if !eval.forces.fx.iter().chain(&eval.forces.fy).all(|f| f.is_finite()) {
        return Err(DynamicsError::NonFinite {
            channel: "tire_forces".into(),
        });
    }
    let outputs = MeasuredOutputs {
        a_x: eval.accel.0,
        a_y: eval.accel.1,
        yaw_rate: current.chassis.yaw_rate,
        omega: current.chassis.omega,
    };
    Ok(StepResult {
        next: current,
        outputs,
        forces: eval.forces,
        model_forces: eval.model_forces,
        clamped,
    })
}

/// One forward-Euler step of the benchmark model.
pub fn step_benchmark(
    state: &ChassisState,
    inputs: &DriverInputs,
    params: &VehicleParams,
    tires: &TireCoeffs,
    dt: f64,
) -> Result<StepResult<ChassisState>, DynamicsError> {
    let r = advance(
        &PlantState::from_chassis(*state),
        inputs,
        params,
        tires,
        &PlantEffects::NONE,
        &[0.0; 8],
        dt,
        1,
    )?;
    Ok(StepResult {
        next: r.next.chassis,
        outputs: r.outputs,
        forces: r.forces,
        model_forces: r.model_forces,
        clamped: r.clamped,
    })
}

/// One forward-Euler step of the plant model.
pub fn step_plant(
    state: &PlantState,
    inputs: &DriverInputs,
    params: &VehicleParams,
    tires: &TireCoeffs,
    effects: &PlantEffects,
    dt: f64,
) -> Result<StepResult<PlantState>, DynamicsError> {
    advance(state, inputs, params, tires, effects, &[0.0; 8], dt, 1)
}

/// Parameters plus integration settings: everything needed to roll a model.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleModel {
    pub params: VehicleParams,
    pub tires: TireCoeffs,
    pub effects: PlantEffects,
    pub integration: Integration,
}

impl VehicleModel {
    pub fn from_config(cfg: &super::VehicleConfig) -> Self {
        VehicleModel {
            params: cfg.vehicle.clone(),
            tires: cfg.tires,
            effects: cfg.plant,
            integration: cfg.integration,
        }
    }

    /// Advance one sample period with force offsets.
    pub fn step(
        &self,
        state: &PlantState,
        inputs: &DriverInputs,
        offsets: &ForceOffsets,
    ) -> Result<StepResult<PlantState>, DynamicsError> {
        advance(
            state,
            inputs,
            &self.params,
            &self.tires,
            &self.effects,
            offsets,
            self.integration.dt,
            self.integration.substeps,
        )
    }

    /// Outputs and forces at `state` without advancing (used for sample 0).
    pub fn observe(&self, state: &PlantState, inputs: &DriverInputs) -> (MeasuredOutputs, ForceEval) {
        let h = self.integration.dt / self.integration.substeps.max(1) as f64;
        let eval = evaluate_forces(state, inputs.steer, &self.params, &self.tires, &self.effects, &[0.0; 8], h);
        (
            MeasuredOutputs {
                a_x: eval.accel.0,
                a_y: eval.accel.1,
                yaw_rate: state.chassis.yaw_rate,
                omega: state.chassis.omega,
            },
            eval,
        )
    }
}
