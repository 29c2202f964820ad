//! Vehicle models: the simplified double-track benchmark and the richer plant
//! that stands in for a multibody simulator.

mod model;
mod params;
mod state;
mod tire;

pub use model::{
    advance, chassis_derivatives, chassis_totals, evaluate_forces, step_benchmark, step_plant,
    wheel_torques, ForceEval, PlantMemory, PlantState, StepResult, VehicleModel, WheelTorques,
    PLANT_EXTRA_LABELS,
};
pub use params::{Integration, PacejkaAxis, PlantEffects, TireCoeffs, VehicleConfig, VehicleParams};
pub use state::{
    ChassisState, CornerForces, DriverInputs, ForceOffsets, MeasuredOutputs, CORNERS, FORCE_LABELS,
    INPUT_LABELS, OUTPUT_LABELS, STATE_LABELS,
};
pub use tire::{
    compute_slips, pacejka_force, vertical_loads, wheel_frame_velocities, CornerSlips, VerticalLoads,
};
