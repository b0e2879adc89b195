//! Control inputs accepted by the plant.

use crate::error::SimError;

/// Thrust, body torques and the intermediate thrust-direction controls for a
/// single step.
///
/// `ux` and `uy` are the projections of the (unit) thrust axis onto the world
/// x and y axes. Together with the total thrust they determine the
/// translational accelerations without referring to the attitude, which is
/// what lets the translational and rotational loops run separately. They must
/// satisfy `ux^2 + uy^2 <= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlInputs {
    /// Total thrust along the body z axis, in newtons.
    pub thrust: f64,
    /// Torque about the body x axis (per unit arm length), driving roll.
    pub roll_torque: f64,
    /// Torque about the body y axis (per unit arm length), driving pitch.
    pub pitch_torque: f64,
    /// Torque about the body z axis, driving yaw.
    pub yaw_torque: f64,
    /// Projection of the thrust axis on the world x axis.
    pub ux: f64,
    /// Projection of the thrust axis on the world y axis.
    pub uy: f64,
}

impl ControlInputs {
    /// Validates and stores a full set of inputs.
    pub fn new(
        thrust: f64,
        roll_torque: f64,
        pitch_torque: f64,
        yaw_torque: f64,
        ux: f64,
        uy: f64,
    ) -> Result<Self, SimError> {
        let inputs = Self {
            thrust,
            roll_torque,
            pitch_torque,
            yaw_torque,
            ux,
            uy,
        };
        if [thrust, roll_torque, pitch_torque, yaw_torque, ux, uy]
            .iter()
            .any(|v| !v.is_finite())
        {
            return Err(SimError::InvalidState(
                "control inputs must all be finite".into(),
            ));
        }
        if ux * ux + uy * uy > 1.0 + 1e-12 {
            return Err(SimError::InvalidState(format!(
                "intermediate controls must satisfy ux^2 + uy^2 <= 1, got {}",
                ux * ux + uy * uy
            )));
        }
        Ok(inputs)
    }

    /// Pure vertical thrust with no torques.
    pub fn vertical_thrust(thrust: f64) -> Result<Self, SimError> {
        Self::new(thrust, 0.0, 0.0, 0.0, 0.0, 0.0)
    }
}
