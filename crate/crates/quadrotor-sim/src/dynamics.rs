//! Continuous-time rigid-body dynamics of the quadrotor.
//!
//! The model parameterizes the translational accelerations through the
//! intermediate controls `ux`/`uy` (projections of the thrust axis on the
//! world x and y axes) instead of through the Euler angles directly. With a
//! unit thrust axis the vertical projection is `sqrt(1 - ux^2 - uy^2)`, so
//! the translational block never needs to see the attitude at all. The
//! rotational block is torque-driven Euler dynamics about the principal axes
//! with the usual gyroscopic coupling terms.

use nalgebra::Vector6;

use crate::controls::ControlInputs;
use crate::error::SimError;
use crate::params::QuadrotorParams;

/// Time derivative of the translational block `[x, x_dot, y, y_dot, z, z_dot]`.
///
/// Horizontal accelerations are `thrust / mass` times the respective
/// intermediate control; the vertical acceleration uses the remaining
/// component of the unit thrust axis and subtracts gravity.
pub fn translational_derivative(
    state: &Vector6<f64>,
    u: &ControlInputs,
    params: &QuadrotorParams,
) -> Vector6<f64> {
    let specific_thrust = u.thrust / params.mass();
    let vertical_axis = (1.0 - u.ux * u.ux - u.uy * u.uy).max(0.0).sqrt();
    Vector6::new(
        state[1],
        specific_thrust * u.ux,
        state[3],
        specific_thrust * u.uy,
        state[5],
        specific_thrust * vertical_axis - params.gravity(),
    )
}

/// Time derivative of the rotational block
/// `[roll, roll_rate, pitch, pitch_rate, yaw, yaw_rate]`.
pub fn rotational_derivative(
    state: &Vector6<f64>,
    u: &ControlInputs,
    params: &QuadrotorParams,
) -> Vector6<f64> {
    let [ix, iy, iz] = params.inertia();
    let l = params.arm_length();
    let (roll_rate, pitch_rate, yaw_rate) = (state[1], state[3], state[5]);
    Vector6::new(
        roll_rate,
        (pitch_rate * yaw_rate * (iy - iz) + l * u.roll_torque) / ix,
        pitch_rate,
        (roll_rate * yaw_rate * (iz - ix) + l * u.pitch_torque) / iy,
        yaw_rate,
        (roll_rate * pitch_rate * (ix - iy) + u.yaw_torque) / iz,
    )
}

/// Intermediate controls realized by a given attitude.
///
/// Returns `(ux, uy)`, the projections of the body thrust axis onto the world
/// x and y axes for the given roll/pitch/yaw angles.
pub fn intermediate_controls(roll: f64, pitch: f64, yaw: f64) -> (f64, f64) {
    let (sin_roll, cos_roll) = roll.sin_cos();
    let (sin_pitch, _) = pitch.sin_cos();
    let (sin_yaw, cos_yaw) = yaw.sin_cos();
    let ux = cos_roll * sin_pitch * cos_yaw + sin_roll * sin_yaw;
    let uy = cos_roll * sin_pitch * sin_yaw - sin_roll * cos_yaw;
    (ux, uy)
}

/// Inverts [`intermediate_controls`] for the zero-yaw setpoint.
///
/// Returns the `(roll, pitch)` pair that realizes the commanded `(ux, uy)`
/// with yaw held at zero. Only `yaw_setpoint == 0.0` is supported; the
/// inversion has no closed form for a spinning heading. Fails with
/// [`SimError::UnreachableAttitude`] when the commanded projections exceed
/// what a unit thrust axis can provide.
pub fn attitude_from_intermediate(
    ux: f64,
    uy: f64,
    yaw_setpoint: f64,
) -> Result<(f64, f64), SimError> {
    if yaw_setpoint != 0.0 {
        return Err(SimError::InvalidState(format!(
            "attitude inversion supports only a zero yaw setpoint, got {yaw_setpoint}"
        )));
    }
    if !ux.is_finite() || !uy.is_finite() || uy.abs() >= 1.0 {
        return Err(SimError::UnreachableAttitude { ux, uy });
    }
    let roll = (-uy).asin();
    let pitch_sine = ux / roll.cos();
    if pitch_sine.abs() > 1.0 {
        return Err(SimError::UnreachableAttitude { ux, uy });
    }
    Ok((roll, pitch_sine.asin()))
}
