//! Plant state with the interleaved position/velocity layout used throughout
//! the toolkit.

use nalgebra::Vector6;

use crate::error::SimError;

/// Wraps an angle into the half-open interval `(-pi, pi]`.
///
/// Values already inside the interval are returned unchanged, bit for bit, so
/// repeated wrapping never perturbs a stored angle.
pub fn wrap_angle(angle: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    if angle > -PI && angle <= PI {
        return angle;
    }
    PI - (PI - angle).rem_euclid(TAU)
}

/// Full twelve-dimensional state of the vehicle, split into the translational
/// and rotational halves that the hierarchical controller treats separately.
///
/// The translational block is ordered `[x, x_dot, y, y_dot, z, z_dot]`, the
/// rotational block `[roll, roll_rate, pitch, pitch_rate, yaw, yaw_rate]`.
/// Angles are always stored wrapped into `(-pi, pi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadrotorState {
    translational: Vector6<f64>,
    rotational: Vector6<f64>,
}

impl QuadrotorState {
    /// Builds a state from the two six-dimensional blocks, wrapping the
    /// angles and rejecting non-finite entries.
    pub fn new(translational: Vector6<f64>, rotational: Vector6<f64>) -> Result<Self, SimError> {
        if translational.iter().chain(rotational.iter()).any(|v| !v.is_finite()) {
            return Err(SimError::InvalidState(
                "state components must all be finite".into(),
            ));
        }
        let mut rotational = rotational;
        for angle_index in [0, 2, 4] {
            rotational[angle_index] = wrap_angle(rotational[angle_index]);
        }
        Ok(Self {
            translational,
            rotational,
        })
    }

    /// The vehicle at rest at the origin with a level attitude.
    pub fn hover_at_origin() -> Self {
        Self {
            translational: Vector6::zeros(),
            rotational: Vector6::zeros(),
        }
    }

    /// Translational block `[x, x_dot, y, y_dot, z, z_dot]`.
    pub fn translational(&self) -> &Vector6<f64> {
        &self.translational
    }

    /// Rotational block `[roll, roll_rate, pitch, pitch_rate, yaw, yaw_rate]`.
    pub fn rotational(&self) -> &Vector6<f64> {
        &self.rotational
    }

    /// World-frame position `[x, y, z]`.
    pub fn position(&self) -> [f64; 3] {
        [
            self.translational[0],
            self.translational[2],
            self.translational[4],
        ]
    }

    /// Euler angles `[roll, pitch, yaw]`.
    pub fn attitude(&self) -> [f64; 3] {
        [self.rotational[0], self.rotational[2], self.rotational[4]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn angles_wrap_into_the_half_open_interval() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(-2.5 * PI) - (-0.5 * PI)).abs() < 1e-12);
        assert_eq!(wrap_angle(0.25), 0.25);
    }

    #[test]
    fn construction_wraps_stored_angles() {
        let rotational = Vector6::new(3.0 * PI, 0.1, -2.5 * PI, 0.2, 0.3, 0.4);
        let state = QuadrotorState::new(Vector6::zeros(), rotational).unwrap();
        let [roll, pitch, yaw] = state.attitude();
        assert!((roll - PI).abs() < 1e-12);
        assert!((pitch - (-0.5 * PI)).abs() < 1e-12);
        assert_eq!(yaw, 0.3);
        // Rates are untouched by the wrap.
        assert_eq!(state.rotational()[1], 0.1);
        assert_eq!(state.rotational()[3], 0.2);
    }

    #[test]
    fn non_finite_states_are_rejected() {
        let bad = Vector6::new(0.0, f64::NAN, 0.0, 0.0, 0.0, 0.0);
        assert!(matches!(
            QuadrotorState::new(bad, Vector6::zeros()),
            Err(SimError::InvalidState(_))
        ));
    }
}
