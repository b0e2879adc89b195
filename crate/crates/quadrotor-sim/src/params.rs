//! Physical parameters of the simulated vehicle.

use crate::error::SimError;

/// Standard deviations of the zero-mean Gaussian disturbances injected after
/// each integration step.
///
/// Translational noise perturbs the three linear velocities, rotational noise
/// the three body rates. Positions and angles are never perturbed directly;
/// they pick up noise through the velocities on subsequent steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisturbanceStd {
    /// Standard deviation applied to each linear velocity component.
    pub translational: f64,
    /// Standard deviation applied to each body rate component.
    pub rotational: f64,
}

impl DisturbanceStd {
    /// A noise-free plant.
    pub fn none() -> Self {
        Self {
            translational: 0.0,
            rotational: 0.0,
        }
    }
}

/// Mass, geometry, inertia and disturbance levels of the quadrotor.
///
/// The defaults describe a small hobby-class frame and are stand-ins rather
/// than measurements of a particular airframe; every study that cares about a
/// specific vehicle should construct its own set.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadrotorParams {
    mass: f64,
    arm_length: f64,
    inertia: [f64; 3],
    gravity: f64,
    disturbance_std: DisturbanceStd,
}

impl QuadrotorParams {
    /// Validates and stores a parameter set.
    ///
    /// `inertia` holds the principal moments about the body x, y and z axes.
    /// All physical quantities must be strictly positive; the disturbance
    /// levels only have to be non-negative.
    pub fn new(
        mass: f64,
        arm_length: f64,
        inertia: [f64; 3],
        gravity: f64,
        disturbance_std: DisturbanceStd,
    ) -> Result<Self, SimError> {
        let positive = [
            ("mass", mass),
            ("arm length", arm_length),
            ("inertia about x", inertia[0]),
            ("inertia about y", inertia[1]),
            ("inertia about z", inertia[2]),
            ("gravity", gravity),
        ];
        for (name, value) in positive {
            if !value.is_finite() || value <= 0.0 {
                return Err(SimError::InvalidParams(format!(
                    "{name} must be finite and strictly positive, got {value}"
                )));
            }
        }
        for (name, value) in [
            ("translational disturbance", disturbance_std.translational),
            ("rotational disturbance", disturbance_std.rotational),
        ] {
            if !value.is_finite() || value < 0.0 {
                return Err(SimError::InvalidParams(format!(
                    "{name} must be finite and non-negative, got {value}"
                )));
            }
        }
        Ok(Self {
            mass,
            arm_length,
            inertia,
            gravity,
            disturbance_std,
        })
    }

    /// Vehicle mass in kilograms.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Distance from the center of mass to each rotor in meters.
    pub fn arm_length(&self) -> f64 {
        self.arm_length
    }

    /// Principal moments of inertia about the body x, y and z axes.
    pub fn inertia(&self) -> [f64; 3] {
        self.inertia
    }

    /// Gravitational acceleration in m/s².
    pub fn gravity(&self) -> f64 {
        self.gravity
    }

    /// Disturbance levels used by [`crate::simulate_step`].
    pub fn disturbance_std(&self) -> DisturbanceStd {
        self.disturbance_std
    }

    /// Returns a copy with different disturbance levels.
    pub fn with_disturbance_std(mut self, disturbance_std: DisturbanceStd) -> Result<Self, SimError> {
        for (name, value) in [
            ("translational disturbance", disturbance_std.translational),
            ("rotational disturbance", disturbance_std.rotational),
        ] {
            if !value.is_finite() || value < 0.0 {
                return Err(SimError::InvalidParams(format!(
                    "{name} must be finite and non-negative, got {value}"
                )));
            }
        }
        self.disturbance_std = disturbance_std;
        Ok(self)
    }

    /// Thrust that exactly balances gravity for this vehicle.
    pub fn hover_thrust(&self) -> f64 {
        self.mass * self.gravity
    }
}

impl Default for QuadrotorParams {
    fn default() -> Self {
        Self {
            mass: 0.65,
            arm_length: 0.23,
            inertia: [7.5e-3, 7.5e-3, 1.3e-2],
            gravity: 9.81,
            disturbance_std: DisturbanceStd {
                translational: 1e-2,
                rotational: 1e-2,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_parameters_validate() {
        let d = QuadrotorParams::default();
        QuadrotorParams::new(
            d.mass(),
            d.arm_length(),
            d.inertia(),
            d.gravity(),
            d.disturbance_std(),
        )
        .expect("defaults must pass their own validation");
    }

    #[test]
    fn non_positive_physical_quantities_are_rejected() {
        let err = QuadrotorParams::new(0.0, 0.23, [1e-2; 3], 9.81, DisturbanceStd::none());
        assert!(matches!(err, Err(SimError::InvalidParams(_))));

        let err = QuadrotorParams::new(0.65, 0.23, [1e-2, -1e-2, 1e-2], 9.81, DisturbanceStd::none());
        assert!(matches!(err, Err(SimError::InvalidParams(_))));
    }

    #[test]
    fn negative_noise_is_rejected_but_zero_is_fine() {
        let bad = DisturbanceStd {
            translational: -0.1,
            rotational: 0.0,
        };
        let err = QuadrotorParams::new(0.65, 0.23, [1e-2; 3], 9.81, bad);
        assert!(matches!(err, Err(SimError::InvalidParams(_))));

        QuadrotorParams::new(0.65, 0.23, [1e-2; 3], 9.81, DisturbanceStd::none())
            .expect("zero noise is a valid configuration");
    }
}
