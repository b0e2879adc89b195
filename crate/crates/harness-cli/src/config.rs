//! Experiment configuration: a TOML file with `[plant]`, `[mpc]`, `[gp]`,
//! `[trajectory]` and `[noise]` sections, plus the named presets the test
//! protocols use.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::HarnessError;
use quadrotor_sim::{DisturbanceStd, QuadrotorParams};

/// Physical plant description and the control rate it is sampled at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlantSection {
    pub mass: f64,
    pub arm_length: f64,
    pub inertia: [f64; 3],
    pub gravity: f64,
    /// Control (and sampling) rate of the discrete loop in Hz.
    pub control_rate_hz: f64,
}

impl Default for PlantSection {
    fn default() -> Self {
        Self {
            mass: 0.65,
            arm_length: 0.23,
            inertia: [7.5e-3, 7.5e-3, 1.3e-2],
            gravity: 9.81,
            control_rate_hz: 1.0,
        }
    }
}

/// Process-noise levels of the simulated plant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseSection {
    /// Standard deviation added to each linear velocity after every step.
    pub translational_std: f64,
    /// Standard deviation added to each body rate after every step.
    pub rotational_std: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self {
            translational_std: 1e-2,
            rotational_std: 1e-2,
        }
    }
}

/// Reference trajectory selection and geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrajectorySection {
    /// `"elliptical"` or `"lorenz"`.
    pub kind: String,
    pub duration_s: f64,
    pub sample_rate_hz: f64,
    /// Ellipse semi-axis along x, in meters.
    pub semi_axis_x: f64,
    /// Ellipse semi-axis along y, in meters.
    pub semi_axis_y: f64,
    /// Base altitude of the reference, in meters.
    pub altitude: f64,
    /// Altitude drift in m/s; zero keeps the ellipse planar.
    pub climb_rate: f64,
    /// Full revolutions of the ellipse over the configured duration.
    pub revolutions: f64,
    /// Chaotic-attractor time advanced per reference sample.
    pub lorenz_time_step: f64,
    /// Attractor state the integration starts from (before burn-in).
    pub lorenz_initial: [f64; 3],
    /// Attractor time discarded before the first sample.
    pub lorenz_burn_in: f64,
    /// Lower corner of the box the attractor is scaled into.
    pub box_min: [f64; 3],
    /// Upper corner of the box the attractor is scaled into.
    pub box_max: [f64; 3],
}

impl Default for TrajectorySection {
    fn default() -> Self {
        Self {
            kind: "elliptical".into(),
            duration_s: 189.0,
            sample_rate_hz: 1.0,
            semi_axis_x: 2.0,
            semi_axis_y: 1.0,
            altitude: 5.0,
            climb_rate: 0.0,
            revolutions: 3.0,
            lorenz_time_step: 0.02,
            lorenz_initial: [1.0, 1.0, 20.0],
            lorenz_burn_in: 3.0,
            box_min: [-2.0, -2.0, 4.0],
            box_max: [2.0, 2.0, 6.0],
        }
    }
}

/// Controller weights, horizon and input boxes for both loops.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MpcSection {
    pub horizon: usize,
    pub thrust_min: f64,
    pub thrust_max: f64,
    /// Symmetric bound on each of the intermediate controls `ux`, `uy`.
    pub tilt_limit: f64,
    /// Symmetric bound on each body torque.
    pub torque_limit: f64,
    /// Scale of the identity state weight in the translational loop.
    pub q_translational: f64,
    /// Scale of the identity input weight in the translational loop.
    pub r_translational: f64,
    /// Scale of the identity state weight in the rotational loop (scaled space).
    pub q_rotational: f64,
    /// Scale of the identity input weight in the rotational loop (scaled space).
    pub r_rotational: f64,
    pub warm_start: bool,
    /// A run is marked failed when the controller fail-safe engages on more
    /// than this fraction of steps.
    pub failsafe_fraction: f64,
}

impl Default for MpcSection {
    fn default() -> Self {
        Self {
            horizon: 1,
            thrust_min: 0.0,
            thrust_max: 100.0,
            tilt_limit: 0.2,
            torque_limit: 0.05,
            q_translational: 1.0,
            r_translational: 1e-6,
            q_rotational: 1.0,
            r_rotational: 1e-6,
            warm_start: true,
            failsafe_fraction: 0.2,
        }
    }
}

/// Data collection and hyperparameter-training settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GpSection {
    /// Transitions collected per subsystem.
    pub training_size: usize,
    /// Random restarts on top of the data-driven initial hyperparameters.
    pub restarts: usize,
    /// Iteration cap per optimization start.
    pub max_iterations: usize,
    /// When true, training-sweep subsets are drawn at random (seeded) instead
    /// of taking deterministic prefixes.
    pub random_subsets: bool,
    /// Exploration noise on the baseline's thrust command.
    pub exploration_thrust_std: f64,
    /// Exploration noise on the baseline's intermediate controls. This must
    /// be large enough to break the feedback correlation in the collected
    /// data: with timid excitation the lateral-axis hyperparameters are not
    /// identifiable and the learned Jacobians come out wrong even though the
    /// predictions interpolate the data perfectly.
    pub exploration_tilt_std: f64,
    /// Exploration noise on the baseline's torque commands.
    pub exploration_torque_std: f64,
}

impl Default for GpSection {
    fn default() -> Self {
        Self {
            training_size: 189,
            restarts: 2,
            max_iterations: 150,
            random_subsets: false,
            exploration_thrust_std: 0.2,
            exploration_tilt_std: 0.05,
            exploration_torque_std: 2e-3,
        }
    }
}

/// Complete experiment description. Serializes to the TOML layout accepted by
/// the `--config` flag; every field has a default so partial files work.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct ExperimentConfig {
    pub plant: PlantSection,
    pub mpc: MpcSection,
    pub gp: GpSection,
    pub trajectory: TrajectorySection,
    pub noise: NoiseSection,
}

impl ExperimentConfig {
    /// The planar-ellipse benchmark: 189 samples at 1 Hz around a 2 m by 1 m
    /// ellipse at 5 m altitude, thrust in `[0, 100]` and intermediate
    /// controls in `[-0.2, 0.2]`.
    pub fn elliptical_paper() -> Self {
        Self::default()
    }

    /// The chaotic-attractor benchmark with a hover-capable thrust box
    /// `[0, 45]`.
    pub fn lorenz() -> Self {
        let mut cfg = Self::default();
        cfg.trajectory.kind = "lorenz".into();
        cfg.mpc.thrust_min = 0.0;
        cfg.mpc.thrust_max = 45.0;
        cfg
    }

    /// The chaotic-attractor benchmark with the thrust box `[-45, 0]` kept
    /// verbatim from its source. A non-positive thrust cannot hover, so this
    /// preset exists for the record; [`ExperimentConfig::lorenz`] is the
    /// usable variant.
    pub fn lorenz_paper() -> Self {
        let mut cfg = Self::lorenz();
        cfg.mpc.thrust_min = -45.0;
        cfg.mpc.thrust_max = 0.0;
        cfg
    }

    /// High process noise variant of any preset (1.0 instead of 1e-2).
    pub fn with_high_noise(mut self) -> Self {
        self.noise.translational_std = 1.0;
        self.noise.rotational_std = 1.0;
        self
    }

    /// Looks a preset up by name.
    pub fn preset(name: &str) -> Result<Self, HarnessError> {
        match name {
            "elliptical-paper" | "elliptical" => Ok(Self::elliptical_paper()),
            "lorenz" => Ok(Self::lorenz()),
            "lorenz-paper" => Ok(Self::lorenz_paper()),
            "paper-noise" => Ok(Self::elliptical_paper().with_high_noise()),
            other => Err(HarnessError::Config(format!(
                "unknown preset {other:?}; available: elliptical, elliptical-paper, \
                 lorenz, lorenz-paper, paper-noise"
            ))),
        }
    }

    /// Parses and validates a TOML document.
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads and validates a TOML file.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    /// Serializes the configuration back to TOML, used as the snapshot that
    /// reports embed.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config always serializes")
    }

    /// Cross-field validation beyond what deserialization enforces.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let positive = [
            ("plant.mass", self.plant.mass),
            ("plant.arm_length", self.plant.arm_length),
            ("plant.gravity", self.plant.gravity),
            ("plant.control_rate_hz", self.plant.control_rate_hz),
            ("trajectory.duration_s", self.trajectory.duration_s),
            ("trajectory.sample_rate_hz", self.trajectory.sample_rate_hz),
            ("trajectory.lorenz_time_step", self.trajectory.lorenz_time_step),
            ("mpc.tilt_limit", self.mpc.tilt_limit),
            ("mpc.torque_limit", self.mpc.torque_limit),
            ("mpc.q_translational", self.mpc.q_translational),
            ("mpc.r_translational", self.mpc.r_translational),
            ("mpc.q_rotational", self.mpc.q_rotational),
            ("mpc.r_rotational", self.mpc.r_rotational),
        ];
        for (name, value) in positive {
            if !value.is_finite() || value <= 0.0 {
                return Err(HarnessError::Config(format!(
                    "{name} must be finite and positive, got {value}"
                )));
            }
        }
        for (name, value) in self.plant.inertia.iter().enumerate() {
            if !value.is_finite() || *value <= 0.0 {
                return Err(HarnessError::Config(format!(
                    "plant.inertia[{name}] must be finite and positive, got {value}"
                )));
            }
        }
        for (name, value) in [
            ("noise.translational_std", self.noise.translational_std),
            ("noise.rotational_std", self.noise.rotational_std),
            ("trajectory.lorenz_burn_in", self.trajectory.lorenz_burn_in),
            ("gp.exploration_thrust_std", self.gp.exploration_thrust_std),
            ("gp.exploration_tilt_std", self.gp.exploration_tilt_std),
            ("gp.exploration_torque_std", self.gp.exploration_torque_std),
        ] {
            if !value.is_finite() || value < 0.0 {
                return Err(HarnessError::Config(format!(
                    "{name} must be finite and non-negative, got {value}"
                )));
            }
        }
        if self.mpc.horizon == 0 {
            return Err(HarnessError::Config("mpc.horizon must be at least 1".into()));
        }
        // Any (ux, uy) in the tilt box must stay a valid unit-axis projection
        // pair and invertible to an attitude, including the box corners.
        if self.mpc.tilt_limit > 0.7 {
            return Err(HarnessError::Config(format!(
                "mpc.tilt_limit must not exceed 0.7, got {}",
                self.mpc.tilt_limit
            )));
        }
        if self.mpc.thrust_min >= self.mpc.thrust_max {
            return Err(HarnessError::Config(format!(
                "mpc thrust box [{}, {}] is empty",
                self.mpc.thrust_min, self.mpc.thrust_max
            )));
        }
        if self.gp.training_size < 2 {
            return Err(HarnessError::Config(
                "gp.training_size must be at least 2".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.mpc.failsafe_fraction) {
            return Err(HarnessError::Config(
                "mpc.failsafe_fraction must lie in [0, 1]".into(),
            ));
        }
        if self.trajectory.kind != "elliptical" && self.trajectory.kind != "lorenz" {
            return Err(HarnessError::Config(format!(
                "trajectory.kind must be \"elliptical\" or \"lorenz\", got {:?}",
                self.trajectory.kind
            )));
        }
        for axis in 0..3 {
            if self.trajectory.box_min[axis] >= self.trajectory.box_max[axis] {
                return Err(HarnessError::Config(format!(
                    "trajectory box is empty along axis {axis}"
                )));
            }
        }
        Ok(())
    }

    /// Quadrotor parameters implied by the `[plant]` and `[noise]` sections.
    pub fn plant_params(&self) -> Result<QuadrotorParams, HarnessError> {
        Ok(QuadrotorParams::new(
            self.plant.mass,
            self.plant.arm_length,
            self.plant.inertia,
            self.plant.gravity,
            DisturbanceStd {
                translational: self.noise.translational_std,
                rotational: self.noise.rotational_std,
            },
        )?)
    }

    /// Length of the sampling interval in seconds.
    pub fn step_dt(&self) -> f64 {
        1.0 / self.plant.control_rate_hz
    }

    /// Number of control steps in a full run.
    pub fn run_steps(&self) -> usize {
        (self.trajectory.duration_s * self.trajectory.sample_rate_hz).round() as usize
    }
}
