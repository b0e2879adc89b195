//! Reference trajectories: a planar ellipse and a chaotic attractor scaled
//! into a flight box.

use std::f64::consts::TAU;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::config::TrajectorySection;
use crate::error::HarnessError;

/// Which reference family a trajectory was generated from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrajectoryKind {
    Elliptical,
    Lorenz,
}

impl std::str::FromStr for TrajectoryKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "elliptical" => Ok(Self::Elliptical),
            "lorenz" => Ok(Self::Lorenz),
            other => Err(HarnessError::Config(format!(
                "unknown trajectory kind {other:?}"
            ))),
        }
    }
}

/// One reference sample: time and the desired position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub position: [f64; 3],
}

/// A sampled position reference at a fixed rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    kind: TrajectoryKind,
    sample_rate_hz: f64,
    samples: Vec<TrajectorySample>,
}

impl Trajectory {
    pub fn kind(&self) -> TrajectoryKind {
        self.kind
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[TrajectorySample] {
        &self.samples
    }

    /// Desired position at sample `k`, holding the final point beyond the end.
    pub fn position(&self, k: usize) -> [f64; 3] {
        self.samples[k.min(self.samples.len() - 1)].position
    }

    /// Desired velocity at sample `k` by forward finite differences; the last
    /// interval's value is held at the end.
    pub fn velocity(&self, k: usize) -> [f64; 3] {
        let last = self.samples.len() - 1;
        let k = k.min(last);
        let (a, b) = if k == last { (last - 1, last) } else { (k, k + 1) };
        let dt = self.samples[b].t - self.samples[a].t;
        let pa = self.samples[a].position;
        let pb = self.samples[b].position;
        [
            (pb[0] - pa[0]) / dt,
            (pb[1] - pa[1]) / dt,
            (pb[2] - pa[2]) / dt,
        ]
    }

    /// Reference for the translational state block at sample `k`:
    /// `[x, x_dot, y, y_dot, z, z_dot]` with finite-difference velocities.
    pub fn reference_state(&self, k: usize) -> DVector<f64> {
        let p = self.position(k);
        let v = self.velocity(k);
        DVector::from_vec(vec![p[0], v[0], p[1], v[1], p[2], v[2]])
    }

    /// A representative length scale of the path: the average distance of the
    /// samples from their centroid. Tracking errors are judged against it.
    pub fn characteristic_radius(&self) -> f64 {
        let n = self.samples.len() as f64;
        let mut centroid = [0.0; 3];
        for s in &self.samples {
            for a in 0..3 {
                centroid[a] += s.position[a] / n;
            }
        }
        self.samples
            .iter()
            .map(|s| {
                (0..3)
                    .map(|a| (s.position[a] - centroid[a]).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .sum::<f64>()
            / n
    }
}

/// Generates the reference described by the config section, sampled at
/// `t_k = k / sample_rate_hz` for the configured duration.
pub fn generate_trajectory(section: &TrajectorySection) -> Result<Trajectory, HarnessError> {
    let count = (section.duration_s * section.sample_rate_hz).round() as usize + 1;
    if count < 2 {
        return Err(HarnessError::Config(format!(
            "duration {}s at {} Hz yields fewer than 2 samples",
            section.duration_s, section.sample_rate_hz
        )));
    }
    let kind: TrajectoryKind = section.kind.parse()?;
    let dt = 1.0 / section.sample_rate_hz;
    let samples = match kind {
        TrajectoryKind::Elliptical => elliptical_samples(section, count, dt),
        TrajectoryKind::Lorenz => lorenz_samples(section, count, dt),
    };
    Ok(Trajectory {
        kind,
        sample_rate_hz: section.sample_rate_hz,
        samples,
    })
}

fn elliptical_samples(section: &TrajectorySection, count: usize, dt: f64) -> Vec<TrajectorySample> {
    let omega = TAU * section.revolutions / section.duration_s;
    (0..count)
        .map(|k| {
            let t = k as f64 * dt;
            TrajectorySample {
                t,
                position: [
                    section.semi_axis_x * (omega * t).cos(),
                    section.semi_axis_y * (omega * t).sin(),
                    section.altitude + section.climb_rate * t,
                ],
            }
        })
        .collect()
}

const LORENZ_SIGMA: f64 = 10.0;
const LORENZ_RHO: f64 = 28.0;
const LORENZ_BETA: f64 = 8.0 / 3.0;

fn lorenz_vector_field(v: [f64; 3]) -> [f64; 3] {
    let [x, y, z] = v;
    [
        LORENZ_SIGMA * (y - x),
        x * (LORENZ_RHO - z) - y,
        x * y - LORENZ_BETA * z,
    ]
}

fn lorenz_rk4(v: [f64; 3], h: f64) -> [f64; 3] {
    let add = |a: [f64; 3], b: [f64; 3], s: f64| [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]];
    let k1 = lorenz_vector_field(v);
    let k2 = lorenz_vector_field(add(v, k1, h / 2.0));
    let k3 = lorenz_vector_field(add(v, k2, h / 2.0));
    let k4 = lorenz_vector_field(add(v, k3, h));
    let mut out = v;
    for i in 0..3 {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Advances the attractor by `dt` of its own time using `substeps` internal
/// fourth-order Runge-Kutta steps. Exposed so accuracy checks can compare
/// coarse and fine grids directly.
pub fn lorenz_advance(v: [f64; 3], dt: f64, substeps: usize) -> [f64; 3] {
    let h = dt / substeps as f64;
    let mut out = v;
    for _ in 0..substeps {
        out = lorenz_rk4(out, h);
    }
    out
}

const LORENZ_SUBSTEPS: usize = 10;

fn lorenz_samples(section: &TrajectorySection, count: usize, dt: f64) -> Vec<TrajectorySample> {
    let mut v = section.lorenz_initial;
    if section.lorenz_burn_in > 0.0 {
        let steps = (section.lorenz_burn_in / section.lorenz_time_step).ceil() as usize;
        v = lorenz_advance(v, steps as f64 * section.lorenz_time_step, steps * LORENZ_SUBSTEPS);
    }
    let mut raw = Vec::with_capacity(count);
    for _ in 0..count {
        raw.push(v);
        v = lorenz_advance(v, section.lorenz_time_step, LORENZ_SUBSTEPS);
    }

    // Affine map of the realized attractor extents onto the flight box; a
    // degenerate axis collapses to the box midpoint.
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in &raw {
        for a in 0..3 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let map = |value: f64, a: usize| {
        if hi[a] > lo[a] {
            section.box_min[a]
                + (value - lo[a]) / (hi[a] - lo[a]) * (section.box_max[a] - section.box_min[a])
        } else {
            0.5 * (section.box_min[a] + section.box_max[a])
        }
    };
    raw.into_iter()
        .enumerate()
        .map(|(k, p)| TrajectorySample {
            t: k as f64 * dt,
            position: [map(p[0], 0), map(p[1], 1), map(p[2], 2)],
        })
        .collect()
}
