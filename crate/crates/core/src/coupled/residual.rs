//! Finite-difference residuals of the body-frame Euler system along a solution.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::body::Body;
use crate::coupled::pressure::PressureField;
use crate::coupled::solve::CoupledSolution;
use crate::error::Result;
use crate::math::{skew, Vec3};
use crate::vorticity::{FlowField, VelocitySource};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ResidualStat {
    pub rms: f64,
    pub max: f64,
    /// RMS of the magnitudes of the terms that should cancel.
    pub scale: f64,
    pub samples: usize,
}

impl ResidualStat {
    fn from_pairs(pairs: &[(f64, f64)]) -> Self {
        if pairs.is_empty() {
            return ResidualStat::default();
        }
        let n = pairs.len() as f64;
        ResidualStat {
            rms: (pairs.iter().map(|(r, _)| r * r).sum::<f64>() / n).sqrt(),
            max: pairs.iter().map(|(r, _)| *r).fold(0.0, f64::max),
            scale: (pairs.iter().map(|(_, s)| s * s).sum::<f64>() / n).sqrt(),
            samples: pairs.len(),
        }
    }

    /// `rms / scale`, or zero when both vanish.
    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.rms / self.scale
        } else if self.rms == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    /// `dv/dt + ((v - U) . grad) v + r x v + grad q` at the sample points.
    pub momentum: ResidualStat,
    /// `div v` at the sample points.
    pub divergence: ResidualStat,
    /// `v . n - (l + r x y) . n - sum w_j chi_j` at the centroids.
    pub slip: ResidualStat,
    /// `d omega/dt - (grad v - S(r)) omega` along the markers.
    pub transport: ResidualStat,
    /// Grid times actually evaluated.
    pub times: Vec<f64>,
}

/// Relative thresholds on each residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResidualThresholds {
    pub momentum: f64,
    pub divergence: f64,
    pub slip: f64,
    pub transport: f64,
}

impl Default for ResidualThresholds {
    fn default() -> Self {
        ResidualThresholds {
            momentum: 1e-2,
            divergence: 1e-3,
            slip: 1e-6,
            transport: 1e-3,
        }
    }
}

impl ResidualReport {
    /// Names of the residuals above their thresholds.
    pub fn failures(&self, th: &ResidualThresholds) -> Vec<&'static str> {
        let mut out = Vec::new();
        for (name, stat, limit) in [
            ("momentum", &self.momentum, th.momentum),
            ("divergence", &self.divergence, th.divergence),
            ("slip", &self.slip, th.slip),
            ("transport", &self.transport, th.transport),
        ] {
            if !(stat.relative() <= limit) {
                out.push(name);
            }
        }
        out
    }
}

/// Spatial step of the finite differences. Large enough that the switches
/// between panel quadrature rules stay below the truncation error.
const FD_STEP: f64 = 1e-2;

/// Fourth-order central difference of `f` along `e` (a step vector).
fn central<T, F>(f: F, y: &Vec3, e: &Vec3) -> T
where
    F: Fn(&Vec3) -> T,
    T: std::ops::Sub<Output = T> + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
{
    let h = e.norm();
    (f(&(y - e * 2.0)) - f(&(y + e * 2.0)) + (f(&(y + e)) - f(&(y - e))) * 8.0) * (1.0 / (12.0 * h))
}

/// Evaluates the residuals at the given interior grid times; times without a
/// grid neighbour on both sides are skipped.
pub fn residual_check(
    body: &Body,
    solution: &CoupledSolution,
    sample_points: &[Vec3],
    times: &[f64],
) -> Result<ResidualReport> {
    let dt = solution.dt;
    let mut momentum = Vec::new();
    let mut divergence = Vec::new();
    let mut slip = Vec::new();
    let mut transport = Vec::new();
    let mut used = Vec::new();
    let mesh = body.tables.mesh();
    let field_at = |k: usize| {
        let s = &solution.states[k];
        FlowField::new(&body.tables, s.l, s.r, &s.w, &s.markers)
    };
    for &t in times {
        let Some(k) = solution.index_of(t) else {
            continue;
        };
        if k == 0 || k + 1 >= solution.states.len() {
            continue;
        }
        used.push(solution.times[k]);
        let state = &solution.states[k];
        let before = field_at(k - 1)?;
        let after = field_at(k + 1)?;
        let pressure = PressureField::new(body, state)?;
        let field = &pressure.field;

        momentum.par_extend(sample_points.par_iter().map(|y| {
            let dvdt = (after.velocity(y) - before.velocity(y)) / (2.0 * dt);
            let (v, grad) = field.velocity_gradient(y);
            let u = field.body_velocity(y);
            let convect = grad * (v - u);
            let turn = state.r.cross(&v);
            let gq = Vec3::from_fn(|i, _| {
                central(|x| pressure.eval_unchecked(x), y, &(Vec3::ith(i, FD_STEP)))
            });
            let res = dvdt + convect + turn + gq;
            (
                res.norm(),
                dvdt.norm() + convect.norm() + turn.norm() + gq.norm(),
            )
        }));

        divergence.par_extend(sample_points.par_iter().map(|y| {
            let div: f64 = (0..3)
                .map(|i| central(|x| field.velocity(x)[i], y, &Vec3::ith(i, FD_STEP)))
                .sum();
            (div.abs(), field.velocity_gradient(y).1.norm())
        }));

        let dn = body.tables.solver.normal_derivative(&field.total_sigma);
        let chi_w: Vec<f64> = (0..mesh.len())
            .map(|p| {
                state
                    .w
                    .iter()
                    .zip(&body.tables.chi)
                    .map(|(w, c)| w * c[p])
                    .sum()
            })
            .collect();
        for p in 0..mesh.len() {
            let n = mesh.normals()[p];
            let c = mesh.centroids()[p];
            let blob = if field.eta.is_zero() {
                0.0
            } else {
                field.eta.boundary_blob_velocity[p].dot(&n)
            };
            let prescribed = field.body_velocity(&c).dot(&n) + chi_w[p];
            slip.push((
                (dn[p] + blob - prescribed).abs(),
                prescribed.abs() + blob.abs(),
            ));
        }

        let sr = skew(&state.r);
        let prev = &solution.states[k - 1].markers;
        let next = &solution.states[k + 1].markers;
        transport.par_extend(state.markers.markers.par_iter().enumerate().map(|(i, m)| {
            let dw = (next.markers[i].vorticity() - prev.markers[i].vorticity()) / (2.0 * dt);
            let (_, grad) = field.velocity_gradient(&m.x);
            let stretch = (grad - sr) * m.vorticity();
            ((dw - stretch).norm(), dw.norm() + stretch.norm())
        }));
    }
    Ok(ResidualReport {
        momentum: ResidualStat::from_pairs(&momentum),
        divergence: ResidualStat::from_pairs(&divergence),
        slip: ResidualStat::from_pairs(&slip),
        transport: ResidualStat::from_pairs(&transport),
        times: used,
    })
}
