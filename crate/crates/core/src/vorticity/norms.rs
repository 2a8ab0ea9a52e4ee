//! Discrete estimates of the weighted norms used to measure vorticity.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{Mat3, Vec3};
use crate::vorticity::markers::MarkerSet;

/// `<y> = (1 + |y|^2)^{1/2}`.
pub fn japanese(y: &Vec3) -> f64 {
    (1.0 + y.norm_squared()).sqrt()
}

/// Exponent and weights `(p, delta, alpha)` of the function spaces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormParams {
    pub p: f64,
    pub delta: f64,
    pub alpha: f64,
}

impl Default for NormParams {
    fn default() -> Self {
        NormParams {
            p: 4.0,
            delta: 0.1,
            alpha: 0.2,
        }
    }
}

impl NormParams {
    /// Requires `3 < p <= 4`, `0 <= delta < 1 - 3/p`, `0 < alpha <= 1 - 3/p`.
    pub fn validate(&self) -> Result<()> {
        let top = 1.0 - 3.0 / self.p;
        if !(self.p > 3.0 && self.p <= 4.0) {
            return Err(Error::ParameterWindow(format!(
                "p = {} must lie in (3, 4]",
                self.p
            )));
        }
        if !(self.delta >= 0.0 && self.delta < top) {
            return Err(Error::ParameterWindow(format!(
                "delta = {} must lie in [0, {top})",
                self.delta
            )));
        }
        if !(self.alpha > 0.0 && self.alpha <= top) {
            return Err(Error::ParameterWindow(format!(
                "alpha = {} must lie in (0, {top}]",
                self.alpha
            )));
        }
        Ok(())
    }

    /// The decay weight `delta + 2` of the vorticity space.
    pub fn lambda(&self) -> f64 {
        self.delta + 2.0
    }
}

/// `(sum |u_k|^p <y_k>^{p lambda} vol_k)^{1/p}`.
pub fn weighted_lp(values: &[Vec3], points: &[Vec3], vols: &[f64], p: f64, lambda: f64) -> f64 {
    values
        .iter()
        .zip(points)
        .zip(vols)
        .map(|((u, y), v)| u.norm().powf(p) * japanese(y).powf(p * lambda) * v)
        .sum::<f64>()
        .powf(1.0 / p)
}

/// Largest `|u_i - u_j| / |y_i - y_j|^alpha` over all pairs.
///
/// Pairs farther apart than `((|u_i| + sup|u|) / best)^{1/alpha}` cannot
/// raise the running maximum and are skipped.
pub fn holder_seminorm(values: &[Vec3], points: &[Vec3], alpha: f64) -> f64 {
    let norms: Vec<f64> = values.iter().map(|u| u.norm()).collect();
    let sup = norms.iter().copied().fold(0.0, f64::max);
    if sup == 0.0 {
        return 0.0;
    }
    // a cheap lower bound from nearest neighbours in index order seeds the pruning
    let seed = (1..values.len())
        .map(|i| {
            let d = (points[i] - points[i - 1]).norm();
            if d > 0.0 {
                (values[i] - values[i - 1]).norm() / d.powf(alpha)
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max);
    (0..values.len())
        .into_par_iter()
        .map(|i| {
            let mut best = seed;
            let reach2 = |best: f64| {
                if best > 0.0 {
                    ((norms[i] + sup) / best).powf(2.0 / alpha)
                } else {
                    f64::INFINITY
                }
            };
            let mut limit = reach2(best);
            for j in (i + 1)..values.len() {
                let d2 = (points[i] - points[j]).norm_squared();
                if d2 > limit || d2 == 0.0 {
                    continue;
                }
                let ratio = (values[i] - values[j]).norm() / d2.powf(0.5 * alpha);
                if ratio > best {
                    best = ratio;
                    limit = reach2(best);
                }
            }
            best
        })
        .reduce(|| 0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormDiagnostics {
    /// `L^p_{p(delta+2)}`, which is also `M^p_{0, delta+2}`.
    pub lp_weighted: f64,
    /// `M^p_{1, delta+2}` using the transported vorticity gradient.
    pub m1: f64,
    pub sup: f64,
    /// `C^{0,alpha}` seminorm over marker pairs.
    pub holder: f64,
    /// `|l| + |r|`.
    pub velocity: f64,
    /// `|l| + |r| + sup + holder + lp_weighted`.
    pub triple: f64,
}

pub fn norm_diagnostics(
    markers: &MarkerSet,
    l: &Vec3,
    r: &Vec3,
    params: &NormParams,
) -> Result<NormDiagnostics> {
    params.validate()?;
    let lambda = params.lambda();
    let p = params.p;
    let points: Vec<Vec3> = markers.markers.iter().map(|m| m.x).collect();
    let vols: Vec<f64> = markers.markers.iter().map(|m| m.vol).collect();
    let omega: Vec<Vec3> = markers.markers.iter().map(|m| m.vorticity()).collect();
    let grads: Vec<Mat3> = markers
        .markers
        .iter()
        .map(|m| m.vorticity_gradient())
        .collect();
    let lp_weighted = weighted_lp(&omega, &points, &vols, p, lambda);
    let mut m1 = lp_weighted;
    for i in 0..3 {
        let col: Vec<Vec3> = grads.iter().map(|g| g.column(i).into_owned()).collect();
        m1 += weighted_lp(&col, &points, &vols, p, lambda + 1.0);
    }
    let sup = omega.iter().map(|w| w.norm()).fold(0.0, f64::max);
    let holder = holder_seminorm(&omega, &points, params.alpha);
    let velocity = l.norm() + r.norm();
    Ok(NormDiagnostics {
        lp_weighted,
        m1,
        sup,
        holder,
        velocity,
        triple: velocity + sup + holder + lp_weighted,
    })
}
