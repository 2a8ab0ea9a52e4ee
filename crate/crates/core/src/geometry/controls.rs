use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::SurfaceMesh;
use crate::math::Vec3;

/// One smooth lobe of a control channel: panels whose centroid lies within
/// `radius` of `center` receive `amplitude * bump(dist / radius)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lobe {
    pub center: [f64; 3],
    pub radius: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
}

fn one() -> f64 {
    1.0
}

/// A control channel `chi_j`: one or more lobes sharing an input `w_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchSpec {
    pub lobes: Vec<Lobe>,
}

impl PatchSpec {
    pub fn single(center: Vec3, radius: f64) -> Self {
        PatchSpec {
            lobes: vec![Lobe {
                center: center.into(),
                radius,
                amplitude: 1.0,
            }],
        }
    }
}

/// Radial profile of each lobe.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BumpProfile {
    /// `(1 - s^2)^3` on `s < 1`, twice continuously differentiable.
    #[default]
    C2Bump,
    /// Indicator of the disc, used only as a degenerate test profile.
    Flat,
}

impl BumpProfile {
    pub fn eval(&self, s: f64) -> f64 {
        if s >= 1.0 {
            return 0.0;
        }
        match self {
            BumpProfile::C2Bump => (1.0 - s * s).powi(3),
            BumpProfile::Flat => 1.0,
        }
    }
}

/// Per-panel samples of the mean-free control functions `chi_j`.
#[derive(Debug, Clone)]
pub struct ControlBasis {
    values: Vec<Vec<f64>>,
    specs: Vec<PatchSpec>,
    raw_means: Vec<f64>,
}

impl ControlBasis {
    pub fn empty() -> Self {
        ControlBasis {
            values: Vec::new(),
            specs: Vec::new(),
            raw_means: Vec::new(),
        }
    }

    pub fn m(&self) -> usize {
        self.values.len()
    }

    /// Values of channel `j` at the panel centroids.
    pub fn channel(&self, j: usize) -> &[f64] {
        &self.values[j]
    }

    pub fn specs(&self) -> &[PatchSpec] {
        &self.specs
    }

    /// Area-weighted mean of each channel before the mean was removed.
    pub fn raw_means(&self) -> &[f64] {
        &self.raw_means
    }

    /// `sum_j w_j chi_j` on every panel.
    pub fn combine(&self, w: &[f64], panels: usize) -> Vec<f64> {
        let mut out = vec![0.0; panels];
        for (j, wj) in w.iter().enumerate() {
            for (o, c) in out.iter_mut().zip(&self.values[j]) {
                *o += wj * c;
            }
        }
        out
    }

    /// Discrete integral `sum_k chi_j(k) area_k` of each channel.
    pub fn integrals(&self, mesh: &SurfaceMesh) -> Vec<f64> {
        self.values
            .iter()
            .map(|c| c.iter().zip(mesh.areas()).map(|(x, a)| x * a).sum())
            .collect()
    }
}

/// Samples every channel on the mesh and removes its discrete mean so that
/// `sum_k chi_j(k) area_k = 0` holds to rounding.
pub fn make_control_basis(
    mesh: &SurfaceMesh,
    regions: &[PatchSpec],
    profile: BumpProfile,
) -> Result<ControlBasis> {
    let mut owner: Vec<Option<usize>> = vec![None; mesh.len()];
    let total_area = mesh.total_area();
    let mut values = Vec::with_capacity(regions.len());
    let mut raw_means = Vec::with_capacity(regions.len());
    for (j, spec) in regions.iter().enumerate() {
        if spec.lobes.is_empty() {
            return Err(Error::ControlBasis(format!("channel {j} has no lobes")));
        }
        let mut chi = vec![0.0; mesh.len()];
        for (li, lobe) in spec.lobes.iter().enumerate() {
            if !(lobe.radius > 0.0) {
                return Err(Error::ControlBasis(format!(
                    "channel {j} lobe {li}: radius must be positive"
                )));
            }
            let center = Vec3::from(lobe.center);
            let mut hit = 0usize;
            for (k, c) in mesh.centroids().iter().enumerate() {
                let s = (c - center).norm() / lobe.radius;
                if s < 1.0 {
                    if let Some(other) = owner[k] {
                        if other != j * 1000 + li {
                            return Err(Error::ControlBasis(format!(
                                "channel {j} lobe {li} overlaps another region at panel {k}"
                            )));
                        }
                    }
                    owner[k] = Some(j * 1000 + li);
                    let v = profile.eval(s);
                    if v > 0.0 {
                        hit += 1;
                    }
                    chi[k] += lobe.amplitude * v;
                }
            }
            if hit == 0 {
                return Err(Error::ControlBasis(format!(
                    "channel {j} lobe {li} covers no panel"
                )));
            }
            if hit == mesh.len() {
                return Err(Error::ControlBasis(format!(
                    "channel {j} lobe {li} covers the whole surface"
                )));
            }
        }
        let mean = chi
            .iter()
            .zip(mesh.areas())
            .map(|(x, a)| x * a)
            .sum::<f64>()
            / total_area;
        for x in chi.iter_mut() {
            *x -= mean;
        }
        // second pass removes the rounding residue of the first
        let residue = chi
            .iter()
            .zip(mesh.areas())
            .map(|(x, a)| x * a)
            .sum::<f64>()
            / total_area;
        for x in chi.iter_mut() {
            *x -= residue;
        }
        raw_means.push(mean);
        values.push(chi);
    }
    Ok(ControlBasis {
        values,
        specs: regions.to_vec(),
        raw_means,
    })
}

/// Six single-lobe channels centred on the `+-x, +-y, +-z` points of the
/// surface, each of the given angular radius fraction of the mean radius.
pub fn axis_patches(mesh: &SurfaceMesh, radius: f64) -> Vec<PatchSpec> {
    let mut specs = Vec::new();
    for axis in 0..3 {
        for sign in [1.0, -1.0] {
            let mut dir = Vec3::zeros();
            dir[axis] = sign;
            // surface point along the axis: farthest vertex in that direction
            let reach = mesh
                .vertices()
                .iter()
                .map(|v| v.dot(&dir))
                .fold(f64::MIN, f64::max);
            specs.push(PatchSpec::single(dir * reach, radius));
        }
    }
    specs
}
