//! JSON experiment configuration. One file describes one experiment; every
//! section except `geometry` has defaults.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::body::Body;
use crate::control::{FullOptions, SteeringProblem};
use crate::coupled::{PicardOptions, ResidualThresholds};
use crate::error::{Error, Result};
use crate::geometry::{
    axis_patches, build_ellipsoid_mesh, build_sphere_mesh, make_control_basis, BodyInertia,
    BumpProfile, ControlBasis, Density, PatchSpec, SurfaceMesh,
};
use crate::math::{Mat3, RigidState, Vec3};
use crate::potential::AddedMassSet;
use crate::rigid::ControlSignal;
use crate::vorticity::{seed_markers, MarkerSet, NormParams, SeedSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Potentials,
    Simulate,
    Steer,
    Verify,
    ScaleStudy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeometrySpec {
    Sphere {
        radius: f64,
        refinement: u32,
    },
    Ellipsoid {
        semiaxes: [f64; 3],
        refinement: u32,
    },
    /// An OFF file, relative paths resolved against the config file.
    Off {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlsSpec {
    /// Explicit channels; six axis patches when absent.
    pub patches: Option<Vec<PatchSpec>>,
    pub axis_radius: f64,
    pub profile: BumpProfile,
}

impl Default for ControlsSpec {
    fn default() -> Self {
        ControlsSpec {
            patches: None,
            axis_radius: 0.6,
            profile: BumpProfile::C2Bump,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InertiaSpec {
    Density {
        density: Density,
    },
    Explicit {
        mass: f64,
        inertia: [[f64; 3]; 3],
        volume: f64,
    },
}

impl Default for InertiaSpec {
    fn default() -> Self {
        InertiaSpec::Density {
            density: Density::Uniform(1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VorticitySpec {
    pub seed: SeedSpec,
    pub spacing: f64,
    /// Smallest allowed distance from a seeded marker to the body.
    pub min_distance: f64,
    /// Blob core radius; twice the spacing when absent.
    pub blob_epsilon: Option<f64>,
}

impl Default for VorticitySpec {
    fn default() -> Self {
        VorticitySpec {
            seed: SeedSpec::None,
            spacing: 0.125,
            min_distance: 0.1,
            blob_epsilon: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StateSpec {
    pub h: [f64; 3],
    pub q: [f64; 3],
    pub l: [f64; 3],
    pub r: [f64; 3],
}

impl StateSpec {
    pub fn to_state(&self, field: &str) -> Result<RigidState> {
        RigidState::new(self.h.into(), self.q.into(), self.l.into(), self.r.into())
            .map_err(|e| Error::config(field, e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlSpec {
    pub intervals: usize,
    /// Spline coefficients, channel by channel; zero control when empty.
    pub coefficients: Vec<f64>,
}

impl Default for ControlSpec {
    fn default() -> Self {
        ControlSpec {
            intervals: 4,
            coefficients: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// The closed-form potential model; vorticity is ignored.
    Potential,
    #[default]
    Timestep,
    Picard,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    pub method: Method,
    pub dt: f64,
    pub horizon: f64,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    pub norm: NormParams,
}

impl Default for SolverSpec {
    fn default() -> Self {
        SolverSpec {
            method: Method::Timestep,
            dt: 1.0 / 64.0,
            horizon: 0.5,
            picard_tol: 1e-8,
            picard_max_iter: 30,
            norm: NormParams::default(),
        }
    }
}

impl SolverSpec {
    pub fn picard(&self) -> PicardOptions {
        PicardOptions {
            dt: self.dt,
            tol: self.picard_tol,
            max_iter: self.picard_max_iter,
            norm: self.norm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SteerSpec {
    pub target: StateSpec,
    /// Largest physical horizon; the solver horizon when absent.
    pub t0: Option<f64>,
    pub options: FullOptions,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySpec {
    /// Exterior sample points; a fixed spiral when absent.
    pub sample_points: Option<Vec<[f64; 3]>>,
    /// Grid times; three interior times when absent.
    pub times: Option<Vec<f64>>,
    pub thresholds: ResidualThresholds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScaleStudySpec {
    /// Multipliers of the seed vorticity.
    pub factors: Vec<f64>,
}

impl Default for ScaleStudySpec {
    fn default() -> Self {
        ScaleStudySpec {
            factors: vec![1.0, 0.5, 0.25],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub kind: Option<ExperimentKind>,
    pub geometry: GeometrySpec,
    #[serde(default)]
    pub controls: ControlsSpec,
    #[serde(default)]
    pub inertia: InertiaSpec,
    #[serde(default)]
    pub vorticity: VorticitySpec,
    #[serde(default)]
    pub initial: StateSpec,
    #[serde(default)]
    pub control: ControlSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub steer: SteerSpec,
    #[serde(default)]
    pub verify: VerifySpec,
    #[serde(default)]
    pub scale_study: ScaleStudySpec,
    /// Output directory used when none is given on the command line.
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Directory of the config file, for relative paths.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn positive(field: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::config(
            field,
            format!("must be positive and finite, got {x}"),
        ))
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::config("<document>", e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::config("--config", format!("cannot read {}: {e}", path.display()))
        })?;
        let mut config = ExperimentConfig::from_json(&text)?;
        config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        match &self.geometry {
            GeometrySpec::Sphere { radius, .. } => positive("geometry.radius", *radius)?,
            GeometrySpec::Ellipsoid { semiaxes, .. } => {
                for s in semiaxes {
                    positive("geometry.semiaxes", *s)?;
                }
            }
            GeometrySpec::Off { .. } => {}
        }
        if self.controls.patches.is_none() {
            positive("controls.axis_radius", self.controls.axis_radius)?;
        }
        positive("vorticity.spacing", self.vorticity.spacing)?;
        if !(self.vorticity.min_distance >= 0.0) {
            return Err(Error::config(
                "vorticity.min_distance",
                "must be non-negative",
            ));
        }
        if let Some(e) = self.vorticity.blob_epsilon {
            positive("vorticity.blob_epsilon", e)?;
        }
        self.vorticity
            .seed
            .validate()
            .map_err(|e| Error::config("vorticity.seed", e.to_string()))?;
        self.initial.to_state("initial")?;
        self.steer.target.to_state("steer.target")?;
        if self.control.intervals == 0 {
            return Err(Error::config("control.intervals", "must be at least 1"));
        }
        positive("solver.dt", self.solver.dt)?;
        positive("solver.horizon", self.solver.horizon)?;
        positive("solver.picard_tol", self.solver.picard_tol)?;
        if self.solver.picard_max_iter == 0 {
            return Err(Error::config(
                "solver.picard_max_iter",
                "must be at least 1",
            ));
        }
        self.solver
            .norm
            .validate()
            .map_err(|e| Error::config("solver.norm", e.to_string()))?;
        if let Some(t0) = self.steer.t0 {
            positive("steer.t0", t0)?;
        }
        let o = &self.steer.options;
        positive("steer.options.retarget.eta1", o.retarget.eta1)?;
        positive("steer.options.retarget.tol", o.retarget.tol)?;
        positive("steer.options.retarget.dt", o.retarget.dt)?;
        positive("steer.options.final_tol", o.final_tol)?;
        if !(o.retarget.eps_max > 0.0 && o.retarget.eps_max < 1.0) {
            return Err(Error::config(
                "steer.options.retarget.eps_max",
                "must lie in (0, 1)",
            ));
        }
        if !(o.lambda_min > 0.0 && o.lambda_min <= 1.0) {
            return Err(Error::config(
                "steer.options.lambda_min",
                "must lie in (0, 1]",
            ));
        }
        let th = &self.verify.thresholds;
        for (name, x) in [
            ("verify.thresholds.momentum", th.momentum),
            ("verify.thresholds.divergence", th.divergence),
            ("verify.thresholds.slip", th.slip),
            ("verify.thresholds.transport", th.transport),
        ] {
            positive(name, x)?;
        }
        if self.scale_study.factors.is_empty() {
            return Err(Error::config(
                "scale_study.factors",
                "needs at least one factor",
            ));
        }
        for f in &self.scale_study.factors {
            positive("scale_study.factors", *f)?;
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub fn build_mesh(&self) -> Result<SurfaceMesh> {
        match &self.geometry {
            GeometrySpec::Sphere { radius, refinement } => build_sphere_mesh(*radius, *refinement),
            GeometrySpec::Ellipsoid {
                semiaxes,
                refinement,
            } => build_ellipsoid_mesh(&(*semiaxes).into(), *refinement),
            GeometrySpec::Off { path } => SurfaceMesh::read_off(&self.base_dir.join(path)),
        }
    }

    pub fn build_controls(&self, mesh: &SurfaceMesh) -> Result<ControlBasis> {
        let specs = match &self.controls.patches {
            Some(p) => p.clone(),
            None => axis_patches(mesh, self.controls.axis_radius),
        };
        make_control_basis(mesh, &specs, self.controls.profile)
    }

    pub fn build_inertia(&self, mesh: &SurfaceMesh) -> Result<BodyInertia> {
        match &self.inertia {
            InertiaSpec::Density { density } => BodyInertia::from_density(mesh, density.clone()),
            InertiaSpec::Explicit {
                mass,
                inertia,
                volume,
            } => BodyInertia::new(*mass, Mat3::from_fn(|i, j| inertia[i][j]), *volume),
        }
    }

    /// Key of the matrices of this body: mesh, controls and inertia.
    pub fn body_key(&self, mesh: &SurfaceMesh) -> String {
        let parts =
            serde_json::to_string(&(&self.controls, &self.inertia)).expect("config serializes");
        hex::encode(Sha256::digest(
            format!("{}|{parts}", mesh.hash()).as_bytes(),
        ))
    }

    /// Assembles the body, reusing matrices from `cache` when present there.
    pub fn build_body(&self, cache: Option<&Path>) -> Result<Body> {
        let mesh = Arc::new(self.build_mesh()?);
        let controls = self.build_controls(&mesh)?;
        let inertia = self.build_inertia(&mesh)?;
        let Some(dir) = cache else {
            return Body::assemble(mesh, controls, inertia);
        };
        let file = dir.join(format!("added_mass_{}.json", &self.body_key(&mesh)[..16]));
        if file.exists() {
            log::info!("reusing cached matrices {}", file.display());
            let mats = AddedMassSet::load(&file, Some(&mesh.hash()))?;
            return Body::with_matrices(mesh, controls, inertia, mats);
        }
        let body = Body::assemble(mesh, controls, inertia)?;
        std::fs::create_dir_all(dir)?;
        body.mats.save(&file)?;
        Ok(body)
    }

    pub fn seed(&self, body: &Body) -> Result<MarkerSet> {
        let v = &self.vorticity;
        if v.seed.is_none() {
            return Ok(MarkerSet::empty(v.spacing));
        }
        let mut markers = seed_markers(&v.seed, v.spacing, &body.mesh, v.min_distance)?;
        if let Some(e) = v.blob_epsilon {
            markers.epsilon = e;
        }
        Ok(markers)
    }

    pub fn control_signal(&self, channels: usize) -> Result<ControlSignal> {
        let c = &self.control;
        if c.coefficients.is_empty() {
            return ControlSignal::zero(channels, c.intervals, self.solver.horizon);
        }
        ControlSignal::new(
            channels,
            c.intervals,
            self.solver.horizon,
            c.coefficients.clone(),
        )
        .map_err(|e| Error::config("control.coefficients", e.to_string()))
    }

    pub fn steering_problem(&self) -> Result<SteeringProblem> {
        SteeringProblem::new(
            self.initial.to_state("initial")?,
            self.steer.target.to_state("steer.target")?,
            self.solver.horizon,
            self.control.intervals,
        )
    }

    /// Configured residual sample points, or a spiral of exterior points at
    /// 1.3 to 2.4 times the body size, kept clear of the seeded vorticity.
    pub fn sample_points(&self, mesh: &SurfaceMesh) -> Vec<Vec3> {
        if let Some(p) = &self.verify.sample_points {
            return p.iter().map(|x| Vec3::from(*x)).collect();
        }
        let size = mesh.vertices().iter().map(|v| v.norm()).fold(0.0, f64::max);
        let support = self.vorticity.seed.support();
        (0..12)
            .map(|k| {
                let a = k as f64 * 0.9;
                Vec3::new(a.cos(), a.sin(), (1.3 * a).cos()).normalize()
                    * (size * (1.3 + 0.1 * k as f64))
            })
            .filter(|p| match support {
                Some((c, r)) => (p - c).norm() > r + 2.0 * self.vorticity.spacing,
                None => true,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str =
        r#"{ "geometry": { "shape": "sphere", "radius": 1.0, "refinement": 1 } }"#;

    #[test]
    fn minimal_config_takes_defaults() {
        let c = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(c.solver, SolverSpec::default());
        assert_eq!(c.control.intervals, 4);
        assert!(c.vorticity.seed.is_none());
    }

    #[test]
    fn errors_name_the_field() {
        let bad = r#"{ "geometry": { "shape": "sphere", "radius": 1.0, "refinement": 1 }, "solver": { "dt": -1 } }"#;
        match ExperimentConfig::from_json(bad) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "solver.dt"),
            other => panic!("{other:?}"),
        }
        let window = r#"{ "geometry": { "shape": "sphere", "radius": 1.0, "refinement": 1 },
            "solver": { "norm": { "p": 5.0 } } }"#;
        match ExperimentConfig::from_json(window) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "solver.norm"),
            other => panic!("{other:?}"),
        }
        let unknown = r#"{ "geometry": { "shape": "sphere", "radius": 1.0, "refinement": 1 }, "solver": { "dtt": 1 } }"#;
        assert!(matches!(
            ExperimentConfig::from_json(unknown),
            Err(Error::Config { .. })
        ));
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::from_json(MINIMAL).unwrap();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.solver.dt = 0.01;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn nested_defaults_fill_partial_sections() {
        let text = r#"{ "geometry": { "shape": "ellipsoid", "semiaxes": [2, 1, 1], "refinement": 1 },
            "steer": { "options": { "retarget": { "eta1": 0.2 } } } }"#;
        let c = ExperimentConfig::from_json(text).unwrap();
        assert_eq!(c.steer.options.retarget.eta1, 0.2);
        assert_eq!(c.steer.options.retarget.eps_max, 0.5);
        assert_eq!(
            c.steer.options.lambda_min,
            FullOptions::default().lambda_min
        );
    }
}
