use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, Matrix6, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BodyInertia, ControlBasis, SurfaceMesh};
use crate::math::{Mat3, Vec3};
use crate::potential::bem::{BoundarySolver, HarmonicPotential};

pub type Mat6 = Matrix6<f64>;
pub type Vec6 = Vector6<f64>;

/// The Kirchhoff potentials of a body: unit translations `phi_i`, unit
/// rotations `varphi_i` and boundary controls `psi_j`.
#[derive(Debug, Clone)]
pub struct PotentialTables {
    pub solver: Arc<BoundarySolver>,
    pub phi: [HarmonicPotential; 3],
    pub varphi: [HarmonicPotential; 3],
    pub psi: Vec<HarmonicPotential>,
    /// Control channel values at the centroids, one vector per channel.
    pub chi: Vec<Vec<f64>>,
}

/// Solves the `6 + m` Neumann problems with data `n_i`, `(y x n)_i`, `chi_j`.
pub fn kirchhoff_tables(
    mesh: Arc<SurfaceMesh>,
    controls: &ControlBasis,
) -> Result<PotentialTables> {
    let solver = Arc::new(BoundarySolver::new(mesh.clone())?);
    tables_with_solver(solver, controls)
}

pub fn tables_with_solver(
    solver: Arc<BoundarySolver>,
    controls: &ControlBasis,
) -> Result<PotentialTables> {
    let mesh = solver.mesh().clone();
    let normals = mesh.normals();
    let centroids = mesh.centroids();
    let solve_axis = |f: &dyn Fn(usize) -> f64| -> Result<HarmonicPotential> {
        let g: Vec<f64> = (0..mesh.len()).map(f).collect();
        solver.solve(&g)
    };
    let phi = [
        solve_axis(&|k| normals[k].x)?,
        solve_axis(&|k| normals[k].y)?,
        solve_axis(&|k| normals[k].z)?,
    ];
    let varphi = [
        solve_axis(&|k| centroids[k].cross(&normals[k]).x)?,
        solve_axis(&|k| centroids[k].cross(&normals[k]).y)?,
        solve_axis(&|k| centroids[k].cross(&normals[k]).z)?,
    ];
    let mut psi = Vec::with_capacity(controls.m());
    let mut chi = Vec::with_capacity(controls.m());
    for j in 0..controls.m() {
        psi.push(solver.solve(controls.channel(j))?);
        chi.push(controls.channel(j).to_vec());
    }
    Ok(PotentialTables {
        solver,
        phi,
        varphi,
        psi,
        chi,
    })
}

impl PotentialTables {
    pub fn mesh(&self) -> &SurfaceMesh {
        self.solver.mesh()
    }

    pub fn m(&self) -> usize {
        self.psi.len()
    }

    /// Density of `sum l_i phi_i + sum r_i varphi_i + sum w_j psi_j`.
    pub fn combined_density(&self, l: &Vec3, r: &Vec3, w: &[f64]) -> Vec<f64> {
        let n = self.mesh().len();
        let mut out = vec![0.0; n];
        let mut add = |c: f64, pot: &HarmonicPotential| {
            if c != 0.0 {
                for (o, s) in out.iter_mut().zip(&pot.sigma) {
                    *o += c * s;
                }
            }
        };
        for i in 0..3 {
            add(l[i], &self.phi[i]);
            add(r[i], &self.varphi[i]);
        }
        for (j, wj) in w.iter().enumerate() {
            add(*wj, &self.psi[j]);
        }
        out
    }

    /// Potential velocity at the centroids (fluid side).
    pub fn boundary_velocity(&self, l: &Vec3, r: &Vec3, w: &[f64]) -> Vec<Vec3> {
        let n = self.mesh().len();
        let mut out = vec![Vec3::zeros(); n];
        let mut add = |c: f64, pot: &HarmonicPotential| {
            if c != 0.0 {
                for (o, g) in out.iter_mut().zip(&pot.boundary_gradients) {
                    *o += g * c;
                }
            }
        };
        for i in 0..3 {
            add(l[i], &self.phi[i]);
            add(r[i], &self.varphi[i]);
        }
        for (j, wj) in w.iter().enumerate() {
            add(*wj, &self.psi[j]);
        }
        out
    }

    /// Boundary values of the same combination at the centroids.
    pub fn boundary_potential(&self, l: &Vec3, r: &Vec3, w: &[f64]) -> Vec<f64> {
        let n = self.mesh().len();
        let mut out = vec![0.0; n];
        let mut add = |c: f64, pot: &HarmonicPotential| {
            if c != 0.0 {
                for (o, v) in out.iter_mut().zip(&pot.boundary_values) {
                    *o += v * c;
                }
            }
        };
        for i in 0..3 {
            add(l[i], &self.phi[i]);
            add(r[i], &self.varphi[i]);
        }
        for (j, wj) in w.iter().enumerate() {
            add(*wj, &self.psi[j]);
        }
        out
    }

    fn rigid_eval(&self, y: &Vec3) -> [(f64, Vec3); 6] {
        let [a, b, c] = &self.phi;
        let [d, e, f] = &self.varphi;
        self.solver.eval_many(
            [
                &a.sigma[..],
                &b.sigma,
                &c.sigma,
                &d.sigma,
                &e.sigma,
                &f.sigma,
            ],
            y,
        )
    }

    /// Values `(phi_1..3, varphi_1..3)` at an exterior point.
    pub fn rigid_values(&self, y: &Vec3) -> Vec6 {
        let e = self.rigid_eval(y);
        Vec6::from_fn(|i, _| e[i].0)
    }

    /// Gradients of `(phi_1..3, varphi_1..3)` at an exterior point.
    pub fn rigid_gradients(&self, y: &Vec3) -> [Vec3; 6] {
        self.rigid_eval(y).map(|e| e.1)
    }

    /// Values of the control potentials `psi_j` at an exterior point.
    pub fn control_values(&self, y: &Vec3) -> Vec<f64> {
        self.psi.iter().map(|p| p.value(&self.solver, y)).collect()
    }
}

/// `sum l_i grad phi_i + sum r_i grad varphi_i + sum w_j grad psi_j` at `y`.
/// Rejects points inside or on the body.
pub fn eval_potential_velocity(
    tables: &PotentialTables,
    l: &Vec3,
    r: &Vec3,
    w: &[f64],
    y: &Vec3,
) -> Result<Vec3> {
    let d = tables.mesh().signed_distance(y);
    if !(d > 0.0) {
        return Err(Error::NotExterior {
            point: [y.x, y.y, y.z],
            distance: d,
        });
    }
    let sigma = tables.combined_density(l, r, w);
    Ok(tables.solver.eval(&sigma, y).1)
}

/// Added-mass and control-coupling matrices of the potential model.
#[derive(Debug, Clone, PartialEq)]
pub struct AddedMassSet {
    pub m: Mat3,
    pub j: Mat3,
    pub n: Mat3,
    /// `C = -(C^M; C^J)`, a 6 x m matrix.
    pub c: DMatrix<f64>,
    pub c_m: DMatrix<f64>,
    pub c_j: DMatrix<f64>,
    pub l_m: Vec<Mat3>,
    pub l_j: Vec<Mat3>,
    pub r_m: Vec<Mat3>,
    pub r_j: Vec<Mat3>,
    /// `W^M_p`, each 3 x m.
    pub w_m: Vec<DMatrix<f64>>,
    pub w_j: Vec<DMatrix<f64>>,
    /// The full 6 x 6 generalized inertia, symmetric positive definite.
    pub jcal: Mat6,
    pub jcal_inv: Mat6,
    pub mass: f64,
    pub inertia: Mat3,
    /// `|| raw - raw^T || / || raw ||` of the 6 x 6 matrix before averaging.
    pub asymmetry: f64,
    pub mesh_hash: String,
}

impl AddedMassSet {
    /// A control-free set from given added-mass blocks.
    pub fn from_blocks(mass: f64, inertia: Mat3, m: Mat3, j: Mat3, n: Mat3) -> Result<Self> {
        let mut jcal = Mat6::zeros();
        jcal.fixed_view_mut::<3, 3>(0, 0)
            .copy_from(&(Mat3::identity() * mass + m));
        jcal.fixed_view_mut::<3, 3>(0, 3).copy_from(&n);
        jcal.fixed_view_mut::<3, 3>(3, 0).copy_from(&n.transpose());
        jcal.fixed_view_mut::<3, 3>(3, 3).copy_from(&(inertia + j));
        if (jcal - jcal.transpose()).norm() > 1e-12 * jcal.norm() {
            return Err(Error::InvalidInput(
                "added-mass blocks are not symmetric".into(),
            ));
        }
        let min_eig = jcal.symmetric_eigenvalues().min();
        if !(min_eig > 0.0) {
            return Err(Error::NotPositiveDefinite { min_eig });
        }
        let jcal_inv = jcal
            .cholesky()
            .ok_or(Error::NotPositiveDefinite { min_eig })?
            .inverse();
        Ok(AddedMassSet {
            m,
            j,
            n,
            c: DMatrix::zeros(6, 0),
            c_m: DMatrix::zeros(3, 0),
            c_j: DMatrix::zeros(3, 0),
            l_m: Vec::new(),
            l_j: Vec::new(),
            r_m: Vec::new(),
            r_j: Vec::new(),
            w_m: Vec::new(),
            w_j: Vec::new(),
            jcal,
            jcal_inv,
            mass,
            inertia,
            asymmetry: 0.0,
            mesh_hash: String::new(),
        })
    }

    pub fn controls(&self) -> usize {
        self.c.ncols()
    }

    /// Smallest eigenvalue of the generalized inertia.
    pub fn min_eigenvalue(&self) -> f64 {
        self.jcal.symmetric_eigenvalues().min()
    }
}

/// Boundary-form assembly of `M, J, N, C, L, R, W` and the generalized inertia.
pub fn assemble_matrices(
    tables: &PotentialTables,
    controls: &ControlBasis,
    body: &BodyInertia,
) -> Result<AddedMassSet> {
    let mesh = tables.mesh();
    if controls.m() != tables.m() {
        return Err(Error::InvalidInput(format!(
            "control basis has {} channels but tables have {}",
            controls.m(),
            tables.m()
        )));
    }
    let areas = mesh.areas();
    let normals = mesh.normals();
    let centroids = mesh.centroids();
    let rot_data: Vec<Vec3> = centroids
        .iter()
        .zip(normals)
        .map(|(c, n)| c.cross(n))
        .collect();
    let bi = |f: &dyn Fn(usize) -> f64| -> f64 { (0..mesh.len()).map(|k| f(k) * areas[k]).sum() };

    let mut m_raw = Mat3::zeros();
    let mut j_raw = Mat3::zeros();
    let mut n_a = Mat3::zeros();
    let mut n_b = Mat3::zeros();
    for i in 0..3 {
        for k in 0..3 {
            m_raw[(i, k)] = bi(&|q| normals[q][i] * tables.phi[k].boundary_values[q]);
            j_raw[(i, k)] = bi(&|q| rot_data[q][i] * tables.varphi[k].boundary_values[q]);
            n_a[(i, k)] = bi(&|q| normals[q][i] * tables.varphi[k].boundary_values[q]);
            n_b[(i, k)] = bi(&|q| tables.phi[i].boundary_values[q] * rot_data[q][k]);
        }
    }
    let mc = controls.m();
    let mut c_m = DMatrix::zeros(3, mc);
    let mut c_j = DMatrix::zeros(3, mc);
    for jj in 0..mc {
        for i in 0..3 {
            c_m[(i, jj)] = bi(&|q| normals[q][i] * tables.psi[jj].boundary_values[q]);
            c_j[(i, jj)] = bi(&|q| rot_data[q][i] * tables.psi[jj].boundary_values[q]);
        }
    }
    let mut c = DMatrix::zeros(6, mc);
    for jj in 0..mc {
        for i in 0..3 {
            c[(i, jj)] = -c_m[(i, jj)];
            c[(i + 3, jj)] = -c_j[(i, jj)];
        }
    }
    let mut l_m = Vec::with_capacity(mc);
    let mut l_j = Vec::with_capacity(mc);
    let mut r_m = Vec::with_capacity(mc);
    let mut r_j = Vec::with_capacity(mc);
    let mut w_m = Vec::with_capacity(mc);
    let mut w_j = Vec::with_capacity(mc);
    for p in 0..mc {
        let chi = controls.channel(p);
        let mut lm = Mat3::zeros();
        let mut lj = Mat3::zeros();
        let mut rm = Mat3::zeros();
        let mut rj = Mat3::zeros();
        for jcol in 0..3 {
            let (sm, sj) = moment_pair(mesh, &tables.phi[jcol].boundary_gradients, chi);
            let (tm, tj) = moment_pair(mesh, &tables.varphi[jcol].boundary_gradients, chi);
            for i in 0..3 {
                lm[(i, jcol)] = sm[i];
                lj[(i, jcol)] = sj[i];
                rm[(i, jcol)] = tm[i];
                rj[(i, jcol)] = tj[i];
            }
        }
        let mut wm = DMatrix::zeros(3, mc);
        let mut wj = DMatrix::zeros(3, mc);
        for jcol in 0..mc {
            let (sm, sj) = moment_pair(mesh, &tables.psi[jcol].boundary_gradients, chi);
            for i in 0..3 {
                wm[(i, jcol)] = sm[i];
                wj[(i, jcol)] = sj[i];
            }
        }
        l_m.push(lm);
        l_j.push(lj);
        r_m.push(rm);
        r_j.push(rj);
        w_m.push(wm);
        w_j.push(wj);
    }

    let mut raw = Mat6::zeros();
    raw.fixed_view_mut::<3, 3>(0, 0).copy_from(&m_raw);
    raw.fixed_view_mut::<3, 3>(0, 3).copy_from(&n_a);
    raw.fixed_view_mut::<3, 3>(3, 0).copy_from(&n_b.transpose());
    raw.fixed_view_mut::<3, 3>(3, 3).copy_from(&j_raw);
    let asymmetry = (raw - raw.transpose()).norm() / raw.norm().max(f64::MIN_POSITIVE);
    let sym = (raw + raw.transpose()) * 0.5;
    let m = sym.fixed_view::<3, 3>(0, 0).into_owned();
    let n = sym.fixed_view::<3, 3>(0, 3).into_owned();
    let j = sym.fixed_view::<3, 3>(3, 3).into_owned();

    let mut jcal = Mat6::zeros();
    jcal.fixed_view_mut::<3, 3>(0, 0)
        .copy_from(&(Mat3::identity() * body.mass + m));
    jcal.fixed_view_mut::<3, 3>(0, 3).copy_from(&n);
    jcal.fixed_view_mut::<3, 3>(3, 0).copy_from(&n.transpose());
    jcal.fixed_view_mut::<3, 3>(3, 3)
        .copy_from(&(body.inertia + j));
    let min_eig = jcal.symmetric_eigenvalues().min();
    if !(min_eig > 0.0) {
        return Err(Error::NotPositiveDefinite { min_eig });
    }
    let jcal_inv = jcal
        .cholesky()
        .ok_or(Error::NotPositiveDefinite { min_eig })?
        .inverse();
    Ok(AddedMassSet {
        m,
        j,
        n,
        c,
        c_m,
        c_j,
        l_m,
        l_j,
        r_m,
        r_j,
        w_m,
        w_j,
        jcal,
        jcal_inv,
        mass: body.mass,
        inertia: body.inertia,
        asymmetry,
        mesh_hash: mesh.hash(),
    })
}

/// `(oint grad f chi, oint (y x grad f) chi)` from centroid gradients.
fn moment_pair(mesh: &SurfaceMesh, grads: &[Vec3], chi: &[f64]) -> (Vec3, Vec3) {
    let mut a = Vec3::zeros();
    let mut b = Vec3::zeros();
    for k in 0..mesh.len() {
        if chi[k] == 0.0 {
            continue;
        }
        let wgt = chi[k] * mesh.areas()[k];
        a += grads[k] * wgt;
        b += mesh.centroids()[k].cross(&grads[k]) * wgt;
    }
    (a, b)
}

/// Row-major JSON image of an [`AddedMassSet`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AddedMassDoc {
    pub mesh_hash: String,
    pub controls: usize,
    pub mass: f64,
    pub inertia: Vec<Vec<f64>>,
    #[serde(rename = "M")]
    pub m: Vec<Vec<f64>>,
    #[serde(rename = "J")]
    pub j: Vec<Vec<f64>>,
    #[serde(rename = "N")]
    pub n: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
    #[serde(rename = "CM")]
    pub c_m: Vec<Vec<f64>>,
    #[serde(rename = "CJ")]
    pub c_j: Vec<Vec<f64>>,
    #[serde(rename = "LM")]
    pub l_m: Vec<Vec<Vec<f64>>>,
    #[serde(rename = "LJ")]
    pub l_j: Vec<Vec<Vec<f64>>>,
    #[serde(rename = "RM")]
    pub r_m: Vec<Vec<Vec<f64>>>,
    #[serde(rename = "RJ")]
    pub r_j: Vec<Vec<Vec<f64>>>,
    #[serde(rename = "WM")]
    pub w_m: Vec<Vec<Vec<f64>>>,
    #[serde(rename = "WJ")]
    pub w_j: Vec<Vec<Vec<f64>>>,
    pub jcal: Vec<Vec<f64>>,
    pub asymmetry: f64,
}

fn rows<R: nalgebra::Dim, C: nalgebra::Dim, S: nalgebra::RawStorage<f64, R, C>>(
    m: &nalgebra::Matrix<f64, R, C, S>,
) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn dmatrix(rows: &[Vec<f64>], nrows: usize, ncols: usize, field: &str) -> Result<DMatrix<f64>> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::config(
            field,
            format!("expected a {nrows} x {ncols} matrix"),
        ));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn mat3(rows: &[Vec<f64>], field: &str) -> Result<Mat3> {
    let d = dmatrix(rows, 3, 3, field)?;
    Ok(Mat3::from_fn(|i, j| d[(i, j)]))
}

impl AddedMassSet {
    pub fn to_doc(&self) -> AddedMassDoc {
        AddedMassDoc {
            mesh_hash: self.mesh_hash.clone(),
            controls: self.controls(),
            mass: self.mass,
            inertia: rows(&self.inertia),
            m: rows(&self.m),
            j: rows(&self.j),
            n: rows(&self.n),
            c: rows(&self.c),
            c_m: rows(&self.c_m),
            c_j: rows(&self.c_j),
            l_m: self.l_m.iter().map(rows).collect(),
            l_j: self.l_j.iter().map(rows).collect(),
            r_m: self.r_m.iter().map(rows).collect(),
            r_j: self.r_j.iter().map(rows).collect(),
            w_m: self.w_m.iter().map(rows).collect(),
            w_j: self.w_j.iter().map(rows).collect(),
            jcal: rows(&self.jcal),
            asymmetry: self.asymmetry,
        }
    }

    pub fn from_doc(doc: &AddedMassDoc) -> Result<Self> {
        let mc = doc.controls;
        let list3 = |v: &[Vec<Vec<f64>>], f: &str| -> Result<Vec<Mat3>> {
            if v.len() != mc {
                return Err(Error::config(f, format!("expected {mc} matrices")));
            }
            v.iter().map(|r| mat3(r, f)).collect()
        };
        let listw = |v: &[Vec<Vec<f64>>], f: &str| -> Result<Vec<DMatrix<f64>>> {
            if v.len() != mc {
                return Err(Error::config(f, format!("expected {mc} matrices")));
            }
            v.iter().map(|r| dmatrix(r, 3, mc, f)).collect()
        };
        let j6 = dmatrix(&doc.jcal, 6, 6, "jcal")?;
        let jcal = Mat6::from_fn(|i, j| j6[(i, j)]);
        let min_eig = jcal.symmetric_eigenvalues().min();
        let jcal_inv = jcal
            .cholesky()
            .ok_or(Error::NotPositiveDefinite { min_eig })?
            .inverse();
        Ok(AddedMassSet {
            m: mat3(&doc.m, "M")?,
            j: mat3(&doc.j, "J")?,
            n: mat3(&doc.n, "N")?,
            c: dmatrix(&doc.c, 6, mc, "C")?,
            c_m: dmatrix(&doc.c_m, 3, mc, "CM")?,
            c_j: dmatrix(&doc.c_j, 3, mc, "CJ")?,
            l_m: list3(&doc.l_m, "LM")?,
            l_j: list3(&doc.l_j, "LJ")?,
            r_m: list3(&doc.r_m, "RM")?,
            r_j: list3(&doc.r_j, "RJ")?,
            w_m: listw(&doc.w_m, "WM")?,
            w_j: listw(&doc.w_j, "WJ")?,
            jcal,
            jcal_inv,
            mass: doc.mass,
            inertia: mat3(&doc.inertia, "inertia")?,
            asymmetry: doc.asymmetry,
            mesh_hash: doc.mesh_hash.clone(),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_doc())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        AddedMassSet::from_doc(&serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    /// Loads a cached set, rejecting it if it was built for another mesh.
    pub fn load(path: &Path, expected_hash: Option<&str>) -> Result<Self> {
        let set = AddedMassSet::from_json(&std::fs::read_to_string(path)?)?;
        if let Some(h) = expected_hash {
            if set.mesh_hash != h {
                return Err(Error::config(
                    "mesh_hash",
                    format!(
                        "cached matrices belong to mesh {}, expected {h}",
                        set.mesh_hash
                    ),
                ));
            }
        }
        Ok(set)
    }
}
