//! Time scaling `b(t) = b^l(t / l) / l`, `w(t) = w^l(t / l) / l`,
//! `omega_0^l = l omega_0`, with `l` the factor `lambda`.

use serde::{Deserialize, Serialize};

use crate::coupled::{CoupledSolution, CoupledState};
use crate::error::{Error, Result};
use crate::math::RigidState;
use crate::rigid::{ControlSignal, PotentialTrajectory};
use crate::vorticity::MarkerSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeScaling {
    pub lambda: f64,
}

/// Data of a problem after scaling, ready to be solved on the long horizon.
#[derive(Debug, Clone)]
pub struct ScaledData {
    pub scaling: TimeScaling,
    pub state0: RigidState,
    pub seed: MarkerSet,
    pub control: ControlSignal,
}

pub fn time_scale(
    state0: &RigidState,
    seed: &MarkerSet,
    control: &ControlSignal,
    lambda: f64,
) -> Result<ScaledData> {
    let scaling = TimeScaling::new(lambda)?;
    Ok(ScaledData {
        state0: scaling.scale_state(state0),
        seed: scaling.scale_seed(seed),
        control: scaling.scale_control(control)?,
        scaling,
    })
}

impl TimeScaling {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "scaling factor must lie in (0, 1], got {lambda}"
            )));
        }
        Ok(TimeScaling { lambda })
    }

    /// `(a, lambda b)`.
    pub fn scale_state(&self, s: &RigidState) -> RigidState {
        RigidState {
            l: s.l * self.lambda,
            r: s.r * self.lambda,
            ..*s
        }
    }

    pub fn unscale_state(&self, s: &RigidState) -> RigidState {
        RigidState {
            l: s.l / self.lambda,
            r: s.r / self.lambda,
            ..*s
        }
    }

    pub fn scale_seed(&self, seed: &MarkerSet) -> MarkerSet {
        seed.scaled(self.lambda)
    }

    /// `w^l(s) = l w(l s)` on the horizon `T / l`.
    pub fn scale_control(&self, c: &ControlSignal) -> Result<ControlSignal> {
        c.rescaled(self.lambda, 1.0 / self.lambda)
    }

    /// `w(t) = w^l(t / l) / l` on the horizon `l T`.
    pub fn unscale_control(&self, c: &ControlSignal) -> Result<ControlSignal> {
        c.rescaled(1.0 / self.lambda, self.lambda)
    }

    pub fn unscale_trajectory(&self, traj: &PotentialTrajectory) -> PotentialTrajectory {
        let lam = self.lambda;
        PotentialTrajectory {
            times: traj.times.iter().map(|t| t * lam).collect(),
            states: traj.states.iter().map(|s| self.unscale_state(s)).collect(),
            controls: traj
                .controls
                .iter()
                .map(|w| w.iter().map(|x| x / lam).collect())
                .collect(),
            dt: traj.dt * lam,
            ..traj.clone()
        }
    }

    /// Rescales times, velocities, accelerations, controls, loads and
    /// vorticity; the flow map is unchanged.
    pub fn unscale_solution(&self, sol: &CoupledSolution) -> CoupledSolution {
        let lam = self.lambda;
        let lam2 = lam * lam;
        let states = sol
            .states
            .iter()
            .map(|s| CoupledState {
                t: s.t * lam,
                l: s.l / lam,
                r: s.r / lam,
                dl: s.dl / lam2,
                dr: s.dr / lam2,
                w: s.w.iter().map(|x| x / lam).collect(),
                dw: s.dw.iter().map(|x| x / lam2).collect(),
                markers: s.markers.scaled(1.0 / lam),
                ..s.clone()
            })
            .collect();
        CoupledSolution {
            times: sol.times.iter().map(|t| t * lam).collect(),
            states,
            loads: sol.loads.iter().map(|f| f / lam2).collect(),
            dt: sol.dt * lam,
            ..sol.clone()
        }
    }
}
