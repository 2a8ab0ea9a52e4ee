use thiserror::Error;

/// Errors raised across the solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("attitude outside the quaternion chart: |q| = {norm}")]
    ChartExit { norm: f64 },

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("control basis error: {0}")]
    ControlBasis(String),

    #[error("Neumann data not solvable: net flux {flux:e} exceeds {tol:e}")]
    NonSolvable { flux: f64, tol: f64 },

    #[error("singular boundary system (condition estimate {condition:e})")]
    SingularSystem { condition: f64 },

    #[error("added-mass matrix is not positive definite (min eigenvalue {min_eig:e})")]
    NotPositiveDefinite { min_eig: f64 },

    #[error("evaluation point {point:?} is not exterior to the body (distance {distance:e})")]
    NotExterior { point: [f64; 3], distance: f64 },

    #[error("marker {index} collided with the body (distance {distance:e} < {tolerance:e}) at t = {time}")]
    Collision {
        index: usize,
        distance: f64,
        tolerance: f64,
        time: f64,
    },

    #[error("vorticity seed error: {0}")]
    Seed(String),

    #[error("parameter window violated: {0}")]
    ParameterWindow(String),

    #[error("fixed-point iteration is not contracting: ratios {ratios:?}")]
    NonContraction { ratios: Vec<f64> },

    #[error("fixed-point iteration did not reach tolerance {tol:e} in {iterations} iterations (last step {last:e})")]
    PicardMaxIter {
        iterations: usize,
        last: f64,
        tol: f64,
    },

    #[error("steering did not converge: best residual {residual:e} after {iterations} iterations")]
    SteeringNonConvergence { residual: f64, iterations: usize },

    #[error("controllability deficiency: endpoint Jacobian rank {rank} < 12 at the origin (best residual {residual:e})")]
    ControllabilityDeficiency { rank: usize, residual: f64 },

    #[error("vorticity perturbation too large: measured eps {eps} >= {eps_max}")]
    PerturbationTooLarge { eps: f64, eps_max: f64 },

    #[error("retargeting diverged: endpoint errors {errors:?}")]
    RetargetDivergence { errors: Vec<f64> },

    #[error("time-scaling search exhausted at lambda = {lambda}")]
    ScalingExhausted { lambda: f64 },

    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Non-contraction and body collisions are the numerical failures the CLI
    /// maps to a dedicated exit code.
    pub fn is_numerical_failure(&self) -> bool {
        matches!(
            self,
            Error::NonContraction { .. }
                | Error::Collision { .. }
                | Error::PicardMaxIter { .. }
                | Error::SteeringNonConvergence { .. }
                | Error::ControllabilityDeficiency { .. }
                | Error::PerturbationTooLarge { .. }
                | Error::RetargetDivergence { .. }
                | Error::ScalingExhausted { .. }
                | Error::SingularSystem { .. }
                | Error::NotPositiveDefinite { .. }
                | Error::ChartExit { .. }
        )
    }
}
