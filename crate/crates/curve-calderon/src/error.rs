use thiserror::Error;

/// Every failure the library reports. Variants are grouped by the pipeline
/// stage that raises them so the CLI can tag diagnostics.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
    #[error("singular point of the curve at u = ({0}, {1}) (|grad P| = {2:e})")]
    SingularPoint(String, String, f64),
    #[error("chart singularity: |z0| = {0:e} is below the floor {1:e}")]
    ChartSingularity(f64, f64),
    #[error("singular kernel pair: B = {0:e}")]
    SingularPair(f64),
    #[error("unsupported pole order {0} in residue reduction (only simple poles)")]
    UnsupportedPole(u32),
    #[error("meshing failed: {0}")]
    Meshing(String),
    #[error("collar too thin: {width:.3e} < 3h = {min:.3e}")]
    CollarTooThin { width: f64, min: f64 },
    #[error("conductivity below floor: min sigma = {0:e}")]
    SigmaBelowFloor(f64),
    #[error("ill-conditioned system: condition estimate {0:e}")]
    IllConditioned(f64),
    #[error("principal value diverged on {}", nodes(.0))]
    PvDivergence(Vec<usize>),
    #[error("boundary data inconsistent: loop residual {0:e} on component {1}")]
    InconsistentData(f64, usize),
    #[error("|f| below threshold at {}", nodes(.0))]
    DivisionSingularity(Vec<usize>),
    #[error("0 is (numerically) a Dirichlet eigenvalue: {0}")]
    EigenvalueObstruction(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Long node lists are cut to their first few entries plus a count.
fn nodes(ix: &[usize]) -> String {
    const SHOWN: usize = 8;
    if ix.len() <= SHOWN {
        format!("nodes {ix:?}")
    } else {
        format!("{} nodes, first {:?}", ix.len(), &ix[..SHOWN])
    }
}
