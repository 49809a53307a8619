use thiserror::Error;

/// Errors raised by the spectral layer, the steppers and the drivers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("field arithmetic between different grids ({left} vs {right})")]
    GridMismatch { left: String, right: String },

    #[error("numerical overflow: non-finite values produced by {context}")]
    NonFinite { context: String },

    #[error(
        "symbol sign violation: implicit multiplier {value:e} <= 0 for '{symbol}' at mode ({kx}, {ky})"
    )]
    SymbolSign {
        symbol: String,
        kx: usize,
        ky: usize,
        value: f64,
    },

    #[error("auxiliary variable degeneracy: denominator {value:e} below guard floor{}", location_suffix(.location))]
    AuxDegenerate {
        value: f64,
        location: Option<(usize, usize)>,
    },

    #[error("radicand negative ({value:e}) in square-root auxiliary update")]
    RadicandNegative { value: f64 },

    #[error("iterative solver did not converge in {iterations} iterations (relative residual {residual:e})")]
    SolverDivergence { iterations: usize, residual: f64 },

    #[error("dense oracle limited to grids of at most 8x8, got {nx}x{ny}")]
    OracleTooLarge { nx: usize, ny: usize },

    #[error("step {n} (t = {t}): {source}")]
    Step {
        n: usize,
        t: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn location_suffix(loc: &Option<(usize, usize)>) -> String {
    match loc {
        Some((i, j)) => format!(" at grid node ({i}, {j})"),
        None => String::new(),
    }
}

impl Error {
    /// Strips any `Step` wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Step { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
