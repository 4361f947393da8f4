use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An input lies outside the domain of the operation.
    #[error("parameter domain: {0}")]
    Domain(String),

    /// A quantity diverges for the given inputs (e.g. ξ at γ_c t_c = 0).
    #[error("divergent result: {0}")]
    Divergence(String),

    /// The witness normal matrix is singular along `null_direction` (q, p).
    #[error("degenerate moments: singular along (q, p) = ({:.6}, {:.6})", null_direction[0], null_direction[1])]
    Degenerate { null_direction: [f64; 2] },

    /// Time step or force sampling too coarse.
    #[error("resolution: {0}")]
    Resolution(String),

    /// Fock cutoff too small for the populated levels.
    #[error("cutoff: top-level population {population:.3e} exceeds {tolerance:.1e}; increase n_max above {n_max}")]
    Cutoff { population: f64, tolerance: f64, n_max: usize },
}
