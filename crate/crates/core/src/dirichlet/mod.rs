//! Dirichlet characters modulo k, character-twisted Dirichlet polynomials
//! over [X, 2X] and quadrature harnesses for their mean squares.

pub mod characters;
pub mod polynomial;

pub use characters::{
    characters_mod, orthogonality_check, CharacterGroup, CharacterInfo, DirichletCharacter,
    ORTHOGONALITY_LIMIT,
};
pub use polynomial::{
    dirichlet_polynomial, hybrid_mean_value, hybrid_mean_value_ratio, load_coefficients,
    mean_square, parseval_ratio, step_ceiling, HybridReport, HybridSweep, MeanSquareReport,
    ParsevalReport,
};
