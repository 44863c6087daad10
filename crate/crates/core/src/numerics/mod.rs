//! Numerical kernels shared by the modelling layer.

pub mod dist;
pub mod lstsq;
pub mod matrix;
pub mod rng;
pub mod stats;

pub use dist::{normal_cdf, normal_two_sided_p, student_t_cdf, student_t_two_sided_p};
pub use lstsq::{solve_least_squares, solve_least_squares_named, LeastSquares, RANK_TOLERANCE};
pub use matrix::Matrix;
pub use rng::{rng_stream, SeededRng};
pub use stats::{correlation_matrix, zscore_columns, CorrelationMatrix, Scaling};
