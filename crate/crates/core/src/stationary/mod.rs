//! Standing waves `u_n(t) = e^{iω²t} φ_n`: Newton and continuation from the
//! anti-continuum limit, the contraction map `𝒫 = A_ω^{-1}(|z|^{2σ}z)` and
//! the mountain-pass geometry of the stationary energy.

mod contraction;
mod geometry;
mod wave;

pub use contraction::{
    contraction_probe, critical_energy, fixed_point_map, iterate_to_zero, solve_a_omega,
    ContractionReport, IterationOutcome,
};
pub use geometry::{epsilon_norm_sq, mountain_pass_geometry, GeometryReport};
pub use wave::{
    anticontinuum_seed, continuation, newton_standing_wave, newton_standing_wave_coupled, Branch,
    StandingWave, WaveOutcome,
};
