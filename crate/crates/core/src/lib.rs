//! 2D spectral solvers for spinning quantum droplets in a complex
//! PT-symmetric harmonic-oscillator-Gaussian trap: linear spectra and
//! symmetry-breaking diagrams, stationary states via Newton-CG with
//! pseudo-arclength continuation, Bogoliubov-de Gennes stability, and
//! split-step time evolution in the rotating frame.

pub mod error;
mod fft;
pub mod grid;
pub mod linalg;
pub mod potential;
pub mod rng;
pub mod special;

pub mod bdg;
pub mod dynamics;
pub mod linspec;
pub mod observables;
pub mod stationary;

pub use error::{Error, Result};
pub use grid::{gradient, integrate, laplacian, translate, ComplexField, Grid2, RealField, SharedGrid};
pub use potential::{build_pt_hog, check_pt, exact_droplet, exact_params, ModelParams, PotentialFields};

pub use bdg::{
    annotate_family, apply_bdg, bdg_spectrum, classify, default_classify_tol, quartet_defect,
    BdgOptions, BdgSpectrum, Verdict,
};
pub use dynamics::{
    collision_ic, evolve, step, track_peaks, EvolutionRun, EvolveSpec, FrameDiag, StepPlan,
};
pub use linspec::{
    apply_h, is_unbroken, linear_eigs, linear_eigs_for, phase_boundary, BoundaryOptions,
    BoundaryOutcome, BoundarySample, LinearEigOptions, LinearSpectrum,
};
pub use observables::{
    asymmetry, contour_components, count_density_peaks, diagnostics, norm, poynting, quasi_energy,
    winding, Component, Diagnostics, Winding,
};
pub use stationary::{
    align_phase, amplitude_scan, continue_family, newton_cg_solve, residual, seed_from_linear,
    ContinuationOptions, FamilyCurve, FamilyPoint, SolveOptions, StationaryState, SweepParam,
    Termination,
};
