//! The asymptotic return map `M̂ = M⁽²⁾∘M⁽¹⁾` in `(Ĵ, η)`, its level-curve
//! geometry, the search for stable fixed points, and their density.

mod curve;
mod map;
mod search;

pub use curve::{
    chi, is_stable_q, level_curve, partner, segments_for, stability_q, stable_segments,
    torus_coords, torus_map, LevelBranch, LevelCurve, Root, StableSegment, TorusPoint,
    CURVE_SAMPLES,
};
pub use map::{
    f_max, f_minus, f_plus, f_slope, f_value, frac, map_m1, map_m2, CircuitImage, EscapeImage,
    EtaWindow, MapState, ReturnMap, CAPTURE_TOL,
};
pub use search::{
    classify_solution, density, density_at, find_fixed_points, newton_fixed_point, refine_on_map,
    residuals, unstable_fixed_points, DensityReport, DensitySample, FixedPointSearch,
    FixedPointSolution, SearchConfig, DEFAULT_C1,
};
