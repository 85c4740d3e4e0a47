use jumpvol_core::{Error, Interval};

/// Radius `q` with `P(|X| <= q) = 0.95` under the stationary law of each
/// built-in model, estimated once from long simulated paths.
pub const STATIONARY_RADIUS_95: [f64; 4] = [1.43, 2.04, 2.07, 2.24];

/// Default estimation interval `[-q, q]` for a built-in model id.
pub fn default_interval(model_id: u32) -> Result<Interval, Error> {
    let radius = model_id
        .checked_sub(1)
        .and_then(|i| STATIONARY_RADIUS_95.get(i as usize))
        .ok_or_else(|| Error::UnknownModel(model_id.to_string()))?;
    Interval::symmetric(*radius)
}

pub const DEFAULT_REPLICATIONS: usize = 20;
pub const FIGURE_REPLICATIONS: usize = 5;
pub const FIGURE_GRID_POINTS: usize = 512;
