#![no_main]

use libfuzzer_sys::fuzz_target;
use prmimo::config::{parse_snr_grid, MAX_GRID_POINTS};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(grid) = parse_snr_grid(text) {
        let points = grid.points();
        assert!(!points.is_empty() && points.len() <= MAX_GRID_POINTS + 1);
        assert!(points.iter().all(|p| p.is_finite()));
        assert!(points.windows(2).all(|w| w[0] < w[1]));
    }
});
