//! Thin n-dimensional wrapper over `rustfft`: unnormalized forward and
//! inverse DFT applied axis by axis on row-major data.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::Grid;

struct PlanCache {
    forward: HashMap<usize, Arc<dyn Fft<f64>>>,
    inverse: HashMap<usize, Arc<dyn Fft<f64>>>,
}

static PLANS: Mutex<Option<PlanCache>> = Mutex::new(None);

fn plan(len: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    let mut guard = PLANS.lock().unwrap();
    let cache = guard.get_or_insert_with(|| PlanCache {
        forward: HashMap::new(),
        inverse: HashMap::new(),
    });
    let map = if forward { &mut cache.forward } else { &mut cache.inverse };
    map.entry(len)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if forward {
                planner.plan_fft_forward(len)
            } else {
                planner.plan_fft_inverse(len)
            }
        })
        .clone()
}

/// In-place unnormalized DFT along every axis of a row-major `N^n` array.
pub fn dft_nd(grid: &Grid, data: &mut [Complex64], forward: bool) {
    let n = grid.n();
    let points = grid.points_per_axis();
    debug_assert_eq!(data.len(), grid.len());
    let fft = plan(points, forward);
    let mut line = vec![Complex64::default(); points];
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];

    // Row-major layout: stride of the last axis is 1, of axis `a` it is
    // points^(n-1-a). Lines along each axis are gathered, transformed,
    // scattered back.
    for axis in 0..n {
        let stride = points.pow((n - 1 - axis) as u32);
        let block = stride * points;
        let blocks = data.len() / block;
        for b in 0..blocks {
            for off in 0..stride {
                let base = b * block + off;
                for (i, slot) in line.iter_mut().enumerate() {
                    *slot = data[base + i * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (i, value) in line.iter().enumerate() {
                    data[base + i * stride] = *value;
                }
            }
        }
    }
}
