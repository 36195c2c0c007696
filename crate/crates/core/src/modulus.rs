//! Grid estimates of the modulus of continuity
//! `omega(f; delta; E) = sup { |f(a) - f(b)| : a, b in E, |a - b| <= delta }`
//! with the Euclidean distance. Grid maxima are lower estimates of the
//! true modulus.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::func::Bivariate;

/// Slack when converting a distance ratio to a whole number of grid steps.
const STEP_SLACK: f64 = 1e-9;

/// Region on which a modulus is estimated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Interval {
        lo: f64,
        hi: f64,
    },
    /// `[lo, hi]^2`.
    Square {
        lo: f64,
        hi: f64,
    },
}

impl Domain {
    fn bounds(&self) -> (f64, f64) {
        match *self {
            Domain::Interval { lo, hi } | Domain::Square { lo, hi } => (lo, hi),
        }
    }
}

/// Function handed to [`modulus_estimate`].
pub enum Sampled<'a> {
    Uni(&'a dyn Fn(f64) -> Result<f64>),
    Bi(&'a dyn Fn(f64, f64) -> Result<f64>),
}

/// Number of grid nodes on `[lo, hi]` at spacing `step` (endpoint included when it lands on the grid).
pub fn grid_len(lo: f64, hi: f64, step: f64) -> usize {
    if hi < lo || step <= 0.0 {
        return 0;
    }
    ((hi - lo) / step + STEP_SLACK).floor() as usize + 1
}

/// Largest whole number of steps within `delta`.
pub fn steps_within(delta: f64, step: f64) -> usize {
    (delta / step + STEP_SLACK).floor() as usize
}

/// Max `|v[i] - v[j]|` over `|i - j| <= reach`.
pub fn modulus_1d(values: &[f64], reach: usize) -> f64 {
    let mut best = 0.0f64;
    for i in 0..values.len() {
        for j in i + 1..values.len().min(i + reach + 1) {
            best = best.max((values[i] - values[j]).abs());
        }
    }
    best
}

/// Centered sliding-window extremum: `out[i] = ext(row[i-w ..= i+w])`, clipped at the edges.
fn sliding_extreme(row: &[f64], w: usize, max: bool, out: &mut Vec<f64>) {
    out.clear();
    let n = row.len();
    let better = |a: f64, b: f64| if max { a >= b } else { a <= b };
    let mut dq: VecDeque<usize> = VecDeque::new();
    let mut next = 0;
    for i in 0..n {
        let hi = (i + w).min(n - 1);
        while next <= hi {
            while let Some(&b) = dq.back() {
                if better(row[next], row[b]) {
                    dq.pop_back();
                } else {
                    break;
                }
            }
            dq.push_back(next);
            next += 1;
        }
        let lo = i.saturating_sub(w);
        while let Some(&f) = dq.front() {
            if f < lo {
                dq.pop_front();
            } else {
                break;
            }
        }
        out.push(row[*dq.front().expect("window is nonempty")]);
    }
}

/// Max `|v[a] - v[b]|` over square-grid nodes with `|a - b|^2 <= reach_sq` (in step units).
/// `grid[iy][ix]`, all rows of equal length.
pub fn modulus_2d(grid: &[Vec<f64>], reach_sq: usize) -> f64 {
    let ny = grid.len();
    if ny == 0 {
        return 0.0;
    }
    let reach = (reach_sq as f64).sqrt().floor() as usize;
    let mut best = 0.0f64;
    let mut maxw = Vec::new();
    let mut minw = Vec::new();
    // Each unordered pair is visited with dy >= 0; dy = 0 rows see both
    // directions, which is harmless.
    for dy in 0..=reach.min(ny - 1) {
        let w = ((reach_sq - dy * dy) as f64).sqrt().floor() as usize;
        let mut w = if (w + 1) * (w + 1) + dy * dy <= reach_sq {
            w + 1
        } else {
            w
        };
        while w > 0 && w * w + dy * dy > reach_sq {
            w -= 1;
        }
        for iy in 0..ny - dy {
            let base = &grid[iy];
            let other = &grid[iy + dy];
            sliding_extreme(other, w, true, &mut maxw);
            sliding_extreme(other, w, false, &mut minw);
            for ix in 0..base.len() {
                let v = base[ix];
                best = best.max(maxw[ix] - v).max(v - minw[ix]);
            }
        }
    }
    best
}

/// Brute-force grid maximum of `|f(a) - f(b)|` over grid pairs with `|a - b| <= delta`.
pub fn modulus_estimate(f: Sampled<'_>, delta: f64, domain: Domain, grid_step: f64) -> Result<f64> {
    if delta.is_nan() || delta <= 0.0 || grid_step.is_nan() || grid_step <= 0.0 {
        return Err(Error::Argument(
            "delta and grid_step must be positive".into(),
        ));
    }
    if grid_step > delta * (1.0 + STEP_SLACK) {
        return Err(Error::Argument(format!(
            "grid_step {grid_step} exceeds delta {delta}"
        )));
    }
    let (lo, hi) = domain.bounds();
    let n = grid_len(lo, hi, grid_step);
    if n == 0 {
        return Err(Error::EmptyGrid);
    }
    let node = |i: usize| lo + i as f64 * grid_step;
    let reach = steps_within(delta, grid_step);
    match (f, domain) {
        (Sampled::Uni(g), Domain::Interval { .. }) => {
            let values = (0..n).map(|i| g(node(i))).collect::<Result<Vec<_>>>()?;
            Ok(modulus_1d(&values, reach))
        }
        (Sampled::Bi(g), Domain::Square { .. }) => {
            let grid = (0..n)
                .map(|iy| {
                    (0..n)
                        .map(|ix| g(node(ix), node(iy)))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            let reach_sq = ((delta / grid_step).powi(2) + STEP_SLACK).floor() as usize;
            Ok(modulus_2d(&grid, reach_sq))
        }
        _ => Err(Error::Argument(
            "function arity does not match the domain".into(),
        )),
    }
}

/// Cheap lower estimate of `omega(F; delta; [-m, m]^2)` for small `delta`:
/// compares F at a coarse lattice of anchors with F displaced by `delta`
/// along the axes and diagonals.
pub fn modulus_probe<F: Bivariate + ?Sized>(
    f: &F,
    delta: f64,
    m: f64,
    anchors: usize,
) -> Result<f64> {
    if delta == 0.0 {
        return Ok(0.0);
    }
    let anchors = anchors.max(2);
    let step = 2.0 * m / (anchors - 1) as f64;
    let d = delta / std::f64::consts::SQRT_2;
    let dirs = [(delta, 0.0), (0.0, delta), (d, d), (d, -d)];
    let mut best = 0.0f64;
    for iy in 0..anchors {
        for ix in 0..anchors {
            let (x, y) = (-m + ix as f64 * step, -m + iy as f64 * step);
            let v = f.eval2(x, y)?;
            for (dx, dy) in dirs {
                // Stay inside the box: step back instead of forward at the far edge.
                let (px, py) = (
                    if x + dx > m { x - dx } else { x + dx },
                    if y + dy > m || y + dy < -m {
                        y - dy
                    } else {
                        y + dy
                    },
                );
                best = best.max((f.eval2(px, py)? - v).abs());
            }
        }
    }
    Ok(best)
}
