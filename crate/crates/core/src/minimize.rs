//! Bounded scalar minimization.

/// Result of a one-dimensional minimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub value: f64,
    pub iterations: usize,
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the minimum of a unimodal `f` on `[a, b]`.
///
/// Stops once the bracket is narrower than `rel_tol · |x|` or after
/// `max_iter` contractions.
pub fn golden_section(
    f: impl Fn(f64) -> f64,
    mut a: f64,
    mut b: f64,
    rel_tol: f64,
    max_iter: usize,
) -> Minimum {
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut iterations = 0;

    while iterations < max_iter {
        let mid = 0.5 * (a + b);
        if (b - a) <= rel_tol * mid.abs() || b - a <= f64::MIN_POSITIVE {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
        iterations += 1;
    }

    if f1 <= f2 {
        Minimum {
            x: x1,
            value: f1,
            iterations,
        }
    } else {
        Minimum {
            x: x2,
            value: f2,
            iterations,
        }
    }
}

/// Golden-section search seeded by a coarse guard grid.
///
/// The grid is quadratically spaced toward `lo` so that minima sitting very
/// close to the lower bound are still bracketed. The golden-section phase
/// refines the best grid bracket; the better of the two candidates wins.
pub fn guarded_minimize(
    f: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    seeds: usize,
    rel_tol: f64,
    max_iter: usize,
) -> Minimum {
    let seeds = seeds.max(3);
    let grid: Vec<f64> = (0..seeds)
        .map(|i| {
            let u = i as f64 / (seeds - 1) as f64;
            lo + (hi - lo) * u * u
        })
        .collect();
    let values: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
    let best = values
        .iter()
        .enumerate()
        .filter(|(_, v)| !v.is_nan())
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);

    let a = grid[best.saturating_sub(1)];
    let b = grid[(best + 1).min(seeds - 1)];
    let refined = golden_section(&f, a, b, rel_tol, max_iter);
    if refined.value <= values[best] {
        refined
    } else {
        Minimum {
            x: grid[best],
            value: values[best],
            iterations: refined.iterations,
        }
    }
}
