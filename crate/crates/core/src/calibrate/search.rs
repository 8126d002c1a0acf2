//! One-dimensional minimization: coarse grid followed by golden-section.

use crate::error::{Error, Result};

/// `1 / phi`.
pub const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// One evaluated point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub x: f64,
    pub loss: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchResult {
    pub x: f64,
    pub loss: f64,
    /// Every evaluation, in order.
    pub trace: Vec<Sample>,
    /// Bracket width before each golden-section step and after the last.
    pub widths: Vec<f64>,
    /// Coarse-grid losses were all equal: the minimum is not identifiable.
    pub flat: bool,
}

/// Golden-section search on `[a, b]` until `b - a <= rel_tol * (a + b) / 2`.
pub fn golden_section(
    mut f: impl FnMut(f64) -> Result<f64>,
    mut a: f64,
    mut b: f64,
    rel_tol: f64,
    trace: &mut Vec<Sample>,
) -> Result<(f64, f64, Vec<f64>)> {
    let mut eval = |x: f64, trace: &mut Vec<Sample>| -> Result<f64> {
        let loss = f(x)?;
        trace.push(Sample { x, loss });
        Ok(loss)
    };
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = eval(c, trace)?;
    let mut fd = eval(d, trace)?;
    let mut widths = vec![b - a];
    while b - a > rel_tol * 0.5 * (a + b).abs() {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = eval(c, trace)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = eval(d, trace)?;
        }
        widths.push(b - a);
    }
    Ok(if fc <= fd { (c, fc, widths) } else { (d, fd, widths) })
}

/// Evaluate `n` evenly spaced points over `[lo, hi]`, then refine around the
/// best one with golden-section search.
pub fn grid_then_golden(
    mut f: impl FnMut(f64) -> Result<f64>,
    lo: f64,
    hi: f64,
    n: usize,
    rel_tol: f64,
) -> Result<SearchResult> {
    if !(lo > 0.0 && lo < hi && hi.is_finite()) {
        return Err(Error::arg(format!("invalid search bracket [{lo}, {hi}]")));
    }
    if n < 3 {
        return Err(Error::arg("coarse grid needs at least 3 points"));
    }
    let grid: Vec<f64> = (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect();
    let mut trace = Vec::new();
    for &x in &grid {
        let loss = f(x)?;
        trace.push(Sample { x, loss });
    }
    let (j, best) = trace
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.loss.total_cmp(&b.1.loss))
        .map(|(j, s)| (j, *s))
        .expect("grid is nonempty");
    let worst = trace.iter().map(|s| s.loss).fold(f64::MIN, f64::max);
    if worst - best.loss <= 1e-12 * (1.0 + worst.abs()) {
        return Ok(SearchResult {
            x: best.x,
            loss: best.loss,
            trace,
            widths: vec![],
            flat: true,
        });
    }
    let a = grid[j.saturating_sub(1)];
    let b = grid[(j + 1).min(n - 1)];
    let (x, loss, widths) = golden_section(&mut f, a, b, rel_tol, &mut trace)?;
    let (x, loss) = if loss <= best.loss { (x, loss) } else { (best.x, best.loss) };
    Ok(SearchResult {
        x,
        loss,
        trace,
        widths,
        flat: false,
    })
}
