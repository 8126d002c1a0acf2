//! Monotone piecewise-linear response curve relating frame intensity to the
//! brightness the event pixels respond to, one curve per event polarity.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum gap kept between neighbouring ordinates.
const MIN_GAP: f64 = 1e-6;

/// Knot abscissae are spaced quadratically on `[floor, 1]`, dense at the
/// dark end where a straight segment is a poor fit in the log domain.
/// Ordinates at both ends are pinned to `floor` and `1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResponseCurve {
    pub floor: f64,
    pub knots: Vec<f64>,
    /// Ordinates used for samples with net positive events.
    pub positive: Vec<f64>,
    /// Ordinates used for samples with net negative events.
    pub negative: Vec<f64>,
}

impl ResponseCurve {
    pub fn identity(n_knots: usize, floor: f64) -> Result<Self> {
        if n_knots < 2 {
            return Err(Error::arg(format!("response curve needs at least 2 knots, got {n_knots}")));
        }
        if !(floor > 0.0 && floor < 1.0) {
            return Err(Error::arg(format!("response floor must be in (0, 1), got {floor}")));
        }
        let knots: Vec<f64> = (0..n_knots)
            .map(|k| floor + (1.0 - floor) * (k as f64 / (n_knots - 1) as f64).powi(2))
            .collect();
        Ok(ResponseCurve {
            floor,
            positive: knots.clone(),
            negative: knots.clone(),
            knots,
        })
    }

    pub fn n_knots(&self) -> usize {
        self.knots.len()
    }

    pub fn ordinates(&self, polarity: i8) -> &[f64] {
        if polarity >= 0 {
            &self.positive
        } else {
            &self.negative
        }
    }

    /// Segment index and position within it. Inputs below the floor are
    /// clamped to it; inputs above 1 extend the last segment.
    fn locate(&self, x: f64) -> (usize, f64) {
        let k = self.knots.len();
        let x = x.max(self.floor);
        let seg = self.knots.partition_point(|&q| q <= x).saturating_sub(1).min(k - 2);
        let (a, b) = (self.knots[seg], self.knots[seg + 1]);
        (seg, (x - a) / (b - a))
    }

    pub fn eval(&self, polarity: i8, x: f64) -> f64 {
        let y = self.ordinates(polarity);
        let (s, u) = self.locate(x);
        y[s] + u * (y[s + 1] - y[s])
    }

    pub fn is_strictly_increasing(&self) -> bool {
        [&self.positive, &self.negative]
            .iter()
            .all(|y| y.windows(2).all(|w| w[1] > w[0]))
    }

    /// Largest `|curve(x) - f(x)|` over a dense grid on `[lo, hi]`.
    pub fn sup_distance(&self, polarity: i8, f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
        (0..=2000)
            .map(|i| lo + (hi - lo) * i as f64 / 2000.0)
            .map(|x| (self.eval(polarity, x) - f(x)).abs())
            .fold(0.0, f64::max)
    }
}

/// One residual term: frame intensities at two view times, the log change
/// the events report between them, and a weight.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResponseSample {
    pub i0: f64,
    pub i1: f64,
    pub log_change: f64,
    pub polarity: i8,
    pub weight: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitOptions {
    pub n_knots: usize,
    pub max_sweeps: usize,
    /// Stop when a sweep lowers the objective by less than this.
    pub tol: f64,
    pub max_samples: usize,
    pub seed: u64,
    pub floor: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            n_knots: 8,
            max_sweeps: 200,
            tol: 1e-8,
            max_samples: 50_000,
            seed: 0,
            floor: crate::simulator::DEFAULT_LOG_FLOOR,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResponseFit {
    pub curve: ResponseCurve,
    pub objective_initial: f64,
    pub objective_final: f64,
    pub sweeps: usize,
    pub samples: usize,
}

/// Keep at most `max` of `n` candidates: an evenly strided subset with a
/// seeded random phase.
pub fn strided_subset(n: usize, max: usize, seed: u64) -> Vec<usize> {
    if n <= max {
        return (0..n).collect();
    }
    let stride = n as f64 / max as f64;
    let phase: f64 = ChaCha8Rng::seed_from_u64(seed).random();
    (0..max)
        .map(|k| (((k as f64 + phase) * stride) as usize).min(n - 1))
        .collect()
}

/// Precomputed basis positions of a sample's two intensities.
struct Term {
    s0: usize,
    u0: f64,
    s1: usize,
    u1: f64,
    target: f64,
    weight: f64,
    neg: bool,
}

fn value(y: &[f64], s: usize, u: f64) -> f64 {
    y[s] + u * (y[s + 1] - y[s])
}

fn residual(t: &Term, y: &[f64]) -> f64 {
    value(y, t.s1, t.u1).ln() - value(y, t.s0, t.u0).ln() - t.target
}

/// Basis function of knot `j` at a located point.
fn basis(j: usize, s: usize, u: f64) -> f64 {
    if j == s {
        1.0 - u
    } else if j == s + 1 {
        u
    } else {
        0.0
    }
}

fn objective(terms: &[Term], pos: &[f64], neg: &[f64], wsum: f64) -> f64 {
    terms
        .iter()
        .map(|t| {
            let r = residual(t, if t.neg { neg } else { pos });
            t.weight * r * r
        })
        .sum::<f64>()
        / wsum
}

/// Pool-adjacent-violators for a nondecreasing fit with unit weights.
fn pava(v: &mut [f64]) {
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(v.len());
    for &x in v.iter() {
        blocks.push((x, 1));
        while blocks.len() > 1 && blocks[blocks.len() - 2].0 > blocks[blocks.len() - 1].0 {
            let (m2, n2) = blocks.pop().unwrap();
            let (m1, n1) = blocks.pop().unwrap();
            blocks.push(((m1 * n1 as f64 + m2 * n2 as f64) / (n1 + n2) as f64, n1 + n2));
        }
    }
    let mut i = 0;
    for (m, n) in blocks {
        v[i..i + n].iter_mut().for_each(|x| *x = m);
        i += n;
    }
}

/// Isotonic projection of the interior ordinates, then a minimum gap so the
/// curve is strictly increasing between the pinned ends.
fn project(y: &mut [f64]) {
    let k = y.len();
    if k > 2 {
        pava(&mut y[1..k - 1]);
    }
    let (lo, hi) = (y[0], y[k - 1]);
    for j in 1..k - 1 {
        let min = lo + j as f64 * MIN_GAP;
        let max = hi - (k - 1 - j) as f64 * MIN_GAP;
        y[j] = y[j].clamp(min, max);
    }
    for j in 1..k - 1 {
        y[j] = y[j].max(y[j - 1] + MIN_GAP);
    }
}

/// Least-squares fit of `log c(i1) - log c(i0) = log_change` over knot
/// ordinates by coordinate Gauss-Newton with backtracking, projecting onto
/// monotone curves after every sweep. Returns the best projected curve seen.
pub fn fit_response_samples(samples: &[ResponseSample], opts: &FitOptions) -> Result<ResponseFit> {
    let init = ResponseCurve::identity(opts.n_knots, opts.floor)?;
    let k = opts.n_knots;
    if samples.len() < 10 * k {
        return Err(Error::arg(format!(
            "response fit needs at least {} residual samples, got {}",
            10 * k,
            samples.len()
        )));
    }
    let terms: Vec<Term> = samples
        .iter()
        .map(|s| {
            let (s0, u0) = init.locate(s.i0);
            let (s1, u1) = init.locate(s.i1);
            Term {
                s0,
                u0,
                s1,
                u1,
                target: s.log_change,
                weight: s.weight,
                neg: s.polarity < 0,
            }
        })
        .collect();
    let wsum: f64 = terms.iter().map(|t| t.weight).sum();
    if wsum <= 0.0 {
        return Err(Error::arg("response samples carry no weight"));
    }
    // terms touching each knot, per polarity
    let mut touching: [Vec<Vec<usize>>; 2] = [vec![Vec::new(); k], vec![Vec::new(); k]];
    for (n, t) in terms.iter().enumerate() {
        let side = &mut touching[t.neg as usize];
        for j in [t.s0, t.s0 + 1, t.s1, t.s1 + 1] {
            if side[j].last() != Some(&n) {
                side[j].push(n);
            }
        }
    }

    let mut y = [init.positive.clone(), init.negative.clone()];
    let obj0 = objective(&terms, &y[0], &y[1], wsum);
    let mut best = (obj0, y.clone());
    let mut prev = obj0;
    let mut sweeps = 0;
    while sweeps < opts.max_sweeps {
        sweeps += 1;
        for side in 0..2 {
            for j in 1..k - 1 {
                let idx = &touching[side][j];
                if idx.is_empty() {
                    continue;
                }
                let local = |yv: &[f64]| -> f64 {
                    idx.iter()
                        .map(|&n| {
                            let r = residual(&terms[n], yv);
                            terms[n].weight * r * r
                        })
                        .sum()
                };
                let (mut g, mut h) = (0.0, 0.0);
                for &n in idx {
                    let t = &terms[n];
                    let yv = &y[side];
                    let jac = basis(j, t.s1, t.u1) / value(yv, t.s1, t.u1)
                        - basis(j, t.s0, t.u0) / value(yv, t.s0, t.u0);
                    let r = residual(t, yv);
                    g += t.weight * r * jac;
                    h += t.weight * jac * jac;
                }
                if h <= 0.0 {
                    continue;
                }
                let before = local(&y[side]);
                let old = y[side][j];
                let mut step = -g / h;
                let mut accepted = false;
                for _ in 0..30 {
                    y[side][j] = (old + step).clamp(opts.floor, 1.0);
                    if local(&y[side]) < before {
                        accepted = true;
                        break;
                    }
                    step *= 0.5;
                }
                if !accepted {
                    y[side][j] = old;
                }
            }
            project(&mut y[side]);
        }
        let obj = objective(&terms, &y[0], &y[1], wsum);
        if obj < best.0 {
            best = (obj, y.clone());
        }
        if prev - obj < opts.tol {
            break;
        }
        prev = obj;
    }
    let [positive, negative] = best.1;
    let curve = ResponseCurve {
        positive,
        negative,
        ..init
    };
    assert!(curve.is_strictly_increasing(), "projected response curve must be increasing");
    Ok(ResponseFit {
        curve,
        objective_initial: obj0,
        objective_final: best.0,
        sweeps,
        samples: samples.len(),
    })
}
