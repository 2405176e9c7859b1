//! Brute-force checks that the linearised rows describe the same feasible
//! set as the nonlinear constraints they replace.

use rand::Rng;

use crate::error::{Error, Result};

pub const MAX_ORACLE_SITES: usize = 4;
pub const MAX_ORACLE_PIXELS: usize = 6;
pub const MAX_ORACLE_BANDS: usize = 2;

/// A toy instance small enough to enumerate.
#[derive(Clone, Debug, PartialEq)]
pub struct SmallInstance {
    pub n_pixels: usize,
    pub n_sites: usize,
    pub n_bands: usize,
    /// Indexed `(pixel * n_sites + site) * n_bands + band`.
    pub beta: Vec<f64>,
    /// Whether the pixel is within coverage distance of the site on the band.
    pub in_range: Vec<bool>,
    pub s_min: Vec<f64>,
    pub n_ser: usize,
}

impl SmallInstance {
    /// Random β in `[1e-3, 1)`, random ranges and thresholds in `[0, 3)`.
    pub fn random<R: Rng>(rng: &mut R, n_pixels: usize, n_sites: usize, n_bands: usize) -> Self {
        let n = n_pixels * n_sites * n_bands;
        SmallInstance {
            n_pixels,
            n_sites,
            n_bands,
            beta: (0..n).map(|_| rng.random_range(1e-3..1.0)).collect(),
            in_range: (0..n).map(|_| rng.random_bool(0.8)).collect(),
            s_min: (0..n_bands).map(|_| rng.random_range(0.0..3.0)).collect(),
            n_ser: rng.random_range(1..=2),
        }
    }

    fn idx(&self, p: usize, l: usize, f: usize) -> usize {
        (p * self.n_sites + l) * self.n_bands + f
    }

    pub fn beta(&self, p: usize, l: usize, f: usize) -> f64 {
        self.beta[self.idx(p, l, f)]
    }

    /// Nonlinear SIR row for `(p, l, f)` under the given installs and link.
    pub fn sir_row_holds(&self, y: &[bool], p: usize, l: usize, f: usize, x: bool) -> bool {
        if !x {
            return true;
        }
        let nf = self.n_bands;
        let num = if y[l * nf + f] { self.beta(p, l, f).powi(2) } else { 0.0 };
        let den: f64 =
            (0..self.n_sites).filter(|&l2| l2 != l && y[l2 * nf + f]).map(|l2| self.beta(p, l2, f).powi(2)).sum();
        if den == 0.0 {
            num > 0.0 || self.s_min[f] <= 0.0
        } else {
            num / den >= self.s_min[f]
        }
    }

    /// Whether some auxiliary vector satisfies the linear rows for `(p, l, f)`.
    pub fn linear_rows_satisfiable(&self, y: &[bool], p: usize, l: usize, f: usize, x: bool) -> bool {
        let nf = self.n_bands;
        let xv = x as u8 as f64;
        let own = self.beta(p, l, f);
        (0u32..1 << self.n_sites).any(|mask| {
            let mut sum = 0.0;
            for l2 in 0..self.n_sites {
                let v = (mask >> l2) & 1 == 1;
                let yv = y[l2 * nf + f] as u8 as f64;
                let vv = v as u8 as f64;
                if vv > xv || vv > yv || vv < xv + yv - 1.0 {
                    return false;
                }
                if v {
                    sum += (self.beta(p, l2, f) / own).powi(2);
                }
            }
            self.s_min[f] * (sum - xv) <= 1.0
        })
    }
}

/// Enumerates every install vector and every per-pixel link vector that
/// respects coverage and the serving cap, and checks that the nonlinear SIR
/// rows hold exactly when the linearised system is satisfiable.
///
/// Rows of distinct pixels share no auxiliary variable, so checking each
/// pixel's block separately covers every joint assignment.
pub fn check_sir_linearization(inst: &SmallInstance) -> Result<bool> {
    let (np, nl, nf) = (inst.n_pixels, inst.n_sites, inst.n_bands);
    if nl > MAX_ORACLE_SITES || np > MAX_ORACLE_PIXELS || nf > MAX_ORACLE_BANDS {
        return Err(Error::TooLarge(format!(
            "oracle limited to {MAX_ORACLE_SITES} sites, {MAX_ORACLE_PIXELS} pixels, {MAX_ORACLE_BANDS} bands"
        )));
    }
    let slots = nl * nf;
    for ymask in 0u32..1 << slots {
        let y: Vec<bool> = (0..slots).map(|k| (ymask >> k) & 1 == 1).collect();
        for p in 0..np {
            for xmask in 0u32..1 << slots {
                let x: Vec<bool> = (0..slots).map(|k| (xmask >> k) & 1 == 1).collect();
                let coverage_ok = (0..slots).all(|k| !x[k] || (y[k] && inst.in_range[p * slots + k]));
                if !coverage_ok || xmask.count_ones() as usize > inst.n_ser {
                    continue;
                }
                let mut nonlinear = true;
                let mut linear = true;
                for l in 0..nl {
                    for f in 0..nf {
                        let xv = x[l * nf + f];
                        nonlinear &= inst.sir_row_holds(&y, p, l, f, xv);
                        linear &= inst.linear_rows_satisfiable(&y, p, l, f, xv);
                    }
                }
                if nonlinear != linear {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// For each `(w, y)` the exclusion rows admit exactly one `z`, namely `(1 - w) * y`.
pub fn check_exclusion_linearization() -> bool {
    for w in 0..=1i32 {
        for y in 0..=1i32 {
            let feasible: Vec<i32> = (0..=1).filter(|&z| z <= 1 - w && z <= y && z >= y - w).collect();
            if feasible != [(1 - w) * y] {
                return false;
            }
        }
    }
    true
}
