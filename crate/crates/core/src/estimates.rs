//! Closed-form constants and series controlling the Picard iteration:
//! `Ĺ(T)`, `a(T)`, the series `E^{(p)}(t, ε, θ)`, the `n`-step contraction
//! bound, the solution growth bound, and the empirical continuity exponent.
//!
//! Everything that involves `n^{np/q} / n!` is evaluated in log domain.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::interactions::least_squares;
use crate::sde::{increment_moment, ProcessEnsemble};

fn check_p(p: f64) -> Result<()> {
    if !(p >= 2.0) || !p.is_finite() {
        return Err(invalid("p", "must be finite and >= 2"));
    }
    Ok(())
}

fn check_lt(l: f64, t: f64) -> Result<()> {
    if !(l >= 0.0) || !l.is_finite() {
        return Err(invalid("L", "must be finite and >= 0"));
    }
    if !(t > 0.0) || !t.is_finite() {
        return Err(invalid("T", "must be finite and > 0"));
    }
    Ok(())
}

/// `Ĺ(T) = (T^{p-1} + [p/2 (p-1)]^p T^{p/2-1}) 2^{p-1} L^p`.
pub fn hat_l(p: f64, l: f64, t: f64) -> Result<f64> {
    check_p(p)?;
    check_lt(l, t)?;
    let ito = (p / 2.0 * (p - 1.0)).powf(p);
    Ok((t.powf(p - 1.0) + ito * t.powf(p / 2.0 - 1.0)) * 2f64.powf(p - 1.0) * l.powf(p))
}

/// `a_p = 2^{p-1} ((p/2)^{p/2} (p-1) + 1)`.
pub fn a_p(p: f64) -> Result<f64> {
    check_p(p)?;
    Ok(2f64.powf(p - 1.0) * ((p / 2.0).powf(p / 2.0) * (p - 1.0) + 1.0))
}

/// `a(T) = a_p L T` for `T >= 1` and `a_p L T^{1/2}` otherwise.
pub fn a_t(p: f64, l: f64, t: f64) -> Result<f64> {
    check_lt(l, t)?;
    let ap = a_p(p)?;
    Ok(if t >= 1.0 {
        ap * l * t
    } else {
        ap * l * t.sqrt()
    })
}

/// Value of `E^{(p)}(t, ε, θ)` together with its truncation data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesValue {
    pub value: f64,
    /// Natural log of the value; finite even when `value` overflows.
    pub ln_value: f64,
    /// Number of summed terms `n >= 1`.
    pub terms: usize,
    /// Ratio majorant at the truncation index.
    pub last_ratio: f64,
}

const MAX_SERIES_TERMS: usize = 50_000_000;

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// `log` of `Σ exp(ln_terms)` accumulated with a running maximum.
struct LogSum {
    max: f64,
    scaled: f64,
}

impl LogSum {
    fn new() -> Self {
        LogSum {
            max: f64::NEG_INFINITY,
            scaled: 0.0,
        }
    }

    fn add(&mut self, ln_term: f64) {
        if ln_term == f64::NEG_INFINITY {
            return;
        }
        if ln_term > self.max {
            self.scaled = self.scaled * (self.max - ln_term).exp() + 1.0;
            self.max = ln_term;
        } else {
            self.scaled += (ln_term - self.max).exp();
        }
    }

    fn ln(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.ln()
        }
    }
}

/// `E^{(p)}(t, ε, θ) = 1 + Σ_{n≥1} (tⁿ / ε^{θn}) n^{θn} / (n!)^{1/p}`.
///
/// Summation stops at the first `n` where the decreasing ratio majorant
/// `R_n = t ε^{-θ} e^θ (n+1)^{θ - 1/p}` is below `1/2` and the geometric tail
/// bound `a_n R_n / (1 - R_n)` is below `tail_tol`. Since
/// `(1 + 1/n)^{θn} ≤ e^θ`, `R_n` dominates every later term ratio.
pub fn e_series(t: f64, eps: f64, theta: f64, p: f64, tail_tol: f64) -> Result<SeriesValue> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(invalid("t", "must be finite and >= 0"));
    }
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(invalid("eps", "must be finite and > 0"));
    }
    if !(p > 0.0) || !p.is_finite() {
        return Err(invalid("p", "must be finite and > 0"));
    }
    if !(theta >= 0.0) {
        return Err(invalid("theta", "must be >= 0"));
    }
    if !(theta < 1.0 / p) {
        return Err(Error::SeriesDivergence {
            theta,
            bound: 1.0 / p,
        });
    }
    if !(tail_tol > 0.0) {
        return Err(invalid("tail_tol", "must be > 0"));
    }
    if t == 0.0 {
        return Ok(SeriesValue {
            value: 1.0,
            ln_value: 0.0,
            terms: 0,
            last_ratio: 0.0,
        });
    }
    let ln_lead = t.ln() - theta * eps.ln();
    let mut sum = LogSum::new();
    sum.add(0.0);
    let mut ln_fact = 0.0;
    for n in 1..=MAX_SERIES_TERMS {
        let nf = n as f64;
        ln_fact += nf.ln();
        let ln_term = nf * ln_lead + theta * nf * nf.ln() - ln_fact / p;
        sum.add(ln_term);
        let ratio = (ln_lead + theta + (theta - 1.0 / p) * (nf + 1.0).ln()).exp();
        if ratio < 0.5 {
            let ln_tail = ln_term + ratio.ln() - (1.0 - ratio).ln();
            if ln_tail < tail_tol.ln() {
                let ln_value = sum.ln();
                return Ok(SeriesValue {
                    value: ln_value.exp(),
                    ln_value,
                    terms: n,
                    last_ratio: ratio,
                });
            }
        }
    }
    Err(Error::SeriesTruncation {
        terms: MAX_SERIES_TERMS,
    })
}

fn check_q_above_p(p: f64, q: f64) -> Result<()> {
    if !(q > p) || !q.is_finite() {
        return Err(Error::Hypothesis(format!(
            "requires p in [2, q); got p = {p}, q = {q}"
        )));
    }
    Ok(())
}

/// Natural log of [`picard_bound`].
pub fn ln_picard_bound(n: usize, p: f64, q: f64, delta: f64, l: f64, t: f64) -> Result<f64> {
    check_p(p)?;
    check_q_above_p(p, q)?;
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(invalid("delta", "must be finite and > 0"));
    }
    let hl = hat_l(p, l, t)?;
    if n == 0 {
        return Ok(0.0);
    }
    let nf = n as f64;
    let ln_pow =
        nf * (p / q) * nf.ln() - ln_factorial(n) + nf * ((hl * t).ln() - (p / q) * delta.ln());
    Ok(ln_pow / p)
}

/// Z-norm contraction factor after `n` Picard steps,
/// `[(n^{np/q} / n!) (Ĺ(T) T / δ^{p/q})ⁿ]^{1/p}`, with `δ = β - α`.
pub fn picard_bound(n: usize, p: f64, q: f64, delta: f64, l: f64, t: f64) -> Result<f64> {
    Ok(ln_picard_bound(n, p, q, delta, l, t)?.exp())
}

/// Tail tolerance used for the series inside [`growth_bound`].
pub const GROWTH_TAIL_TOL: f64 = 1e-17;

/// Natural log of [`growth_bound`].
pub fn ln_growth_bound(p: f64, q: f64, l: f64, t: f64, delta: f64, u0_norm: f64) -> Result<f64> {
    check_p(p)?;
    check_q_above_p(p, q)?;
    if !(u0_norm >= 0.0) {
        return Err(invalid("u0_norm", "must be >= 0"));
    }
    let lead = (hat_l(p, l, t)? * t).powf(1.0 / p);
    let series = e_series(lead, delta, 1.0 / q, p, GROWTH_TAIL_TOL)?;
    Ok(series.ln_value + p * (1.0 + u0_norm).ln())
}

/// `E^{(p)}((Ĺ(T) T)^{1/p}, δ, 1/q) (1 + ‖u0‖_{α_*})^p`.
pub fn growth_bound(p: f64, q: f64, l: f64, t: f64, delta: f64, u0_norm: f64) -> Result<f64> {
    Ok(ln_growth_bound(p, q, l, t, delta, u0_norm)?.exp())
}

/// `k(ξ, T) = (T^{p/2} + [p/2 (p-1)]^{p/2}) 2^{p-1} L^p ‖ξ‖^p_Z`.
pub fn kolmogorov_constant(p: f64, l: f64, t: f64, z_norm: f64) -> Result<f64> {
    check_p(p)?;
    check_lt(l, t)?;
    Ok((t.powf(p / 2.0) + (p / 2.0 * (p - 1.0)).powf(p / 2.0))
        * 2f64.powf(p - 1.0)
        * l.powf(p)
        * z_norm.powf(p))
}

/// Bundle of the constants entering the contraction estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContractionConstants {
    pub p: f64,
    pub q: f64,
    pub l: f64,
    pub t: f64,
    pub hat_l: f64,
    pub a_t: f64,
    pub theta: f64,
}

impl ContractionConstants {
    pub fn new(p: f64, q: f64, l: f64, t: f64) -> Result<Self> {
        check_q_above_p(p, q)?;
        Ok(ContractionConstants {
            p,
            q,
            l,
            t,
            hat_l: hat_l(p, l, t)?,
            a_t: a_t(p, l, t)?,
            theta: 1.0 / q,
        })
    }

    pub fn picard_bound(&self, n: usize, delta: f64) -> Result<f64> {
        picard_bound(n, self.p, self.q, delta, self.l, self.t)
    }

    /// `n`-th term of the Cauchy estimate,
    /// `(Ĺ T)^{k/p} δ^{-k/q} k^{θk} / (k!)^{1/p}`.
    pub fn cauchy_term(&self, k: usize, delta: f64) -> f64 {
        if k == 0 {
            return 1.0;
        }
        let kf = k as f64;
        let ln = kf / self.p * (self.hat_l * self.t).ln() - kf / self.q * delta.ln()
            + self.theta * kf * kf.ln()
            - ln_factorial(k) / self.p;
        ln.exp()
    }
}

/// Least-squares continuity exponent of an ensemble.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KolmogorovFit {
    /// Slope of `log E‖ξ(t)-ξ(s)‖_β^p` against `log |t - s|`; `None` when degenerate.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    /// `max moment / |t - s|^{p/2}` over the sampled pairs.
    pub k_emp: f64,
    pub pairs_used: usize,
    pub degenerate: bool,
}

/// Fits the moment growth `E‖ξ(t)-ξ(s)‖_β^p ≈ k |t-s|^{slope}` over up to
/// `pair_budget` index pairs drawn uniformly (all pairs when the budget
/// covers them), sorted before evaluation.
pub fn kolmogorov_fit(
    ens: &ProcessEnsemble,
    beta: f64,
    p: f64,
    pair_budget: usize,
    seed: u64,
) -> Result<KolmogorovFit> {
    check_p(p)?;
    let times = ens.grid().n_times();
    if times < 8 {
        return Err(Error::DegenerateGrid("need at least 8 grid times".into()));
    }
    if pair_budget == 0 {
        return Err(invalid("pair_budget", "must be >= 1"));
    }
    let total = times * (times - 1) / 2;
    let mut pairs: Vec<(usize, usize)> = if pair_budget >= total {
        (0..times)
            .flat_map(|s| (s + 1..times).map(move |t| (s, t)))
            .collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..pair_budget)
            .map(|_| {
                let a = rng.random_range(0..times);
                let mut b = rng.random_range(0..times - 1);
                if b >= a {
                    b += 1;
                }
                (a.min(b), a.max(b))
            })
            .collect()
    };
    pairs.sort_unstable();
    let grid = *ens.grid();
    let mut xs = Vec::with_capacity(pairs.len());
    let mut ys = Vec::with_capacity(pairs.len());
    let mut k_emp: f64 = 0.0;
    for &(s, t) in &pairs {
        let m = increment_moment(ens, s, t, beta, p)?;
        let lag = grid.time(t) - grid.time(s);
        k_emp = k_emp.max(m / lag.powf(p / 2.0));
        if m > 0.0 {
            xs.push(lag.ln());
            ys.push(m.ln());
        }
    }
    let fit = if xs.len() == pairs.len() {
        least_squares(&xs, &ys)
    } else {
        None
    };
    Ok(KolmogorovFit {
        slope: fit.map(|f| f.0),
        intercept: fit.map(|f| f.1),
        k_emp,
        pairs_used: pairs.len(),
        degenerate: fit.is_none(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hat_l_examples() {
        assert_eq!(hat_l(2.0, 1.0, 1.0).unwrap(), 4.0);
        assert_eq!(hat_l(2.0, 0.0, 1.0).unwrap(), 0.0);
        assert_eq!(hat_l(2.0, 1.0, 4.0).unwrap(), 10.0);
        assert!(hat_l(1.5, 1.0, 1.0).is_err());
        assert!(hat_l(2.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn a_t_examples_and_dominance() {
        assert_eq!(a_p(2.0).unwrap(), 4.0);
        assert_eq!(a_t(2.0, 1.0, 1.0).unwrap(), 4.0);
        assert_eq!(a_t(2.0, 1.0, 0.25).unwrap(), 2.0);
        for p in [2.0, 3.0] {
            for t in [0.1, 0.5, 1.0, 2.0, 10.0] {
                let lhs = (hat_l(p, 1.0, t).unwrap() * t).powf(1.0 / p);
                assert!(lhs <= a_t(p, 1.0, t).unwrap(), "p={p} T={t}");
            }
        }
    }

    #[test]
    fn e_series_reduces_to_exponential() {
        for t in [0.1, 1.0, 5.0] {
            let e = e_series(t, 3.0, 0.0, 1.0, 1e-14).unwrap();
            assert!((e.value - f64::exp(t)).abs() <= 1e-10, "t={t}");
        }
        assert_eq!(e_series(0.0, 1.0, 0.2, 2.0, 1e-12).unwrap().value, 1.0);
    }

    #[test]
    fn e_series_refuses_outside_hypothesis() {
        assert!(matches!(
            e_series(1.0, 1.0, 0.5, 2.0, 1e-12),
            Err(Error::SeriesDivergence { .. })
        ));
        assert!(e_series(1.0, 1.0, 0.6, 2.0, 1e-12).is_err());
    }

    #[test]
    fn e_series_truncation_ratio_below_half() {
        let e = e_series(0.5, 1.0, 0.25, 2.0, 1e-14).unwrap();
        assert!(e.last_ratio < 0.5);
        assert!((e.value - 1.95).abs() < 0.01, "{}", e.value);
    }

    #[test]
    fn picard_bound_examples() {
        assert_eq!(picard_bound(0, 2.0, 4.0, 1.0, 1.0, 1.0).unwrap(), 1.0);
        let b1 = picard_bound(1, 2.0, 4.0, 1.0, 1.0, 1.0).unwrap();
        assert!((b1 - 2.0).abs() < 1e-15);
        assert!(picard_bound(3, 2.0, 4.0, 0.0, 1.0, 1.0).is_err());
        assert!(picard_bound(3, 2.0, 2.0, 1.0, 1.0, 1.0).is_err());
        let far = picard_bound(1000, 2.0, 4.0, 1.0, 1.0, 1.0).unwrap();
        assert!(far.is_finite() && far < 1e-100);
    }

    #[test]
    fn growth_bound_zero_coupling() {
        let g = growth_bound(2.0, 4.0, 0.0, 1.0, 1.0, 0.5).unwrap();
        assert!((g - 2.25).abs() < 1e-15);
        assert!(growth_bound(2.0, 2.0, 1.0, 1.0, 1.0, 0.0).is_err());
        let series = e_series(2.0, 1.0, 0.25, 2.0, 1e-17).unwrap().value;
        let g = growth_bound(2.0, 4.0, 1.0, 1.0, 1.0, 0.0).unwrap();
        assert!((g / series - 1.0).abs() < 1e-14);
    }

    #[test]
    fn cauchy_term_matches_picard_bound() {
        let c = ContractionConstants::new(2.0, 4.0, 0.7, 1.0).unwrap();
        for k in 0..10 {
            let a = c.cauchy_term(k, 1.3);
            let b = c.picard_bound(k, 1.3).unwrap();
            assert!((a / b - 1.0).abs() < 1e-12);
        }
    }
}
