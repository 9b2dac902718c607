//! Adaptive summation of positive series with slowly decaying tails.
//!
//! Terms are indexed by `k >= 1` and supplied as functions of the continuous
//! variable `u = ln(k + 1)`, which lets the tail beyond the truncation index be
//! integrated in closed-interval form. The remainder is the Euler-Maclaurin
//! correction
//!
//! ```text
//! sum_{k > N} g(k) = int_N^inf g(x) dx - g(N)/2 - g'(N)/12 + R,   |R| <= |g'(N)| / 12
//! ```
//!
//! valid when `g` is eventually monotone with single-signed `g''`, which holds
//! for every parametric family in this crate. The integral is evaluated with the
//! substitution `ln(x + 1) = ln(N + 1) / t`, mapping `[N, inf)` onto `(0, 1]`.

use crate::error::{Error, Result};

pub(crate) const N_MAX: usize = 10_000_000;
const N_START: usize = 64;
const MAX_INTERVALS: usize = 400;

/// One summand as `sign * exp(log_mag)`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Term {
    pub log_mag: f64,
    pub sign: f64,
}

impl Term {
    pub fn positive(log_mag: f64) -> Self {
        Term { log_mag, sign: 1.0 }
    }

    pub fn value(self) -> f64 {
        if self.log_mag == f64::NEG_INFINITY {
            0.0
        } else {
            self.sign * self.log_mag.exp()
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct SeriesValue {
    pub value: f64,
    pub n_used: usize,
    pub tail_bound: f64,
}

/// Sums `M` series sharing one truncation index. Inactive components are
/// reported as `+inf` without being evaluated.
pub(crate) fn sum_series<const M: usize, F>(
    term: F,
    active: [bool; M],
    rel_tol: f64,
) -> Result<[SeriesValue; M]>
where
    F: Fn(f64) -> [Term; M],
{
    let mut partial = [0.0f64; M];
    let mut scale = [0.0f64; M];
    let mut k = 1usize;
    let mut n = N_START;
    loop {
        while k <= n {
            let t = term(((k + 1) as f64).ln());
            for m in 0..M {
                if active[m] {
                    let v = t[m].value();
                    partial[m] += v;
                    scale[m] += v.abs();
                }
            }
            k += 1;
        }

        let (tail, bound) = tail_estimate(&term, &active, n, &scale, rel_tol)?;
        let done = (0..M).all(|m| !active[m] || bound[m] <= rel_tol * scale[m]);
        if done {
            let mut out = [SeriesValue {
                value: f64::INFINITY,
                n_used: n,
                tail_bound: f64::INFINITY,
            }; M];
            for m in 0..M {
                if active[m] {
                    out[m].value = partial[m] + tail[m];
                    out[m].tail_bound = bound[m];
                }
            }
            return Ok(out);
        }
        if n >= N_MAX {
            return Err(Error::Divergent(format!(
                "tail bound did not reach relative tolerance {rel_tol:e} before n = {N_MAX}"
            )));
        }
        n = (2 * n).min(N_MAX);
    }
}

fn tail_estimate<const M: usize, F>(
    term: &F,
    active: &[bool; M],
    n: usize,
    scale: &[f64; M],
    rel_tol: f64,
) -> Result<([f64; M], [f64; M])>
where
    F: Fn(f64) -> [Term; M],
{
    let big_u = ((n + 1) as f64).ln();
    let log_u = big_u.ln();
    let integrand = |t: f64| -> [f64; M] {
        let u = big_u / t;
        let terms = term(u);
        let jac = u + log_u - 2.0 * t.ln();
        let mut out = [0.0; M];
        for m in 0..M {
            if active[m] && terms[m].log_mag > f64::NEG_INFINITY {
                out[m] = terms[m].sign * (terms[m].log_mag + jac).exp();
            }
        }
        out
    };
    // A non-integrable endpoint singularity at t = 0 means the series diverges.
    let (w_far, w_near) = (integrand(1e-8), integrand(1e-12));
    for m in 0..M {
        let (a, b) = ((1e-8 * w_far[m]).abs(), (1e-12 * w_near[m]).abs());
        if active[m] && (!b.is_finite() || (b > 1e-300 && b >= 0.5 * a)) {
            return Err(Error::Divergent(
                "tail integrand is not integrable at infinity".into(),
            ));
        }
    }
    let mut abs_tol = [0.0; M];
    for m in 0..M {
        abs_tol[m] = 0.05 * rel_tol * scale[m];
    }
    let (integral, quad_err) = gauss_kronrod(integrand, 0.0, 1.0, &abs_tol);

    let g_at = |x: f64| term((x + 1.0).ln());
    let g0 = g_at(n as f64);
    let gp = g_at(n as f64 + 0.5);
    let gm = g_at(n as f64 - 0.5);

    let mut tail = [0.0; M];
    let mut bound = [0.0; M];
    for m in 0..M {
        if !active[m] {
            continue;
        }
        if !integral[m].is_finite() {
            return Err(Error::Divergent("tail integral is not finite".into()));
        }
        let deriv = gp[m].value() - gm[m].value();
        tail[m] = integral[m] - 0.5 * g0[m].value() - deriv / 12.0;
        bound[m] = deriv.abs() / 12.0 + quad_err[m];
    }
    Ok((tail, bound))
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<const M: usize, F: Fn(f64) -> [f64; M]>(f: &F, a: f64, b: f64) -> ([f64; M], [f64; M]) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = [0.0; M];
    let mut gauss = [0.0; M];
    for m in 0..M {
        kron[m] = WGK[7] * fc[m];
        gauss[m] = WG[3] * fc[m];
    }
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        for m in 0..M {
            let s = f1[m] + f2[m];
            kron[m] += WGK[j] * s;
            if j % 2 == 1 {
                gauss[m] += WG[j / 2] * s;
            }
        }
    }
    let mut err = [0.0; M];
    for m in 0..M {
        kron[m] *= h;
        gauss[m] *= h;
        err[m] = (kron[m] - gauss[m]).abs();
    }
    (kron, err)
}

/// Globally adaptive Gauss-Kronrod (7/15) quadrature of a vector-valued
/// integrand. Returns the integral and an error estimate per component.
pub(crate) fn gauss_kronrod<const M: usize, F: Fn(f64) -> [f64; M]>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: &[f64; M],
) -> ([f64; M], [f64; M]) {
    let mut intervals = vec![(a, b, gk15(&f, a, b))];
    loop {
        let mut total = [0.0; M];
        let mut err = [0.0; M];
        for (_, _, (v, e)) in &intervals {
            for m in 0..M {
                total[m] += v[m];
                err[m] += e[m];
            }
        }
        let converged = (0..M).all(|m| {
            err[m] <= abs_tol[m].max(1e-15 * total[m].abs()) || !err[m].is_finite()
        });
        if converged || intervals.len() >= MAX_INTERVALS {
            return (total, err);
        }
        // Split the interval with the largest error relative to its tolerance.
        let worst = intervals
            .iter()
            .enumerate()
            .map(|(i, (_, _, (_, e)))| {
                let w = (0..M)
                    .map(|m| e[m] / abs_tol[m].max(1e-300))
                    .fold(0.0, f64::max);
                (i, w)
            })
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc })
            .0;
        let (lo, hi, _) = intervals.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        intervals.push((lo, mid, gk15(&f, lo, mid)));
        intervals.push((mid, hi, gk15(&f, mid, hi)));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_series() {
        // sum_{k>=1} 2^-k = 1, sum k 2^-k = 2
        let r = sum_series(
            |u| {
                let k = u.exp() - 1.0;
                [
                    Term::positive(-k * 2f64.ln()),
                    Term::positive(k.ln() - k * 2f64.ln()),
                ]
            },
            [true, true],
            1e-13,
        )
        .unwrap();
        assert!((r[0].value - 1.0).abs() < 1e-12, "{}", r[0].value);
        assert!((r[1].value - 2.0).abs() < 1e-12, "{}", r[1].value);
    }

    #[test]
    fn basel_with_tail() {
        // sum 1/k^2 = pi^2/6, slow tail handled by the integral correction.
        let r = sum_series(
            |u| {
                let k = u.exp() - 1.0;
                [Term::positive(-2.0 * k.ln())]
            },
            [true],
            1e-12,
        )
        .unwrap();
        let exact = std::f64::consts::PI.powi(2) / 6.0;
        assert!((r[0].value - exact).abs() < 1e-11, "{}", r[0].value - exact);
        assert!(r[0].n_used < 100_000);
    }

    #[test]
    fn inactive_component_is_infinite() {
        let r = sum_series(
            |u| [Term::positive(-2.0 * u), Term::positive(0.0)],
            [true, false],
            1e-10,
        )
        .unwrap();
        assert!(r[1].value.is_infinite());
    }

    #[test]
    fn harmonic_series_diverges() {
        let r = sum_series(|u| [Term::positive(-u)], [true], 1e-10);
        assert!(matches!(r, Err(Error::Divergent(_))));
    }

    #[test]
    fn quadrature_polynomial() {
        let (v, _) = gauss_kronrod(|x| [x * x, x.sin()], 0.0, 2.0, &[1e-14, 1e-14]);
        assert!((v[0] - 8.0 / 3.0).abs() < 1e-13);
        assert!((v[1] - (1.0 - 2f64.cos())).abs() < 1e-13);
    }
}
