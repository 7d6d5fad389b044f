//! The functions `h_q(p)` comparing shifted and unshifted Gibbs Hamiltonians,
//! the constants `D_z`, and sweeps of the inequalities they satisfy.
//!
//! `h_q(p) = ln[(2 ∓ γ₀(p+q) ∓ γ₀(p−q)) / (γ₀(p+q) + γ₀(p−q))]` with
//! `γ₀(k) = 1/(z⁻¹e^{βk²} ± 1)`; `h_0(p) = βp² − ln z`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{domain, Result};
use crate::quadrature::Integrator;
use crate::report::SweepReport;
use crate::statmech::Statistics;

/// Numerical slack for the lemma sweeps.
pub const LEMMA_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HqPoint {
    pub p: [f64; 3],
    pub q: [f64; 3],
    pub beta: f64,
    pub z: f64,
    pub stats: Statistics,
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn axpy(a: [f64; 3], t: f64, b: [f64; 3]) -> [f64; 3] {
    [a[0] + t * b[0], a[1] + t * b[1], a[2] + t * b[2]]
}

/// `ln(e^a + e^b)`.
fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(1 + e^x)`.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `(ln γ, ln(1 ∓ γ))` for `γ = 1/(e^a ± 1)`; for bosons `a > 0`.
fn log_occupation(a: f64, stats: Statistics) -> (f64, f64) {
    match stats {
        Statistics::Fermi => (-softplus(a), -softplus(-a)),
        Statistics::Bose => {
            let l = (-(-a).exp()).ln_1p();
            (-a - l, -l)
        }
    }
}

/// Occupation `γ` together with `1 ∓ γ`, both as plain numbers.
fn occupation_pair(a: f64, stats: Statistics) -> (f64, f64) {
    let (lg, lc) = log_occupation(a, stats);
    (lg.exp(), lc.exp())
}

impl HqPoint {
    pub fn new(p: [f64; 3], q: [f64; 3], beta: f64, z: f64, stats: Statistics) -> Result<Self> {
        let pt = Self { p, q, beta, z, stats };
        pt.validate()?;
        Ok(pt)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(domain(format!("β must be positive and finite, got {}", self.beta)));
        }
        if !(self.z > 0.0 && self.z.is_finite()) {
            return Err(domain(format!("fugacity must be positive, got {}", self.z)));
        }
        if self.stats == Statistics::Bose && self.z >= 1.0 {
            return Err(domain(format!("bosonic fugacity must be below 1, got {}", self.z)));
        }
        if self.p.iter().chain(&self.q).any(|x| !x.is_finite()) {
            return Err(domain("momenta must be finite"));
        }
        Ok(())
    }

    /// The same point with `q` replaced by `λq`.
    pub fn scaled(&self, lambda: f64) -> Self {
        Self { q: self.q.map(|x| lambda * x), ..*self }
    }

    /// `a = βk² − ln z`, the exponent in `γ₀(k) = 1/(e^a ± 1)`.
    fn exponent(&self, k: [f64; 3]) -> f64 {
        self.beta * dot(k, k) - self.z.ln()
    }

    pub fn h0(&self) -> f64 {
        self.exponent(self.p)
    }

    pub fn p_dot_q(&self) -> f64 {
        dot(self.p, self.q)
    }

    pub fn q2(&self) -> f64 {
        dot(self.q, self.q)
    }

    pub fn p2(&self) -> f64 {
        dot(self.p, self.p)
    }

    pub fn to_json(&self) -> Value {
        json!({ "p": self.p, "q": self.q, "beta": self.beta, "z": self.z, "stats": self.stats })
    }
}

/// Random point with momentum components in (−1.5, 1.5), β in (0.3, 3) and
/// z in (0.05, 8) for fermions, (0.05, 0.95) for bosons.
pub fn random_point<R: Rng + ?Sized>(rng: &mut R, stats: Statistics) -> HqPoint {
    let mut v = || [0, 1, 2].map(|_| rng.random_range(-1.5..1.5));
    let (p, q) = (v(), v());
    let beta = rng.random_range(0.3..3.0);
    let z = match stats {
        Statistics::Fermi => rng.random_range(0.05..8.0),
        Statistics::Bose => rng.random_range(0.05..0.95),
    };
    HqPoint { p, q, beta, z, stats }
}

/// `h_q(p)`, evaluated through logarithms so that it stays accurate when both
/// occupations underflow.
pub fn h_q(point: &HqPoint) -> Result<f64> {
    point.validate()?;
    let ap = point.exponent(axpy(point.p, 1.0, point.q));
    let am = point.exponent(axpy(point.p, -1.0, point.q));
    let (gp, cp) = log_occupation(ap, point.stats);
    let (gm, cm) = log_occupation(am, point.stats);
    Ok(log_add(cp, cm) - log_add(gp, gm))
}

/// `h_q(p)` straight from the definition, for comparison.
pub fn h_q_naive(point: &HqPoint) -> Result<f64> {
    point.validate()?;
    let s = point.stats.upper_plus();
    let g = |k: [f64; 3]| 1.0 / (point.exponent(k).exp() + s);
    let (gp, gm) = (g(axpy(point.p, 1.0, point.q)), g(axpy(point.p, -1.0, point.q)));
    let m = point.stats.upper_minus();
    Ok(((2.0 + m * gp + m * gm) / (gp + gm)).ln())
}

/// `D_z`: `sup_u zu/(e^u + z)` for fermions and `sup_u z²u e^u/(e^u − z)²`
/// for bosons.
pub fn d_z_constant(z: f64, stats: Statistics) -> Result<f64> {
    if !(z > 0.0 && z.is_finite()) || (stats == Statistics::Bose && z >= 1.0) {
        return Err(domain(format!("D_z undefined for z = {z} ({stats})")));
    }
    let objective = |u: f64| match stats {
        Statistics::Fermi => z * u / (u.exp() + z),
        // z²u e^{−u}/(1 − z e^{−u})², overflow-free.
        Statistics::Bose => {
            let x = z * (-u).exp();
            z * u * x / ((1.0 - x) * (1.0 - x))
        }
    };
    // Grow U until the objective has clearly decayed past its peak.
    let mut upper = 4.0;
    loop {
        let peak = (1..=400).map(|i| objective(upper * i as f64 / 400.0)).fold(0.0, f64::max);
        if objective(upper) < 1e-3 * peak {
            break;
        }
        upper *= 2.0;
    }
    let n = 4000;
    let step = upper / n as f64;
    let best = (1..=n).max_by(|&a, &b| objective(a as f64 * step).total_cmp(&objective(b as f64 * step))).unwrap_or(1);
    let (mut a, mut b) = ((best as f64 - 1.0) * step, (best as f64 + 1.0) * step);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (objective(c), objective(d));
    for _ in 0..200 {
        if b - a <= 1e-15 * b {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = objective(d);
        }
    }
    Ok(objective(0.5 * (a + b)).max(fc).max(fd))
}

/// The closed form of `f″(λ)` for `f(λ) = h_{λq}(p)`, split as in its
/// derivation into two bracketed groups and a final nonnegative term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondDerivative {
    pub first: f64,
    pub second: f64,
    /// Nonnegative and at most `4βq²`.
    pub last: f64,
}

impl SecondDerivative {
    pub fn total(&self) -> f64 {
        self.first + self.second + self.last
    }
}

/// `f″(λ)` in closed form. Ratios such as `γ₊/(γ₊ + γ₋)` are formed from
/// logarithms, which keeps the expression finite when the occupations
/// underflow.
pub fn f_second_derivative(point: &HqPoint, lambda: f64) -> Result<SecondDerivative> {
    point.validate()?;
    // Work in units with β = 1: k → √β k.
    let sb = point.beta.sqrt();
    let p = point.p.map(|x| sb * x);
    let q = point.q.map(|x| sb * x);
    let pp = axpy(p, lambda, q);
    let pm = axpy(p, -lambda, q);
    let (sp, sm) = (dot(pp, q), dot(pm, q));
    let q2 = dot(q, q);
    let lnz = point.z.ln();
    let (lgp, lcp) = log_occupation(dot(pp, pp) - lnz, point.stats);
    let (lgm, lcm) = log_occupation(dot(pm, pm) - lnz, point.stats);
    let (gp, cp, gm, cm) = (lgp.exp(), lcp.exp(), lgm.exp(), lcm.exp());
    // w± = γ±/(γ₊ + γ₋), v± = (1 ∓ γ±)/(2 ∓ γ₊ ∓ γ₋).
    let wp = 1.0 / (1.0 + (lgm - lgp).exp());
    let wm = 1.0 / (1.0 + (lgp - lgm).exp());
    let vp = 1.0 / (1.0 + (lcm - lcp).exp());
    let vm = 1.0 / (1.0 + (lcp - lcm).exp());
    let pm_sign = point.stats.upper_plus();
    let mp_sign = point.stats.upper_minus();

    let first = pm_sign
        * 4.0
        * (sp * sp * gp * wp * cp + sm * sm * gm * wm * cm + mp_sign * wp * wm * (sp * cp + sm * cm).powi(2));
    let second = mp_sign
        * 4.0
        * (sp * sp * cp * vp * gp + sm * sm * cm * vm * gm + mp_sign * vp * vm * (sp * gp + sm * gm).powi(2));
    let last = 2.0 * q2 * (pm_sign * (gp * vp + gm * vm) + (wp * cp + wm * cm));
    Ok(SecondDerivative { first, second, last })
}

/// `f″(λ)` from the unsimplified expression (squared first derivatives and
/// second derivatives of the occupations), used as a cross-check.
pub fn f_second_derivative_direct(point: &HqPoint, lambda: f64) -> Result<f64> {
    point.validate()?;
    let sb = point.beta.sqrt();
    let p = point.p.map(|x| sb * x);
    let q = point.q.map(|x| sb * x);
    let (pp, pm) = (axpy(p, lambda, q), axpy(p, -lambda, q));
    let (sp, sm) = (dot(pp, q), dot(pm, q));
    let q2 = dot(q, q);
    let lnz = point.z.ln();
    let (gp, cp) = occupation_pair(dot(pp, pp) - lnz, point.stats);
    let (gm, cm) = occupation_pair(dot(pm, pm) - lnz, point.stats);
    let m = point.stats.upper_minus();
    let half = |g: f64| 0.5 + m * g;
    let big = 2.0 + m * gp + m * gm;
    let small = gp + gm;
    let d1 = 2.0 * sp * gp * cp - 2.0 * sm * gm * cm;
    let d2 = -2.0 * q2 * gp * cp - 2.0 * q2 * gm * cm + 8.0 * sp * sp * gp * cp * half(gp) + 8.0 * sm * sm * gm * cm * half(gm);
    Ok((-1.0 / (big * big) + 1.0 / (small * small)) * d1 * d1 - (-m / big + 1.0 / small) * d2)
}

/// Centered difference `[f(λ+h) − 2f(λ) + f(λ−h)]/h²` of `λ ↦ h_{λq}(p)`.
pub fn f_second_difference(point: &HqPoint, lambda: f64, step: f64) -> Result<f64> {
    let f = |l: f64| h_q(&point.scaled(l));
    Ok((f(lambda + step)? - 2.0 * f(lambda)? + f(lambda - step)?) / (step * step))
}

/// Centered difference `[f(h) − f(−h)]/2h` at `λ = 0`.
pub fn f_first_difference_at_zero(point: &HqPoint, step: f64) -> Result<f64> {
    Ok((h_q(&point.scaled(step))? - h_q(&point.scaled(-step))?) / (2.0 * step))
}

/// Forward difference `[f(h) − f(0)]/h`; it vanishes linearly in `h` because
/// `f′(0) = 0`.
pub fn f_forward_difference_at_zero(point: &HqPoint, step: f64) -> Result<f64> {
    Ok((h_q(&point.scaled(step))? - h_q(&point.scaled(0.0))?) / step)
}

/// Both sides of `f(1) − f(0) = ∫₀¹ (1 − λ) f″(λ) dλ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaylorCheck {
    pub lhs: f64,
    pub rhs: f64,
}

impl TaylorCheck {
    /// `|lhs − rhs|`, relative to `|lhs|` when that exceeds 1e−12.
    pub fn residual(&self) -> f64 {
        (self.lhs - self.rhs).abs() / self.lhs.abs().max(1e-12)
    }
}

pub fn taylor_identity_check(point: &HqPoint) -> Result<TaylorCheck> {
    let lhs = h_q(point)? - point.h0();
    if point.q2() == 0.0 {
        return Ok(TaylorCheck { lhs, rhs: 0.0 });
    }
    let integrand = |l: f64| (1.0 - l) * f_second_derivative(point, l).map_or(f64::NAN, |d| d.total());
    let rhs = Integrator::new(1e-12).with_abs_tol(1e-15).integrate(integrand, 0.0, 1.0)?.value;
    Ok(TaylorCheck { lhs, rhs })
}

/// Sweep grid over `(|p|, |q|, cos θ, β, z)`; `|p|` and `|q|` are geometric
/// in units of `β^{−1/2}`, and `p ∥ ẑ` with `q` in the xz-plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub stats: Statistics,
    pub p_range: (f64, f64, usize),
    pub q_range: (f64, f64, usize),
    pub cos_angles: Vec<f64>,
    pub betas: Vec<f64>,
    pub fugacities: Vec<f64>,
}

fn geometric(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    (0..count).map(|i| lo * (hi / lo).powf(i as f64 / (count - 1) as f64)).collect()
}

impl SweepGrid {
    /// 10 × 10 × 5 × 3 × 3 = 4500 points.
    pub fn default_for(stats: Statistics) -> Self {
        let fugacities = match stats {
            Statistics::Fermi => vec![0.1, 1.0, 10.0],
            Statistics::Bose => vec![0.3, 0.7, 0.95],
        };
        Self {
            stats,
            p_range: (1e-2, 10.0, 10),
            q_range: (1e-2, 10.0, 10),
            cos_angles: vec![-1.0, -0.5, 0.0, 0.5, 1.0],
            betas: vec![0.5, 1.0, 4.0],
            fugacities,
        }
    }

    pub fn len(&self) -> usize {
        self.p_range.2 * self.q_range.2 * self.cos_angles.len() * self.betas.len() * self.fugacities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn points(&self) -> Vec<HqPoint> {
        let ps = geometric(self.p_range.0, self.p_range.1, self.p_range.2);
        let qs = geometric(self.q_range.0, self.q_range.1, self.q_range.2);
        let mut out = Vec::with_capacity(self.len());
        for &beta in &self.betas {
            let unit = beta.powf(-0.5);
            for &z in &self.fugacities {
                for &p in &ps {
                    for &q in &qs {
                        for &c in &self.cos_angles {
                            let s = (1.0 - c * c).max(0.0).sqrt();
                            out.push(HqPoint {
                                p: [0.0, 0.0, p * unit],
                                q: [q * unit * s, 0.0, q * unit * c],
                                beta,
                                z,
                                stats: self.stats,
                            });
                        }
                    }
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).unwrap_or(Value::Null)
    }
}

/// Margins of the lemma inequalities at one point, each `≥ 0` when it holds.
///
/// Fermions: `−2βq²(3D_z + 2βp²) ≤ Δ ≤ 2βq²(1 + 2D_z)` and
/// `β(q² − 2|p·q|) ≤ Δ ≤ β(q² + 2|p·q|)`.
/// Bosons: `−2βq²(3D_z + 2βp²) ≤ Δ ≤ βq²` and `Δ ≥ β(q² − 2|p·q|)`.
/// Here `Δ = h_q(p) − h_0(p)`.
pub fn lemma_margins(point: &HqPoint, d_z: f64) -> Result<Vec<f64>> {
    let delta = h_q(point)? - point.h0();
    let b = point.beta;
    let q2 = point.q2();
    let pq = point.p_dot_q().abs();
    let lower = -2.0 * b * q2 * (3.0 * d_z + 2.0 * b * point.p2());
    let cross_lower = b * (q2 - 2.0 * pq);
    Ok(match point.stats {
        Statistics::Fermi => vec![
            delta - lower,
            2.0 * b * q2 * (1.0 + 2.0 * d_z) - delta,
            delta - cross_lower,
            b * (q2 + 2.0 * pq) - delta,
        ],
        Statistics::Bose => vec![delta - lower, b * q2 - delta, delta - cross_lower],
    })
}

fn sweep(name: &str, grid: &SweepGrid) -> Result<SweepReport> {
    let constants: Vec<(f64, f64)> =
        grid.fugacities.iter().map(|&z| Ok((z, d_z_constant(z, grid.stats)?))).collect::<Result<_>>()?;
    let points = grid.points();
    let margins: Vec<Vec<f64>> = points
        .par_iter()
        .map(|pt| {
            let d = constants.iter().find(|(z, _)| *z == pt.z).map(|c| c.1).unwrap_or(f64::NAN);
            lemma_margins(pt, d)
        })
        .collect::<Result<_>>()?;
    let mut report = SweepReport::new(name, grid.to_json(), LEMMA_SLACK);
    for (pt, m) in points.iter().zip(&margins) {
        report.record(m, || json!({ "point": pt.to_json(), "margins": m }));
    }
    Ok(report)
}

/// Check the fermionic inequalities at every grid point.
pub fn sweep_lemma1(grid: &SweepGrid) -> Result<SweepReport> {
    if grid.stats != Statistics::Fermi {
        return Err(domain("the fermionic sweep needs a fermionic grid"));
    }
    sweep("lemma-fermi", grid)
}

/// Check the bosonic inequalities at every grid point.
pub fn sweep_lemma2(grid: &SweepGrid) -> Result<SweepReport> {
    if grid.stats != Statistics::Bose {
        return Err(domain("the bosonic sweep needs a bosonic grid"));
    }
    sweep("lemma-bose", grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pt(p: f64, q: f64, beta: f64, z: f64, stats: Statistics) -> HqPoint {
        HqPoint::new([p, 0.0, 0.0], [q, 0.0, 0.0], beta, z, stats).unwrap()
    }

    /// Fixed-point numbers with 256 fractional bits (about 77 digits).
    #[derive(Clone)]
    struct Fixed(BigInt);

    const BITS: u32 = 256;

    impl Fixed {
        fn one() -> BigInt {
            BigInt::from(1) << BITS
        }
        fn from_ratio(num: i64, den: i64) -> Self {
            Fixed((BigInt::from(num) << BITS) / den)
        }
        fn int(n: i64) -> Self {
            Fixed(BigInt::from(n) << BITS)
        }
        fn add(&self, o: &Fixed) -> Fixed {
            Fixed(&self.0 + &o.0)
        }
        fn sub(&self, o: &Fixed) -> Fixed {
            Fixed(&self.0 - &o.0)
        }
        fn mul(&self, o: &Fixed) -> Fixed {
            Fixed((&self.0 * &o.0) >> BITS)
        }
        fn div(&self, o: &Fixed) -> Fixed {
            Fixed((&self.0 << BITS) / &o.0)
        }
        fn to_f64(&self) -> f64 {
            let shifted: BigInt = &self.0 >> (BITS - 60);
            let v: i64 = shifted.try_into().unwrap();
            v as f64 / (1u64 << 60) as f64
        }
        /// `e^x` for `|x| ≲ 10`: halve the argument, sum the series, square back.
        fn exp(&self) -> Fixed {
            let k = 16;
            let x = Fixed(&self.0 >> k);
            let mut term = Fixed(Self::one());
            let mut sum = term.clone();
            for n in 1..80 {
                term = term.mul(&x).div(&Fixed::int(n));
                sum = sum.add(&term);
            }
            for _ in 0..k {
                sum = sum.mul(&sum);
            }
            sum
        }
        /// `ln x` by Newton iteration on `e^y = x`, started from the f64 value.
        fn ln(&self) -> Fixed {
            let start = self.to_f64().ln();
            let mut y = Fixed((BigInt::from((start * (1u64 << 52) as f64) as i64)) << (BITS - 52));
            for _ in 0..8 {
                let e = y.exp();
                y = y.add(&self.sub(&e).div(&e));
            }
            y
        }
    }

    #[test]
    fn extended_precision_oracle() {
        // β = 1, z = 1/2, p = (1,0,0), q = (0.3,0,0), fermions:
        // γ(k) = 1/(2e^{k²} + 1) at k² = 1.69 and 0.49.
        let g = |k2: Fixed| Fixed::int(1).div(&Fixed::int(2).mul(&k2.exp()).add(&Fixed::int(1)));
        let (gp, gm) = (g(Fixed::from_ratio(169, 100)), g(Fixed::from_ratio(49, 100)));
        let ratio = Fixed::int(2).sub(&gp).sub(&gm).div(&gp.add(&gm));
        let exact = ratio.ln().to_f64();
        assert!((exact - 1.662_125_853_661_095_7).abs() < 1e-15);
        let v = h_q(&pt(1.0, 0.3, 1.0, 0.5, Statistics::Fermi)).unwrap();
        assert!((v - exact).abs() < 1e-14 * exact, "{v} {exact}");
    }

    #[test]
    fn q_zero_and_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for stats in [Statistics::Fermi, Statistics::Bose] {
            for _ in 0..20 {
                let x = random_point(&mut rng, stats);
                let zero = x.scaled(0.0);
                assert!((h_q(&zero).unwrap() - x.h0()).abs() <= 1e-12 * x.h0().abs().max(1.0));
                assert_eq!(h_q(&x).unwrap(), h_q(&x.scaled(-1.0)).unwrap());
            }
        }
    }

    #[test]
    fn stable_form_matches_naive() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for stats in [Statistics::Fermi, Statistics::Bose] {
            for _ in 0..200 {
                let x = random_point(&mut rng, stats);
                let (a, b) = (h_q(&x).unwrap(), h_q_naive(&x).unwrap());
                assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0), "{a} {b}");
            }
        }
        // Far out the naive form breaks down; the stable one stays exact.
        let far = pt(30.0, 1.0, 1.0, 0.5, Statistics::Fermi);
        assert!(!h_q_naive(&far).unwrap().is_finite());
        let v = h_q(&far).unwrap();
        // Δ ≈ q² − 2pq + ln 2 + O(e^{−120}) when γ(p−q) dominates: h = a₋ + ln 2 − ln(1 + e^{a₋−a₊}).
        let (ap, am) = (961.0 - 0.5f64.ln(), 841.0 - 0.5f64.ln());
        let expect = am + 2f64.ln() - (am - ap).exp().ln_1p();
        assert!((v - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn d_z_values() {
        // Fermi z = 1: u* − 1 with e^{u*}(u* − 1) = 1, the Lambert W(1/e).
        let d = d_z_constant(1.0, Statistics::Fermi).unwrap();
        assert!((d - 0.278_464_542_761_074).abs() < 1e-12);
        let mut w: f64 = 0.3;
        for _ in 0..50 {
            w -= (w * w.exp() - (-1f64).exp()) / (w.exp() * (1.0 + w));
        }
        assert!((d - w).abs() < 1e-10 * w);
        // Small z: D_z / z → sup u e^{−u} = 1/e.
        let small = d_z_constant(1e-8, Statistics::Fermi).unwrap();
        assert!((small / 1e-8 - (-1f64).exp()).abs() < 1e-7);
        for stats in [Statistics::Fermi, Statistics::Bose] {
            let zs: Vec<f64> = (1..=20).map(|i| 0.047 * i as f64).collect();
            let ds: Vec<f64> = zs.iter().map(|&z| d_z_constant(z, stats).unwrap()).collect();
            assert!(ds.windows(2).all(|w| w[1] > w[0]));
            assert!(ds.iter().all(|d| d.is_finite() && *d > 0.0));
        }
        assert!(d_z_constant(1.0, Statistics::Bose).is_err());
    }

    #[test]
    fn lemma_sweeps_pass() {
        let r1 = sweep_lemma1(&SweepGrid::default_for(Statistics::Fermi)).unwrap();
        let r2 = sweep_lemma2(&SweepGrid::default_for(Statistics::Bose)).unwrap();
        for r in [&r1, &r2] {
            assert_eq!(r.points, 4500);
            assert!(r.passed(), "{:?}", r.violating_points.first());
        }
    }

    #[test]
    fn sweep_edge_cases() {
        for stats in [Statistics::Fermi, Statistics::Bose] {
            let x = pt(0.0, 0.0, 1.0, 0.5, stats);
            let d = d_z_constant(0.5, stats).unwrap();
            for m in lemma_margins(&x, d).unwrap() {
                assert!(m.abs() < 1e-15);
            }
        }
        // βp² = 50: the quadratic lower bound holds with room.
        let far = pt(50f64.sqrt(), 0.5, 1.0, 1.0, Statistics::Fermi);
        let m = lemma_margins(&far, d_z_constant(1.0, Statistics::Fermi).unwrap()).unwrap();
        assert!(m[0] > 0.0);
        // Bosonic small-q ratio Δ/βq² stays below 1.
        let ratio = |q: f64| {
            let x = pt(0.7, q, 1.0, 0.9, Statistics::Bose);
            (h_q(&x).unwrap() - x.h0()) / (x.beta * x.q2())
        };
        assert!(ratio(1e-3) <= 1.0 && (ratio(1e-3) - ratio(2e-3)).abs() < 1e-3);
    }

    #[test]
    fn second_derivative_forms_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for stats in [Statistics::Fermi, Statistics::Bose] {
            for _ in 0..20 {
                let x = random_point(&mut rng, stats);
                let l = rng.random_range(0.0..1.0);
                let closed = f_second_derivative(&x, l).unwrap();
                let direct = f_second_derivative_direct(&x, l).unwrap();
                let fd = f_second_difference(&x, l, 1e-4).unwrap();
                let scale = closed.total().abs().max(1e-3 * x.beta * x.q2());
                assert!((closed.total() - direct).abs() < 1e-10 * scale.max(1e-12), "{closed:?} {direct}");
                assert!((closed.total() - fd).abs() < 1e-5 * scale, "{stats} {} {fd}", closed.total());
                assert!(closed.last >= 0.0 && closed.last <= 4.0 * x.beta * x.q2() * (1.0 + 1e-12));
            }
        }
        let zero = pt(0.8, 0.0, 1.0, 0.5, Statistics::Fermi);
        assert_eq!(f_second_derivative(&zero, 0.4).unwrap().total(), 0.0);
    }

    #[test]
    fn taylor_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for stats in [Statistics::Fermi, Statistics::Bose] {
            for _ in 0..20 {
                let x = random_point(&mut rng, stats);
                let t = taylor_identity_check(&x).unwrap();
                assert!(t.residual() <= 1e-8, "{t:?}");
            }
        }
        let t = taylor_identity_check(&pt(0.5, 0.0, 2.0, 0.3, Statistics::Bose)).unwrap();
        assert!(t.lhs.abs() < 1e-15 && t.rhs == 0.0);
    }

    #[test]
    fn first_derivative_vanishes_at_zero() {
        let x = HqPoint::new([0.4, -0.2, 0.9], [0.7, 0.1, -0.3], 1.3, 0.6, Statistics::Fermi).unwrap();
        assert!(f_first_difference_at_zero(&x, 1e-3).unwrap().abs() < 1e-6);
        // The forward difference shrinks linearly with the step.
        let (a, b) = (f_forward_difference_at_zero(&x, 1e-2).unwrap(), f_forward_difference_at_zero(&x, 5e-3).unwrap());
        assert!((a / b - 2.0).abs() < 0.02, "{a} {b}");
    }
}
