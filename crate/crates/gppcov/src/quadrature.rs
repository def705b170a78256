//! Adaptive Gauss-Kronrod quadrature, semi-infinite integrals, series
//! summation with certified stopping, and Euler-Maclaurin tail closure for
//! slowly decaying index sums.
//!
//! Everything here is deterministic: the global refinement queue breaks
//! error ties by insertion order, and the final reduction sums panels sorted
//! by position with compensated arithmetic, so identical inputs produce
//! bitwise identical results regardless of how the panel queue happened to
//! reorder internally.
//!
//! The Euler-Maclaurin engine matters more than it may look: several index
//! sums in the analytic module decay only polynomially (like i^(-βk) with β
//! possibly as small as 1.25), so direct summation to tolerance is hopeless
//! and the tail beyond the summed range must be closed analytically.

use crate::error::{Error, Result};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Accuracy/effort knobs shared by every numerical routine in the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericsPolicy {
    /// Target relative tolerance for integrals and series.
    pub rel_tol: f64,
    /// Absolute floor below which contributions may be discarded.
    pub abs_tol: f64,
    /// Hard cap on series indices before truncation is declared a failure.
    pub max_series_index: usize,
    /// Maximum bisection depth per quadrature panel.
    pub max_quad_depth: u32,
}

impl Default for NumericsPolicy {
    fn default() -> Self {
        NumericsPolicy {
            rel_tol: 1e-6,
            abs_tol: 1e-9,
            max_series_index: 4096,
            max_quad_depth: 30,
        }
    }
}

impl NumericsPolicy {
    /// # Errors
    ///
    /// `Domain` when a field is outside its sane range (tolerances must be
    /// positive, rel_tol <= 1, caps must leave room to work).
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol <= 1.0) {
            return Err(Error::Domain(format!("rel_tol must be in (0,1], got {}", self.rel_tol)));
        }
        if !(self.abs_tol > 0.0 && self.abs_tol <= 1.0) {
            return Err(Error::Domain(format!("abs_tol must be in (0,1], got {}", self.abs_tol)));
        }
        if self.max_series_index < 64 {
            return Err(Error::Domain(format!(
                "max_series_index must be >= 64, got {}",
                self.max_series_index
            )));
        }
        if self.max_quad_depth < 4 || self.max_quad_depth > 60 {
            return Err(Error::Domain(format!(
                "max_quad_depth must be in [4,60], got {}",
                self.max_quad_depth
            )));
        }
        Ok(())
    }

    /// Same policy with both tolerances multiplied by `factor` (< 1
    /// tightens). Used when a routine's result feeds into further arithmetic
    /// and must not consume the whole error budget itself.
    pub(crate) fn scaled(&self, factor: f64) -> Self {
        NumericsPolicy {
            rel_tol: (self.rel_tol * factor).max(1e-15),
            abs_tol: (self.abs_tol * factor).max(1e-300),
            ..*self
        }
    }
}

/// Value with an attached absolute error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralEstimate {
    pub value: f64,
    pub abs_error: f64,
}

/// Neumaier compensated accumulator. Order-sensitive by design; callers that
/// need determinism feed it in a fixed order.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

// 15-point Kronrod extension of 7-point Gauss. Positive abscissae; the
// Gauss subset sits at indices 1, 3, 5 plus the midpoint.
const XGK: [f64; 7] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
];
const WGK: [f64; 7] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
];
const WGK_CENTER: f64 = 0.209482141084727828012999174891714;
const WG: [f64; 3] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
];
const WG_CENTER: f64 = 0.417959183673469387755102040816327;

/// One Gauss-Kronrod 15-point rule application on [a, b].
/// Returns (value, error estimate, all evaluations finite).
fn qk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64, bool) {
    let hl = 0.5 * (b - a);
    let center = 0.5 * (a + b);
    let fc = f(center);
    let mut finite = fc.is_finite();
    let mut resk = WGK_CENTER * fc;
    let mut resg = WG_CENTER * fc;
    let mut resabs = WGK_CENTER * fc.abs();
    let mut f_lo = [0.0f64; 7];
    let mut f_hi = [0.0f64; 7];
    for j in 0..7 {
        let dx = hl * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        finite &= f1.is_finite() && f2.is_finite();
        f_lo[j] = f1;
        f_hi[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let reskh = resk * 0.5;
    let mut resasc = WGK_CENTER * (fc - reskh).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((f_lo[j] - reskh).abs() + (f_hi[j] - reskh).abs());
    }
    let value = resk * hl;
    let resasc = resasc * hl.abs();
    let resabs = resabs * hl.abs();
    let mut err = ((resk - resg) * hl).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * 1.0f64.min((200.0 * err / resasc).powf(1.5));
    }
    let tiny = f64::MIN_POSITIVE / (50.0 * f64::EPSILON);
    if resabs > tiny {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    (value, err, finite)
}

#[derive(Debug)]
struct Panel {
    err: f64,
    seq: u64,
    a: f64,
    b: f64,
    value: f64,
    depth: u32,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err.to_bits() == other.err.to_bits() && self.seq == other.seq
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        // max-heap on error; older panel wins ties so refinement order is
        // reproducible
        self.err
            .total_cmp(&other.err)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Globally adaptive integral of f over the finite interval [a, b].
///
/// Panels are bisected worst-error-first until the summed error estimate
/// meets max(abs_tol, rel_tol * |integral|); each panel stops splitting at
/// `max_quad_depth`. The final value re-sums all panels left to right with
/// compensation, so the result is independent of refinement history.
///
/// # Errors
///
/// `Domain` for invalid bounds or a non-finite integrand value;
/// `QuadratureNonConvergence` (carrying the partial result) when the error
/// target is unreachable within the depth/evaluation budget.
pub fn integrate(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    policy: &NumericsPolicy,
) -> Result<IntegralEstimate> {
    policy.validate()?;
    if !a.is_finite() || !b.is_finite() || a > b {
        return Err(Error::Domain(format!("bad integration interval [{a}, {b}]")));
    }
    if a == b {
        return Ok(IntegralEstimate { value: 0.0, abs_error: 0.0 });
    }
    let fref: &dyn Fn(f64) -> f64 = &f;
    let (v0, e0, ok) = qk15(fref, a, b);
    if !ok {
        return Err(Error::Domain("integrand returned a non-finite value".into()));
    }
    let mut heap: BinaryHeap<Panel> = BinaryHeap::new();
    let mut done: Vec<Panel> = Vec::new();
    heap.push(Panel { err: e0, seq: 0, a, b, value: v0, depth: 0 });
    let mut seq = 1u64;
    let mut total_v = v0;
    let mut total_e = e0;
    let mut panel_evals = 1usize;
    loop {
        let target = policy.abs_tol.max(policy.rel_tol * total_v.abs());
        if total_e <= target {
            break;
        }
        let Some(worst) = heap.pop() else {
            return Err(Error::QuadratureNonConvergence {
                partial: total_v,
                error_estimate: total_e,
            });
        };
        if worst.depth >= policy.max_quad_depth {
            done.push(worst);
            continue;
        }
        if panel_evals > 60_000 {
            return Err(Error::QuadratureNonConvergence {
                partial: total_v,
                error_estimate: total_e,
            });
        }
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval at floating-point resolution; cannot split further
            done.push(worst);
            continue;
        }
        let (v1, e1, ok1) = qk15(fref, worst.a, mid);
        let (v2, e2, ok2) = qk15(fref, mid, worst.b);
        if !(ok1 && ok2) {
            return Err(Error::Domain("integrand returned a non-finite value".into()));
        }
        panel_evals += 2;
        total_v += v1 + v2 - worst.value;
        total_e += e1 + e2 - worst.err;
        heap.push(Panel { err: e1, seq, a: worst.a, b: mid, value: v1, depth: worst.depth + 1 });
        seq += 1;
        heap.push(Panel { err: e2, seq, a: mid, b: worst.b, value: v2, depth: worst.depth + 1 });
        seq += 1;
    }
    done.extend(heap.into_vec());
    done.sort_by(|p, q| p.a.total_cmp(&q.a));
    let mut value = CompensatedSum::new();
    let mut err = CompensatedSum::new();
    for p in &done {
        value.add(p.value);
        err.add(p.err);
    }
    Ok(IntegralEstimate { value: value.value(), abs_error: err.value() })
}

/// Integral of f over [a, ∞) for integrands with (at least) exponential-ish
/// decay: the upper limit is grown geometrically until probe evaluations
/// certify the remaining tail is below tolerance, then the finite part is
/// integrated adaptively and the tail estimate is folded into the error.
///
/// # Errors
///
/// `QuadratureNonConvergence` if the integrand has not died off by a + 800
/// (the model's outer integrands live on a scale of tens at most).
pub fn integrate_to_infinity(
    f: impl Fn(f64) -> f64,
    a: f64,
    policy: &NumericsPolicy,
) -> Result<IntegralEstimate> {
    policy.validate()?;
    if !a.is_finite() {
        return Err(Error::Domain(format!("bad lower limit {a}")));
    }
    let fref: &dyn Fn(f64) -> f64 = &f;
    // magnitude scale for the relative-tolerance part of the cutoff test
    let (rough, _, rough_ok) = qk15(fref, a, a + 40.0);
    if !rough_ok {
        return Err(Error::Domain("integrand returned a non-finite value".into()));
    }
    let scale = rough.abs().max(policy.abs_tol);
    let mut upper = a + 8.0;
    let mut tail_est;
    loop {
        let p0 = f(upper).abs();
        let p1 = f(upper + 2.5).abs();
        let p2 = f(upper + 6.0).abs();
        if !(p0.is_finite() && p1.is_finite() && p2.is_finite()) {
            return Err(Error::Domain("integrand returned a non-finite value".into()));
        }
        let peak = p0.max(p1).max(p2);
        if peak == 0.0 {
            tail_est = 0.0;
            break;
        }
        // decay rate from the outermost probe pair, floored so a flat
        // stretch forces further growth rather than a bogus small tail
        let rate = if p2 > 0.0 && p2 < p0 {
            ((p0 / p2).ln() / 6.0).max(0.05)
        } else {
            0.05
        };
        tail_est = peak * (1.0 / rate + 6.0);
        if tail_est <= 0.25 * policy.abs_tol.max(policy.rel_tol * scale) {
            break;
        }
        upper = a + (upper - a) * 1.6;
        if upper > a + 800.0 {
            return Err(Error::QuadratureNonConvergence {
                partial: rough,
                error_estimate: tail_est,
            });
        }
    }
    let mut res = integrate(f, a, upper, policy)?;
    res.abs_error += tail_est;
    Ok(res)
}

/// ∫ over [max(u, support), ∞) of the normalized Gamma(i+1, 1) density
/// y^i e^(-y) / i! times a bounded kernel g.
///
/// The infinite range is clipped to the certified support of the Gamma
/// weight (Chernoff bounds at mass 1e-13-ish), which is what keeps this
/// usable thousands of times per coverage evaluation: the active window has
/// width O(sqrt(i)) however large i gets.
pub fn gamma_weighted_integral(
    i: usize,
    g: impl Fn(f64) -> f64,
    u: f64,
    policy: &NumericsPolicy,
) -> Result<f64> {
    Ok(gamma_weighted_integral_est(i, g, u, policy)?.value)
}

pub(crate) fn gamma_weighted_integral_est(
    i: usize,
    g: impl Fn(f64) -> f64,
    u: f64,
    policy: &NumericsPolicy,
) -> Result<IntegralEstimate> {
    policy.validate()?;
    if !(u >= 0.0) || !u.is_finite() {
        return Err(Error::Domain(format!("gamma_weighted_integral needs u >= 0, got {u}")));
    }
    if i > 1_000_000 {
        return Err(Error::InvalidRequest(format!("gamma weight order {i} out of range")));
    }
    let shape = (i + 1) as f64;
    let mass_tol = (policy.abs_tol * 1e-3).min(1e-13).max(1e-100);
    let (lo0, hi0) = crate::specfun::gamma_support_bounds(shape, mass_tol);
    let lo = u.max(lo0);
    let hi = if lo < hi0 {
        hi0
    } else {
        // u is beyond the support window; the weight there decays at least
        // as fast as at the window edge, so the same width is enough
        lo + (hi0 - shape).max(5.0)
    };
    let ln_norm = crate::specfun::ln_gamma(shape);
    let integrand = move |y: f64| {
        let ln_w = if i == 0 { -y } else { i as f64 * y.ln() - y - ln_norm };
        if ln_w < -740.0 {
            0.0
        } else {
            ln_w.exp() * g(y)
        }
    };
    let mut res = integrate(integrand, lo, hi, &policy.scaled(0.5))?;
    // clipped Gamma mass bounds the discarded remainder (kernel is bounded)
    res.abs_error += 2.0 * mass_tol * (1.0 + res.value.abs());
    Ok(res)
}

/// How [`adaptive_tail_sum`] combines terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesMode {
    /// Plain series Σ term(i).
    Sum,
    /// Product Π term(i) accumulated in log space; terms must be positive.
    LogProduct,
}

/// Σ or Π of term(0), term(1), ... with automatic stopping.
///
/// Stopping is ratio-certified: once the recent term-ratio envelope r stays
/// below 1, the remaining tail is bounded by |t| r/(1-r) and the series
/// stops when that bound is inside tolerance. Series whose ratios do not
/// settle below 1 (or not before `max_series_index`) fail loudly instead of
/// returning a silently truncated value.
///
/// # Errors
///
/// `TruncationFailure` with the partial value when the cap is hit;
/// `Domain` for a non-positive factor in `LogProduct` mode.
pub fn adaptive_tail_sum(
    mut term: impl FnMut(usize) -> f64,
    policy: &NumericsPolicy,
    mode: SeriesMode,
) -> Result<f64> {
    policy.validate()?;
    let mut acc = CompensatedSum::new();
    let mut prev_mag: Option<f64> = None;
    let mut ratio_window: Vec<f64> = Vec::with_capacity(8);
    let mut zero_run = 0usize;
    for i in 0..=policy.max_series_index {
        let t = term(i);
        if !t.is_finite() {
            return Err(Error::Domain(format!("series term {i} is non-finite")));
        }
        let contrib = match mode {
            SeriesMode::Sum => t,
            SeriesMode::LogProduct => {
                if t <= 0.0 {
                    return Err(Error::Domain(format!(
                        "log-product factor {i} must be positive, got {t}"
                    )));
                }
                t.ln()
            }
        };
        acc.add(contrib);
        let mag = contrib.abs();
        if mag == 0.0 {
            zero_run += 1;
            if zero_run >= 3 && i >= 8 {
                return Ok(finish_series(acc.value(), mode));
            }
        } else {
            zero_run = 0;
        }
        if let Some(p) = prev_mag {
            if p > 0.0 {
                if ratio_window.len() == 8 {
                    ratio_window.remove(0);
                }
                ratio_window.push(mag / p);
            }
        }
        prev_mag = Some(mag);
        if i >= 8 && ratio_window.len() >= 4 {
            let r = ratio_window.iter().fold(0.0f64, |m, &x| m.max(x));
            if r < 0.98 {
                let bound = mag * r / (1.0 - r);
                let value = acc.value();
                let target = match mode {
                    SeriesMode::Sum => policy.abs_tol.max(policy.rel_tol * value.abs()),
                    // log-space bound b perturbs the product by ~ b
                    SeriesMode::LogProduct => policy.abs_tol.max(policy.rel_tol),
                };
                if bound <= 0.5 * target {
                    return Ok(finish_series(value, mode));
                }
            }
        }
    }
    Err(Error::TruncationFailure {
        index: policy.max_series_index,
        partial: finish_series(acc.value(), mode),
        tail_bound: f64::INFINITY,
    })
}

/// [`adaptive_tail_sum`] with a caller-supplied certified bound on the tail
/// past index i; stopping uses that bound instead of the ratio envelope.
pub fn adaptive_tail_sum_with_bound(
    mut term: impl FnMut(usize) -> f64,
    tail_bound: impl Fn(usize) -> f64,
    policy: &NumericsPolicy,
    mode: SeriesMode,
) -> Result<f64> {
    policy.validate()?;
    let mut acc = CompensatedSum::new();
    for i in 0..=policy.max_series_index {
        let t = term(i);
        if !t.is_finite() {
            return Err(Error::Domain(format!("series term {i} is non-finite")));
        }
        let contrib = match mode {
            SeriesMode::Sum => t,
            SeriesMode::LogProduct => {
                if t <= 0.0 {
                    return Err(Error::Domain(format!(
                        "log-product factor {i} must be positive, got {t}"
                    )));
                }
                t.ln()
            }
        };
        acc.add(contrib);
        if i >= 4 {
            let bound = tail_bound(i);
            let value = acc.value();
            let target = match mode {
                SeriesMode::Sum => policy.abs_tol.max(policy.rel_tol * value.abs()),
                SeriesMode::LogProduct => policy.abs_tol.max(policy.rel_tol),
            };
            if bound <= 0.5 * target {
                return Ok(finish_series(value, mode));
            }
        }
    }
    let final_bound = tail_bound(policy.max_series_index);
    Err(Error::TruncationFailure {
        index: policy.max_series_index,
        partial: finish_series(acc.value(), mode),
        tail_bound: final_bound,
    })
}

fn finish_series(acc: f64, mode: SeriesMode) -> f64 {
    match mode {
        SeriesMode::Sum => acc,
        SeriesMode::LogProduct => acc.exp(),
    }
}

/// Closure of Σ_{i > last_index} f(i) for smooth f with power-law decay
/// f(x) ~ c x^(-alpha) (alpha > 1), via Euler-Maclaurin:
///
/// Σ_{i=x0}^∞ f(i) = ∫_{x0}^∞ f dx + f(x0)/2 - f'(x0)/12 + O(f'''(x0))
///
/// with x0 = last_index + 1. The integral's far part beyond 8 x0 uses the
/// known decay exponent: A(x) = f(x) x^alpha is sampled at X, 2X, 4X and
/// fitted as c0 + c1/x + c2/x², which integrates in closed form; the
/// mismatch against an independent lower-order estimate (bridge quadrature
/// plus a two-point fit anchored at 2X) is charged to the error estimate,
/// as is the finite-difference f''' proxy for the Euler-Maclaurin
/// remainder.
///
/// f must be evaluable on the continuous range [last_index - 1, 32 x0]
/// (the analytic module's tail summands all extend smoothly off-integers).
pub fn polynomial_tail_sum(
    f: impl Fn(f64) -> f64,
    last_index: usize,
    alpha: f64,
    policy: &NumericsPolicy,
) -> Result<IntegralEstimate> {
    policy.validate()?;
    if last_index < 4 {
        return Err(Error::InvalidRequest(format!(
            "tail closure needs last_index >= 4, got {last_index}"
        )));
    }
    if !(alpha > 1.0) || !alpha.is_finite() {
        return Err(Error::Domain(format!("tail decay exponent must exceed 1, got {alpha}")));
    }
    let x0 = (last_index + 1) as f64;
    let x1 = 8.0 * x0;
    let finite = integrate(&f, x0, x1, &policy.scaled(0.1))?;
    // far field: fit A(x) = f(x) x^alpha through three doubling probes
    let a1 = f(x1) * x1.powf(alpha);
    let a2 = f(2.0 * x1) * (2.0 * x1).powf(alpha);
    let a4 = f(4.0 * x1) * (4.0 * x1).powf(alpha);
    if !(a1.is_finite() && a2.is_finite() && a4.is_finite()) {
        return Err(Error::Domain("tail summand is non-finite in the far field".into()));
    }
    // ∫_base^∞ (c0 + c1/x + c2/x²) x^-alpha dx, coefficients from probes at
    // base and 2 base (linear) or base/2 base/4 base (quadratic)
    let linear_fit_integral = |base: f64, near: f64, far: f64| -> f64 {
        let c1 = 2.0 * base * (near - far);
        let c0 = 2.0 * far - near;
        c0 * base.powf(1.0 - alpha) / (alpha - 1.0) + c1 * base.powf(-alpha) / alpha
    };
    let e1 = a1 - a2;
    let e2 = a2 - a4;
    let c2 = 8.0 * x1 * x1 * (e1 - 2.0 * e2) / 3.0;
    let c1 = 4.0 * x1 * e2 - 0.75 * c2 / x1;
    let c0 = a1 - c1 / x1 - c2 / (x1 * x1);
    let far = c0 * x1.powf(1.0 - alpha) / (alpha - 1.0)
        + c1 * x1.powf(-alpha) / alpha
        + c2 * x1.powf(-1.0 - alpha) / (1.0 + alpha);
    let (bridge, _, bridge_ok) = qk15(&(&f as &dyn Fn(f64) -> f64), x1, 2.0 * x1);
    if !bridge_ok {
        return Err(Error::Domain("tail summand is non-finite in the far field".into()));
    }
    let far_check = bridge + linear_fit_integral(2.0 * x1, a2, a4);
    let far_err = (far - far_check).abs() + 1e-15 * far.abs();
    // Euler-Maclaurin boundary terms and remainder proxy
    let f0 = f(x0);
    let fp = f(x0 + 0.5) - f(x0 - 0.5);
    let f3 = (f(x0 + 2.0) - 2.0 * f(x0 + 1.0) + 2.0 * f(x0 - 1.0) - f(x0 - 2.0)) / 2.0;
    if !(f0.is_finite() && fp.is_finite() && f3.is_finite()) {
        return Err(Error::Domain("tail summand is non-finite near the boundary".into()));
    }
    let value = finite.value + far + 0.5 * f0 - fp / 12.0;
    // |f'''|/720 is the leading remainder; the wide stencil and the half-step
    // first-difference both bias it low, so keep a generous safety factor.
    let abs_error = finite.abs_error + far_err + f3.abs() / 100.0;
    Ok(IntegralEstimate { value, abs_error })
}

// ---------------------------------------------------------------------------
