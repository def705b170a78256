//! Integer-partition enumeration and Faà di Bruno style derivative algebra.
//!
//! The analytic coverage formula is organized around sums over integer
//! partitions in multiplicity form: a partition of k is the vector
//! (h_1, ..., h_k) with Σ r·h_r = k where h_r counts the parts equal to r.
//! Two enumerations are needed: all partitions of k, and the partitions of k
//! with a prescribed number of parts. On top of those sit partial Bell
//! polynomials and two derivative transforms (reciprocal of a power series,
//! and recovery of a product's derivatives from the derivatives of its log)
//! that the analytic module and the fading-average simulator both use.
//!
//! Enumeration results are cached per k behind a mutex (the coverage
//! integrand asks for the same small k thousands of times across quadrature
//! nodes and rayon workers).

use crate::error::{Error, Result};
use crate::specfun::ln_gamma;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Multiplicity vector of one partition; entry r-1 counts parts of size r.
pub type Multiplicities = Vec<usize>;

/// k! as f64, exact through 20!, ln-Gamma based beyond.
pub(crate) fn factorial(k: usize) -> f64 {
    const TABLE: [f64; 21] = [
        1.0,
        1.0,
        2.0,
        6.0,
        24.0,
        120.0,
        720.0,
        5040.0,
        40320.0,
        362880.0,
        3628800.0,
        39916800.0,
        479001600.0,
        6227020800.0,
        87178291200.0,
        1307674368000.0,
        20922789888000.0,
        355687428096000.0,
        6402373705728000.0,
        121645100408832000.0,
        2432902008176640000.0,
    ];
    if k < TABLE.len() {
        TABLE[k]
    } else {
        ln_gamma(k as f64 + 1.0).exp()
    }
}

/// Binomial coefficient as f64 (exact for every case this crate needs).
pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for j in 0..k {
        acc = acc * (n - j) as f64 / (j + 1) as f64;
    }
    acc.round()
}

fn partition_cache() -> &'static Mutex<HashMap<usize, Arc<Vec<Multiplicities>>>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Vec<Multiplicities>>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// All partitions of k in multiplicity form, each a vector of length k,
/// in ascending lexicographic order. k = 0 yields one empty partition
/// (the empty vector).
///
/// The partition count grows sub-exponentially (p(16) = 231); k beyond the
/// fading orders this crate targets is still fine, but the enumeration is
/// exhaustive, so k is capped to keep a typo from allocating forever.
///
/// # Errors
///
/// `InvalidRequest` if k > 64.
pub fn partitions(k: usize) -> Result<Arc<Vec<Multiplicities>>> {
    if k > 64 {
        return Err(Error::InvalidRequest(format!(
            "partition enumeration capped at k = 64, got {k}"
        )));
    }
    let mut cache = partition_cache().lock().expect("partition cache poisoned");
    if let Some(hit) = cache.get(&k) {
        return Ok(Arc::clone(hit));
    }
    let mut out = Vec::new();
    let mut current = vec![0usize; k];
    descend(k, k, &mut current, &mut out);
    out.sort();
    let arc = Arc::new(out);
    cache.insert(k, Arc::clone(&arc));
    Ok(arc)
}

/// Recursive enumeration: place parts of size <= `max_part` summing to
/// `remaining`. Multiplicity form makes this a simple loop over how many
/// copies of the largest allowed part to use.
fn descend(remaining: usize, max_part: usize, current: &mut [usize], out: &mut Vec<Multiplicities>) {
    if remaining == 0 {
        out.push(current.to_vec());
        return;
    }
    let p = max_part.min(remaining);
    if p == 0 {
        return;
    }
    for count in 0..=(remaining / p) {
        current[p - 1] = count;
        descend(remaining - count * p, p - 1, current, out);
    }
    current[p - 1] = 0;
}

/// Partitions of k into exactly h parts, in multiplicity form truncated to
/// length k - h + 1 (a partition of k into h parts has no part larger than
/// k - h + 1). Ascending lexicographic order.
///
/// Edge cases: h = 0 yields one empty partition when k = 0 and none when
/// k > 0; h > k yields none.
///
/// # Errors
///
/// `InvalidRequest` if k > 64.
pub fn partitions_into(k: usize, h: usize) -> Result<Vec<Multiplicities>> {
    let all = partitions(k)?;
    let width = if k >= h { k - h + 1 } else { 0 };
    let mut out: Vec<Multiplicities> = all
        .iter()
        .filter(|mults| mults.iter().sum::<usize>() == h)
        .map(|mults| {
            debug_assert!(mults.iter().skip(width.max(1)).all(|&c| c == 0) || h == 0);
            mults.iter().take(width.max(usize::from(k == 0))).copied().collect()
        })
        .collect();
    out.sort();
    Ok(out)
}

/// Partial (exponential) Bell polynomial B_{k,h}(x_1, ..., x_{k-h+1}):
///
/// B_{k,h} = k! Σ Π_q (1/r_q!) (x_q / q!)^{r_q}
///
/// summed over partitions of k into h parts with multiplicities (r_q).
/// B_{0,0} = 1; B_{k,0} = 0 for k >= 1; B_{k,h} = 0 for h > k.
///
/// # Errors
///
/// `LengthMismatch` if fewer than k - h + 1 arguments are supplied (when at
/// least one term exists), `InvalidRequest` on the enumeration cap.
pub fn bell_polynomial(k: usize, h: usize, x: &[f64]) -> Result<f64> {
    if h > k {
        return Ok(0.0);
    }
    if k == 0 {
        return Ok(1.0);
    }
    if h == 0 {
        return Ok(0.0);
    }
    let width = k - h + 1;
    if x.len() < width {
        return Err(Error::LengthMismatch {
            context: "bell_polynomial arguments",
            left: x.len(),
            right: width,
        });
    }
    let mut sum = 0.0f64;
    for mults in partitions_into(k, h)? {
        let mut term = 1.0f64;
        for (q0, &r) in mults.iter().enumerate() {
            if r == 0 {
                continue;
            }
            let q = q0 + 1;
            term *= (x[q0] / factorial(q)).powi(r as i32) / factorial(r);
        }
        sum += term;
    }
    Ok(factorial(k) * sum)
}

/// Derivatives of 1/C from derivatives of C, all at the same point.
///
/// Input `c` holds (C, C', C'', ..., C^(n)); output holds the derivatives
/// of D = 1/C to the same order, via
///
/// D^(k) = Σ_{h=1}^{k} (-1)^h h! C^{-(h+1)} B_{k,h}(C', ..., C^(k-h+1)),
///
/// with D^(0) = 1/C.
///
/// # Errors
///
/// `Domain` if the input is empty or C = 0.
pub fn derivs_of_reciprocal(c: &[f64]) -> Result<Vec<f64>> {
    let c0 = *c
        .first()
        .ok_or_else(|| Error::Domain("derivs_of_reciprocal needs at least C itself".into()))?;
    if c0 == 0.0 {
        return Err(Error::Domain("derivs_of_reciprocal: C = 0 at the expansion point".into()));
    }
    let n = c.len() - 1;
    let mut out = vec![0.0f64; n + 1];
    out[0] = 1.0 / c0;
    for k in 1..=n {
        let mut acc = 0.0f64;
        for h in 1..=k {
            let b = bell_polynomial(k, h, &c[1..=(k - h + 1)])?;
            let sign = if h % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * factorial(h) * c0.powi(-(h as i32) - 1) * b;
        }
        out[k] = acc;
    }
    Ok(out)
}

/// Derivatives of a product F from its value and the derivatives of ln F.
///
/// Given F(x0) = `f0` and `log_derivs` = (L_1, ..., L_n) with
/// L_r = (d^r/dx^r) ln F at x0, returns (F, F', ..., F^(n)) using
///
/// F^(k) = k! F Σ_{partitions of k} Π_r (1/h_r!) (L_r / r!)^{h_r}.
///
/// This is how the fading-average simulator and the analytic assembler turn
/// per-interferer log-derivative sums into derivatives of the full product
/// without ever forming the product term by term.
pub fn derivs_of_product_from_log(f0: f64, log_derivs: &[f64]) -> Result<Vec<f64>> {
    let n = log_derivs.len();
    let mut out = vec![0.0f64; n + 1];
    out[0] = f0;
    for k in 1..=n {
        let mut acc = 0.0f64;
        for mults in partitions(k)?.iter() {
            let mut term = 1.0f64;
            for (r0, &h) in mults.iter().enumerate() {
                if h == 0 {
                    continue;
                }
                let r = r0 + 1;
                term *= (log_derivs[r0] / factorial(r)).powi(h as i32) / factorial(h);
            }
            acc += term;
        }
        out[k] = factorial(k) * f0 * acc;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
