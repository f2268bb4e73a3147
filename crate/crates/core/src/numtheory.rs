//! Exact integer arithmetic for order finding: modular exponentiation,
//! multiplicative order and continued-fraction convergents.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported precision-register size. Keeps `Q = 2^t` addressable
/// as a dense probability vector.
pub const MAX_PRECISION: u32 = 24;

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

/// `base^exp mod modulus` by square-and-multiply with 128-bit products.
pub fn mod_pow(base: u64, mut exp: u64, modulus: u64) -> Result<u64> {
    if modulus < 2 {
        return Err(Error::domain(format!(
            "modulus must be >= 2, got {modulus}"
        )));
    }
    let m = modulus as u128;
    let mut acc: u128 = 1;
    let mut b = base as u128 % m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        exp >>= 1;
    }
    Ok(acc as u64)
}

/// Smallest `r >= 1` with `a^r = 1 (mod n)`.
pub fn multiplicative_order(a: u64, n: u64) -> Result<u64> {
    if n < 2 {
        return Err(Error::domain(format!("modulus must be >= 2, got {n}")));
    }
    let a = a % n;
    if gcd(a, n) != 1 {
        return Err(Error::domain(format!(
            "a={a} is not coprime to N={n} (gcd = {})",
            gcd(a, n)
        )));
    }
    let (m, a) = (n as u128, a as u128);
    let mut x = a;
    let mut r = 1u64;
    while x != 1 {
        x = x * a % m;
        r += 1;
    }
    Ok(r)
}

/// An order-finding problem `(N, a, t)` with `Q = 2^t` and its true order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "InstanceDescriptor", into = "InstanceDescriptor")]
pub struct Instance {
    n: u64,
    a: u64,
    t: u32,
    order: u64,
}

/// Wire form of an [`Instance`]; derived fields are recomputed on load.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct InstanceDescriptor {
    #[serde(rename = "N")]
    pub n: u64,
    pub a: u64,
    pub t: u32,
}

impl Instance {
    pub fn new(n: u64, a: u64, t: u32) -> Result<Self> {
        if n < 2 {
            return Err(Error::domain(format!("N must be >= 2, got {n}")));
        }
        if t == 0 || t > MAX_PRECISION {
            return Err(Error::domain(format!(
                "t must be in 1..={MAX_PRECISION}, got {t}"
            )));
        }
        let reduced = a % n;
        let g = gcd(reduced, n);
        if g != 1 {
            return Err(Error::domain(format!(
                "a={a} not coprime to N={n} (gcd = {g})"
            )));
        }
        let order = multiplicative_order(reduced, n)?;
        Ok(Instance {
            n,
            a: reduced,
            t,
            order,
        })
    }

    pub fn modulus(&self) -> u64 {
        self.n
    }

    /// Base, reduced mod N.
    pub fn base(&self) -> u64 {
        self.a
    }

    pub fn precision(&self) -> u32 {
        self.t
    }

    pub fn q(&self) -> u64 {
        1u64 << self.t
    }

    /// The true multiplicative order of `a` mod `N`.
    pub fn order(&self) -> u64 {
        self.order
    }

    /// `a = 1 (mod N)`: order one, nothing to find.
    pub fn is_degenerate(&self) -> bool {
        self.order == 1
    }

    /// `a^k = 1 (mod N)`.
    pub fn verifies(&self, k: u64) -> bool {
        // n >= 2 is an invariant, mod_pow cannot fail.
        mod_pow(self.a, k, self.n).map(|v| v == 1).unwrap_or(false)
    }

    pub fn descriptor(&self) -> InstanceDescriptor {
        InstanceDescriptor {
            n: self.n,
            a: self.a,
            t: self.t,
        }
    }
}

impl TryFrom<InstanceDescriptor> for Instance {
    type Error = Error;

    fn try_from(d: InstanceDescriptor) -> Result<Self> {
        Instance::new(d.n, d.a, d.t)
    }
}

impl From<Instance> for InstanceDescriptor {
    fn from(i: Instance) -> Self {
        i.descriptor()
    }
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "N={} a={} t={}", self.n, self.a, self.t)
    }
}

/// A continued-fraction convergent `numerator / denominator` in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Convergent {
    pub numerator: u64,
    pub denominator: u64,
}

impl fmt::Display for Convergent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

/// Every convergent of `y / q`, from `0/1` up to `y / q` in lowest terms.
///
/// Callers must pass `y < q`; the first partial quotient is then always 0.
pub fn convergents(y: u64, q: u64) -> Vec<Convergent> {
    debug_assert!(y < q, "outcome {y} out of range for Q={q}");
    let mut out = Vec::new();
    // (h_{k-2}, k_{k-2}) and (h_{k-1}, k_{k-1}) seeds of the recurrence.
    let (mut h_prev, mut k_prev) = (0u64, 1u64);
    let (mut h, mut k) = (1u64, 0u64);
    let (mut num, mut den) = (y, q);
    loop {
        let quotient = num / den;
        let (h_next, k_next) = (quotient * h + h_prev, quotient * k + k_prev);
        out.push(Convergent {
            numerator: h_next,
            denominator: k_next,
        });
        (h_prev, k_prev, h, k) = (h, k, h_next, k_next);
        let rem = num % den;
        if rem == 0 {
            break;
        }
        (num, den) = (den, rem);
    }
    out
}

/// Denominator of the highest-order convergent of `y / q` whose denominator
/// is at most `n`. `0/1` always qualifies, so this is total.
pub fn denominator_candidate(y: u64, q: u64, n: u64) -> u64 {
    convergents(y, q)
        .into_iter()
        .take_while(|c| c.denominator <= n)
        .last()
        .map_or(1, |c| c.denominator)
}

/// Smallest convergent denominator `<= N` of `y / q` that passes modular
/// verification for `instance`, if any.
pub fn smallest_verified_denominator(y: u64, instance: &Instance) -> Option<u64> {
    convergents(y, instance.q())
        .into_iter()
        .map(|c| c.denominator)
        .filter(|&d| d <= instance.modulus() && instance.verifies(d))
        .min()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fracs(v: &[Convergent]) -> Vec<(u64, u64)> {
        v.iter().map(|c| (c.numerator, c.denominator)).collect()
    }

    #[test]
    fn mod_pow_examples() {
        assert_eq!(mod_pow(2, 4, 15).unwrap(), 1);
        assert_eq!(mod_pow(2, 3, 7).unwrap(), 1);
        assert_eq!(mod_pow(4, 8, 15).unwrap(), 1);
        assert_eq!(mod_pow(5, 0, 7).unwrap(), 1);
        assert!(mod_pow(3, 2, 1).is_err());
        assert!(mod_pow(3, 2, 0).is_err());
    }

    #[test]
    fn mod_pow_large_operands() {
        let m = u64::MAX - 58; // prime 2^64 - 59
        assert_eq!(mod_pow(m - 1, 2, m).unwrap(), 1);
    }

    #[test]
    fn order_examples() {
        assert_eq!(multiplicative_order(2, 15).unwrap(), 4);
        assert_eq!(multiplicative_order(2, 7).unwrap(), 3);
        for n in [2, 3, 15, 127] {
            assert_eq!(multiplicative_order(1, n).unwrap(), 1);
        }
        assert!(multiplicative_order(3, 15).is_err());
        assert!(multiplicative_order(0, 7).is_err());
    }

    #[test]
    fn convergent_examples() {
        assert_eq!(
            fracs(&convergents(85, 256)),
            vec![(0, 1), (1, 3), (85, 256)]
        );
        assert_eq!(fracs(&convergents(128, 256)), vec![(0, 1), (1, 2)]);
        assert_eq!(
            fracs(&convergents(65, 256)),
            vec![(0, 1), (1, 3), (1, 4), (16, 63), (65, 256)]
        );
        assert_eq!(fracs(&convergents(0, 256)), vec![(0, 1)]);
        assert_eq!(fracs(&convergents(192, 256)), vec![(0, 1), (1, 1), (3, 4)]);
    }

    #[test]
    fn candidate_examples() {
        assert_eq!(denominator_candidate(64, 256, 15), 4);
        assert_eq!(denominator_candidate(0, 256, 15), 1);
        assert_eq!(denominator_candidate(43, 256, 7), 6);
    }

    #[test]
    fn smallest_verified_rule() {
        // 43/256 -> 0/1, 1/5, 1/6, ...; with N=7, a=2 (order 3) only
        // denominators dividing by 3 verify: 6.
        let inst = Instance::new(7, 2, 8).unwrap();
        assert_eq!(smallest_verified_denominator(43, &inst), Some(6));
        let inst = Instance::new(15, 2, 8).unwrap();
        assert_eq!(smallest_verified_denominator(0, &inst), None);
    }

    #[test]
    fn instance_validation() {
        let i = Instance::new(15, 17, 8).unwrap();
        assert_eq!(i.base(), 2);
        assert_eq!(i.order(), 4);
        assert_eq!(i.q(), 256);
        assert!(Instance::new(15, 3, 8).is_err());
        assert!(Instance::new(15, 2, 0).is_err());
        assert!(Instance::new(1, 1, 8).is_err());
        assert!(Instance::new(3, 4, 8).unwrap().is_degenerate());
    }

    #[test]
    fn instance_serde_recomputes_order() {
        let i = Instance::new(31, 4, 10).unwrap();
        let s = serde_json::to_string(&i).unwrap();
        assert_eq!(s, r#"{"N":31,"a":4,"t":10}"#);
        let back: Instance = serde_json::from_str(&s).unwrap();
        assert_eq!(back, i);
        assert!(serde_json::from_str::<Instance>(r#"{"N":15,"a":5,"t":8}"#).is_err());
    }
}
