//! Prime-field arithmetic on 64-bit moduli and evaluation of additive
//! characters `z ↦ e^{2πiz/q}`.
//!
//! Every residue is kept in canonical form `[0, q)`. Products go through a
//! 128-bit intermediate so no modulus below `2^64` can overflow.

use std::fmt;

use thiserror::Error;

use crate::expsum::ComplexValue;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModArithError {
    #[error("q must be prime (got {0})")]
    NotPrime(u64),
    #[error("modulus mismatch: {left} vs {right}")]
    ModulusMismatch { left: u64, right: u64 },
}

/// Witnesses for deterministic Miller-Rabin; correct for every n < 3.3 * 10^24.
const MR_WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

#[inline]
fn mul_mod_raw(a: u64, b: u64, q: u64) -> u64 {
    ((a as u128 * b as u128) % q as u128) as u64
}

fn pow_mod_raw(mut base: u64, mut exp: u64, q: u64) -> u64 {
    let mut acc = 1 % q;
    base %= q;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod_raw(acc, base, q);
        }
        base = mul_mod_raw(base, base, q);
        exp >>= 1;
    }
    acc
}

/// Deterministic primality test valid on the whole `u64` range.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &MR_WITNESSES {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &MR_WITNESSES {
        let mut x = pow_mod_raw(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod_raw(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// A prime modulus `q`, checked at construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
#[serde(transparent)]
pub struct PrimeModulus(u64);

impl PrimeModulus {
    pub fn new(q: u64) -> Result<Self, ModArithError> {
        if is_prime(q) {
            Ok(PrimeModulus(q))
        } else {
            Err(ModArithError::NotPrime(q))
        }
    }

    #[inline]
    pub const fn get(self) -> u64 {
        self.0
    }

    /// Canonical representative of an arbitrary signed integer.
    #[inline]
    pub fn reduce(self, z: i128) -> u64 {
        z.rem_euclid(self.0 as i128) as u64
    }

    #[inline]
    pub fn mul(self, a: u64, b: u64) -> u64 {
        mul_mod_raw(a, b, self.0)
    }

    #[inline]
    pub fn add(self, a: u64, b: u64) -> u64 {
        let s = a as u128 + b as u128;
        (s % self.0 as u128) as u64
    }

    #[inline]
    pub fn pow(self, base: u64, exp: u64) -> u64 {
        pow_mod_raw(base, exp, self.0)
    }

    /// Inverse of a nonzero residue via Fermat.
    pub fn inv(self, a: u64) -> Option<u64> {
        let a = a % self.0;
        (a != 0).then(|| self.pow(a, self.0 - 2))
    }

    pub fn residue(self, z: i128) -> Residue {
        Residue {
            value: self.reduce(z),
            modulus: self,
        }
    }
}

impl fmt::Display for PrimeModulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An element of `Z/qZ`, reduced eagerly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Residue {
    value: u64,
    modulus: PrimeModulus,
}

impl Residue {
    pub fn new(z: i128, modulus: PrimeModulus) -> Self {
        modulus.residue(z)
    }

    #[inline]
    pub fn value(self) -> u64 {
        self.value
    }

    #[inline]
    pub fn modulus(self) -> PrimeModulus {
        self.modulus
    }

    pub fn mul_mod(self, other: Residue) -> Result<Residue, ModArithError> {
        mul_mod(self, other)
    }

    pub fn pow_mod(self, exponent: u64) -> Residue {
        pow_mod(self, exponent)
    }
}

impl fmt::Display for Residue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {})", self.value, self.modulus)
    }
}

pub fn mul_mod(x: Residue, y: Residue) -> Result<Residue, ModArithError> {
    if x.modulus != y.modulus {
        return Err(ModArithError::ModulusMismatch {
            left: x.modulus.get(),
            right: y.modulus.get(),
        });
    }
    Ok(Residue {
        value: x.modulus.mul(x.value, y.value),
        modulus: x.modulus,
    })
}

pub fn pow_mod(base: Residue, exponent: u64) -> Residue {
    Residue {
        value: base.modulus.pow(base.value, exponent),
        modulus: base.modulus,
    }
}

/// Per-component rounding bound of [`phase_of_residue`], in absolute terms.
pub const PHASE_COMPONENT_ERR: f64 = 4.0 * f64::EPSILON;

/// `(cos, sin)` of `2πr/q` for a residue `0 ≤ r < q`.
///
/// The angle is split exactly in integers into a quarter-turn count and a
/// remainder in `[-π/4, π/4]`; only the remainder goes through floating point.
#[inline]
pub fn phase_of_residue(r: u64, q: u64) -> (f64, f64) {
    debug_assert!(q >= 1 && r < q);
    let q128 = q as u128;
    let four_r = 4 * r as u128;
    // nearest quarter turn, ties rounded up
    let quarter = (2 * four_r + q128) / (2 * q128);
    let offset = four_r as i128 - (quarter * q128) as i128;
    let delta = (offset as f64 / q as f64) * std::f64::consts::FRAC_PI_2;
    let (s, c) = delta.sin_cos();
    let (re, im) = match quarter % 4 {
        0 => (c, s),
        1 => (-s, c),
        2 => (-c, -s),
        _ => (s, -c),
    };
    // normalise signed zeros
    (re + 0.0, im + 0.0)
}

/// `e^{2πiz/q}`. `q` need not be prime here.
pub fn unit_phase(z: i128, q: u64) -> ComplexValue {
    assert!(q >= 1, "unit_phase: q must be positive");
    let r = z.rem_euclid(q as i128) as u64;
    let (re, im) = phase_of_residue(r, q);
    ComplexValue::with_err(re, im, 2.0 * PHASE_COMPONENT_ERR)
}
