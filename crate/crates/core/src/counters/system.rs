use std::collections::HashSet;
use std::fmt;

use serde::Serialize;

use super::CountError;
use crate::modarith::PrimeModulus;

/// Where the equations live: congruences mod a prime, or equalities in ℤ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Modulus {
    Prime(PrimeModulus),
    Integers,
}

impl Modulus {
    pub fn prime(q: u64) -> Result<Self, CountError> {
        Ok(Modulus::Prime(PrimeModulus::new(q)?))
    }
}

impl fmt::Display for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Modulus::Prime(q) => write!(f, "{q}"),
            Modulus::Integers => f.write_str("integers"),
        }
    }
}

/// A variable value: either a single integer or a pair `(n, u)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(untagged)]
pub enum Point {
    Scalar(i64),
    Pair(i64, i64),
}

impl Point {
    /// `(n, u)` with `u = 1` for scalars.
    #[inline]
    pub fn coords(self) -> (i64, i64) {
        match self {
            Point::Scalar(x) => (x, 1),
            Point::Pair(n, u) => (n, u),
        }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Scalar(x) => write!(f, "{x}"),
            Point::Pair(n, u) => write!(f, "({n},{u})"),
        }
    }
}

/// Scalars `lo..=hi`.
pub fn scalar_range(lo: i64, hi: i64) -> Vec<Point> {
    (lo..=hi).map(Point::Scalar).collect()
}

/// Pairs `(n, u)` for `n ∈ n_lo..=n_hi`, `u ∈ u_lo..=u_hi`, `n` outermost.
pub fn pair_grid(n_lo: i64, n_hi: i64, u_lo: i64, u_hi: i64) -> Vec<Point> {
    let mut out = Vec::new();
    for n in n_lo..=n_hi {
        for u in u_lo..=u_hi {
            out.push(Point::Pair(n, u));
        }
    }
    out
}

/// `coeff · n^n_exp · u^u_exp`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Monomial {
    pub coeff: i64,
    pub n_exp: u32,
    pub u_exp: u32,
}

impl Monomial {
    pub fn new(coeff: i64, n_exp: u32, u_exp: u32) -> Self {
        Monomial { coeff, n_exp, u_exp }
    }
}

/// One equation's left-hand map `f_j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SystemFunction {
    /// A sum of monomials in `(n, u)`.
    Polynomial(Vec<Monomial>),
    /// Arbitrary values, one per domain element in domain order.
    Table(Vec<i128>),
}

impl SystemFunction {
    pub fn monomial(coeff: i64, n_exp: u32, u_exp: u32) -> Self {
        SystemFunction::Polynomial(vec![Monomial::new(coeff, n_exp, u_exp)])
    }

    /// `x^e` on scalar domains.
    pub fn power(e: u32) -> Self {
        Self::monomial(1, e, 0)
    }

    fn eval_exact(&self, index: usize, point: Point) -> Result<i128, CountError> {
        match self {
            SystemFunction::Table(values) => Ok(values[index]),
            SystemFunction::Polynomial(terms) => {
                let (n, u) = point.coords();
                let mut total: i128 = 0;
                for t in terms {
                    let v = (n as i128)
                        .checked_pow(t.n_exp)
                        .and_then(|a| (u as i128).checked_pow(t.u_exp).and_then(|b| a.checked_mul(b)))
                        .and_then(|x| x.checked_mul(t.coeff as i128))
                        .ok_or(CountError::Overflow)?;
                    total = total.checked_add(v).ok_or(CountError::Overflow)?;
                }
                Ok(total)
            }
        }
    }

    fn eval_mod(&self, index: usize, point: Point, q: PrimeModulus) -> u64 {
        match self {
            SystemFunction::Table(values) => q.reduce(values[index]),
            SystemFunction::Polynomial(terms) => {
                let (n, u) = point.coords();
                let (n, u) = (q.reduce(n as i128), q.reduce(u as i128));
                terms.iter().fold(0, |acc, t| {
                    let v = q.mul(q.pow(n, t.n_exp as u64), q.pow(u, t.u_exp as u64));
                    q.add(acc, q.mul(v, q.reduce(t.coeff as i128)))
                })
            }
        }
    }
}

/// `Σ_i σ_i f_j(x_i) = λ_j` (or `≡ λ_j mod q`) for `j = 1..m`, with every
/// `x_i` drawn from a finite domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CongruenceSystem {
    modulus: Modulus,
    domain: Vec<Point>,
    functions: Vec<SystemFunction>,
    signs: Vec<i64>,
    targets: Vec<i128>,
}

impl CongruenceSystem {
    /// A system in `2ℓ` variables; `signs.len()` must be even and positive.
    pub fn new(
        modulus: Modulus,
        domain: Vec<Point>,
        functions: Vec<SystemFunction>,
        signs: Vec<i64>,
        targets: Vec<i128>,
    ) -> Result<Self, CountError> {
        if signs.is_empty() || signs.len() % 2 != 0 {
            return Err(CountError::InvalidSystem(format!(
                "expected 2ℓ signs with ℓ ≥ 1, got {}",
                signs.len()
            )));
        }
        Self::with_any_arity(modulus, domain, functions, signs, targets)
    }

    /// `f_j(x_1) + … + f_j(x_t) = λ_j` with all signs `+1`.
    pub fn one_sided(
        modulus: Modulus,
        domain: Vec<Point>,
        functions: Vec<SystemFunction>,
        variables: usize,
        targets: Vec<i128>,
    ) -> Result<Self, CountError> {
        Self::with_any_arity(modulus, domain, functions, vec![1; variables], targets)
    }

    /// `+1` for the first `ℓ` variables, `-1` for the last `ℓ`.
    pub fn split_signs(pairs: usize) -> Vec<i64> {
        let mut s = vec![1; pairs];
        s.extend(std::iter::repeat(-1).take(pairs));
        s
    }

    /// `σ_i = (-1)^i` for `i = 1..2ℓ`.
    pub fn alternating_signs(pairs: usize) -> Vec<i64> {
        (1..=2 * pairs).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect()
    }

    fn with_any_arity(
        modulus: Modulus,
        domain: Vec<Point>,
        functions: Vec<SystemFunction>,
        signs: Vec<i64>,
        targets: Vec<i128>,
    ) -> Result<Self, CountError> {
        let invalid = |msg: String| Err(CountError::InvalidSystem(msg));
        if signs.is_empty() {
            return invalid("at least one variable is required".into());
        }
        if domain.is_empty() {
            return invalid("the variable domain is empty".into());
        }
        let mut seen = HashSet::with_capacity(domain.len());
        for p in &domain {
            if !seen.insert(*p) {
                return invalid(format!("duplicate domain element {p}"));
            }
        }
        if functions.is_empty() {
            return invalid("at least one equation is required".into());
        }
        if targets.len() != functions.len() {
            return invalid(format!(
                "{} targets for {} equations",
                targets.len(),
                functions.len()
            ));
        }
        for f in &functions {
            if let SystemFunction::Table(values) = f {
                if values.len() != domain.len() {
                    return invalid(format!(
                        "function table has {} values for a domain of {}",
                        values.len(),
                        domain.len()
                    ));
                }
            }
        }
        for &s in &signs {
            let ok = match modulus {
                Modulus::Prime(q) => q.reduce(s as i128) != 0,
                Modulus::Integers => s == 1 || s == -1,
            };
            if !ok {
                return invalid(format!("sign {s} is not admissible for modulus {modulus}"));
            }
        }
        let targets = match modulus {
            Modulus::Prime(q) => targets.into_iter().map(|t| q.reduce(t) as i128).collect(),
            Modulus::Integers => targets,
        };
        Ok(CongruenceSystem {
            modulus,
            domain,
            functions,
            signs,
            targets,
        })
    }

    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    pub fn domain(&self) -> &[Point] {
        &self.domain
    }

    pub fn functions(&self) -> &[SystemFunction] {
        &self.functions
    }

    pub fn signs(&self) -> &[i64] {
        &self.signs
    }

    pub fn targets(&self) -> &[i128] {
        &self.targets
    }

    /// Number of variables (`2ℓ` for two-sided systems).
    pub fn arity(&self) -> usize {
        self.signs.len()
    }

    pub fn equations(&self) -> usize {
        self.functions.len()
    }

    /// Same functions and domain, new signs and targets.
    pub fn with_signs_and_targets(&self, signs: Vec<i64>, targets: Vec<i128>) -> Result<Self, CountError> {
        Self::with_any_arity(
            self.modulus,
            self.domain.clone(),
            self.functions.clone(),
            signs,
            targets,
        )
    }

    /// Row-major `|X| × m` table of `f_j(x)`, reduced for prime moduli.
    pub fn value_table(&self) -> Result<Vec<i128>, CountError> {
        let m = self.functions.len();
        let mut out = Vec::with_capacity(self.domain.len() * m);
        for (i, &p) in self.domain.iter().enumerate() {
            for f in &self.functions {
                out.push(match self.modulus {
                    Modulus::Prime(q) => f.eval_mod(i, p, q) as i128,
                    Modulus::Integers => f.eval_exact(i, p)?,
                });
            }
        }
        Ok(out)
    }
}
