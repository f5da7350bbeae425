//! Text format for generic systems, read by `gausslab count generic --spec`.
//!
//! One `key = value` per line; `#` starts a comment; blank lines are
//! ignored; unknown keys are errors.
//!
//! ```text
//! modulus  = 31            # a prime, or `integers`
//! n        = 1..5          # inclusive range of the first coordinate
//! u        = 1..3          # optional second coordinate; omit for scalars
//! pairs    = 2             # ℓ, giving 2ℓ variables
//! equation = n^0*u^4       # one line per equation, in order
//! equation = 2*n*u^3 + n^2*u^2 - 5
//! signs    = 1 1 -1 -1     # optional, defaults to ℓ plus signs then ℓ minus
//! targets  = 0 0           # optional, defaults to all zeros
//! ```
//!
//! An equation is a sum of terms joined by `+` or `-`. A term is a product
//! of factors joined by `*`, where a factor is an integer, `n`, `u`, `n^e`
//! or `u^e`. `u` may only appear when a `u` range is given.

use super::system::{pair_grid, scalar_range, CongruenceSystem, Modulus, Monomial, SystemFunction};
use super::CountError;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct SpecError {
    pub line: usize,
    pub message: String,
}

fn err<T>(line: usize, message: impl Into<String>) -> Result<T, SpecError> {
    Err(SpecError {
        line,
        message: message.into(),
    })
}

fn parse_range(line: usize, v: &str) -> Result<(i64, i64), SpecError> {
    let Some((a, b)) = v.split_once("..") else {
        return err(line, format!("expected a range `lo..hi`, got `{v}`"));
    };
    let lo: i64 = a.trim().parse().or_else(|_| err(line, format!("bad integer `{a}`")))?;
    let hi: i64 = b.trim().parse().or_else(|_| err(line, format!("bad integer `{b}`")))?;
    if lo > hi {
        return err(line, format!("empty range {lo}..{hi}"));
    }
    Ok((lo, hi))
}

fn parse_list<T: std::str::FromStr>(line: usize, v: &str) -> Result<Vec<T>, SpecError> {
    v.split_whitespace()
        .map(|t| t.parse().or_else(|_| err(line, format!("bad integer `{t}`"))))
        .collect()
}

fn parse_term(line: usize, text: &str, negate: bool) -> Result<Monomial, SpecError> {
    let mut coeff: i64 = if negate { -1 } else { 1 };
    let (mut n_exp, mut u_exp) = (0u32, 0u32);
    for factor in text.split('*') {
        let f = factor.trim();
        let (base, exp) = match f.split_once('^') {
            Some((b, e)) => {
                let e: u32 = e.trim().parse().or_else(|_| err(line, format!("bad exponent in `{f}`")))?;
                (b.trim(), e)
            }
            None => (f, 1),
        };
        match base {
            "n" => n_exp += exp,
            "u" => u_exp += exp,
            "" => return err(line, format!("empty factor in `{text}`")),
            c => {
                let c: i64 = c.parse().or_else(|_| err(line, format!("unknown factor `{c}`")))?;
                let c = c.checked_pow(exp).ok_or(SpecError {
                    line,
                    message: "coefficient overflow".into(),
                })?;
                coeff = coeff.checked_mul(c).ok_or(SpecError {
                    line,
                    message: "coefficient overflow".into(),
                })?;
            }
        }
    }
    Ok(Monomial::new(coeff, n_exp, u_exp))
}

/// Parses `t1 + t2 - t3 ...` into monomials.
pub fn parse_polynomial(line: usize, text: &str) -> Result<Vec<Monomial>, SpecError> {
    let mut terms = Vec::new();
    let mut current = String::new();
    let mut negate = false;
    for ch in text.chars().chain(std::iter::once('+')) {
        if (ch == '+' || ch == '-') && !current.trim().is_empty() && !current.trim_end().ends_with('^') {
            terms.push(parse_term(line, current.trim(), negate)?);
            current.clear();
            negate = ch == '-';
        } else if (ch == '+' || ch == '-') && current.trim().is_empty() {
            if ch == '-' {
                negate = !negate;
            }
        } else {
            current.push(ch);
        }
    }
    if terms.is_empty() {
        return err(line, "empty equation");
    }
    Ok(terms)
}

/// Parses a system description (see the module docs).
pub fn parse_system(text: &str) -> Result<CongruenceSystem, SpecError> {
    let mut modulus = None;
    let mut n_range = None;
    let mut u_range = None;
    let mut pairs = None;
    let mut equations: Vec<(usize, Vec<Monomial>)> = Vec::new();
    let mut signs = None;
    let mut targets = None;

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return err(line, format!("expected `key = value`, got `{content}`"));
        };
        let (key, value) = (key.trim(), value.trim());
        let once = |slot_set: bool| if slot_set { err(line, format!("duplicate key `{key}`")) } else { Ok(()) };
        match key {
            "modulus" => {
                once(modulus.is_some())?;
                modulus = Some(if value == "integers" {
                    Modulus::Integers
                } else {
                    let q: u64 = value.parse().or_else(|_| err(line, format!("bad modulus `{value}`")))?;
                    Modulus::prime(q).or_else(|e| err(line, e.to_string()))?
                });
            }
            "n" => {
                once(n_range.is_some())?;
                n_range = Some(parse_range(line, value)?);
            }
            "u" => {
                once(u_range.is_some())?;
                u_range = Some(parse_range(line, value)?);
            }
            "pairs" => {
                once(pairs.is_some())?;
                let p: usize = value.parse().or_else(|_| err(line, format!("bad pair count `{value}`")))?;
                if p == 0 {
                    return err(line, "pairs must be at least 1");
                }
                pairs = Some(p);
            }
            "equation" => equations.push((line, parse_polynomial(line, value)?)),
            "signs" => {
                once(signs.is_some())?;
                signs = Some((line, parse_list::<i64>(line, value)?));
            }
            "targets" => {
                once(targets.is_some())?;
                targets = Some((line, parse_list::<i128>(line, value)?));
            }
            other => return err(line, format!("unknown key `{other}`")),
        }
    }

    let end = text.lines().count().max(1);
    let modulus = modulus.ok_or(SpecError { line: end, message: "missing `modulus`".into() })?;
    let (n_lo, n_hi) = n_range.ok_or(SpecError { line: end, message: "missing `n` range".into() })?;
    let pairs = pairs.ok_or(SpecError { line: end, message: "missing `pairs`".into() })?;
    if equations.is_empty() {
        return err(end, "at least one `equation` is required");
    }
    if u_range.is_none() {
        if let Some((line, _)) = equations.iter().find(|(_, t)| t.iter().any(|m| m.u_exp > 0)) {
            return err(*line, "`u` used without a `u` range");
        }
    }
    let domain = match u_range {
        Some((u_lo, u_hi)) => pair_grid(n_lo, n_hi, u_lo, u_hi),
        None => scalar_range(n_lo, n_hi),
    };
    let m = equations.len();
    let (sign_line, signs) = signs.unwrap_or((end, CongruenceSystem::split_signs(pairs)));
    if signs.len() != 2 * pairs {
        return err(sign_line, format!("expected {} signs, got {}", 2 * pairs, signs.len()));
    }
    let (target_line, targets) = targets.unwrap_or((end, vec![0; m]));
    if targets.len() != m {
        return err(target_line, format!("expected {m} targets, got {}", targets.len()));
    }
    let functions = equations.into_iter().map(|(_, t)| SystemFunction::Polynomial(t)).collect();
    CongruenceSystem::new(modulus, domain, functions, signs, targets).map_err(|e: CountError| SpecError {
        line: end,
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counters::{count_generic, Caps, Point};

    #[test]
    fn parses_full_description() {
        let text = "\
# mixed monomials
modulus = 31
n = 1..5
u = 1..3
pairs = 2
equation = u^4
equation = n*u^3
equation = n^2*u^2
equation = n^3 * u
signs = 1 1 -1 -1
targets = 0 0 0 0
";
        let s = parse_system(text).unwrap();
        assert_eq!(s.domain().len(), 15);
        assert_eq!(s.domain()[0], Point::Pair(1, 1));
        assert_eq!(s.arity(), 4);
        assert_eq!(s.equations(), 4);
        assert_eq!(
            s.functions()[1],
            SystemFunction::Polynomial(vec![Monomial::new(1, 1, 3)])
        );
    }

    #[test]
    fn defaults_for_signs_and_targets() {
        let s = parse_system("modulus = integers\nn = 1..3\npairs = 1\nequation = n\n").unwrap();
        assert_eq!(s.signs(), &[1, -1]);
        assert_eq!(s.targets(), &[0]);
        assert_eq!(count_generic(&s, false, &Caps::default()).unwrap().count, 3);
    }

    #[test]
    fn polynomial_terms() {
        assert_eq!(
            parse_polynomial(1, "2*n*u^3 + n^2*u^2 - 5").unwrap(),
            vec![Monomial::new(2, 1, 3), Monomial::new(1, 2, 2), Monomial::new(-5, 0, 0)]
        );
        assert_eq!(parse_polynomial(1, "-n^2").unwrap(), vec![Monomial::new(-1, 2, 0)]);
        assert_eq!(parse_polynomial(1, "3*2^2*n").unwrap(), vec![Monomial::new(12, 1, 0)]);
        assert!(parse_polynomial(1, "").is_err());
        assert!(parse_polynomial(1, "x^2").is_err());
        assert!(parse_polynomial(1, "n^").is_err());
    }

    #[test]
    fn reports_errors_with_line_numbers() {
        let e = parse_system("modulus = 31\nfoo = 3\n").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(e.message.contains("unknown key"));
        let e = parse_system("modulus = 12\n").unwrap_err();
        assert_eq!(e.line, 1);
        let e = parse_system("modulus = 7\nn = 1..3\npairs = 1\nequation = n*u\n").unwrap_err();
        assert_eq!(e.line, 4);
        let e = parse_system("modulus = 7\nn = 1..3\npairs = 1\nequation = n\nsigns = 1 -1 1\n").unwrap_err();
        assert_eq!(e.line, 5);
        let e = parse_system("modulus = 7\nn = 5..3\n").unwrap_err();
        assert_eq!(e.line, 2);
        let e = parse_system("modulus = 7\nmodulus = 11\n").unwrap_err();
        assert!(e.message.contains("duplicate"));
        assert!(parse_system("modulus = 7\nn = 1..3\nequation = n\n").is_err());
    }
}
