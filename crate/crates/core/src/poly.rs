//! Sparse multivariate polynomials over named variables.
//!
//! Monomials are ordered graded-lexicographically (total degree first, then
//! lexicographic on the exponent vector). This order is used everywhere a
//! basis or a term list is enumerated, so template coefficients, SDP rows
//! and printed certificates are indexed deterministically.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use smallvec::SmallVec;

use crate::error::{Error, Result};

/// An ordered list of variable names.
#[derive(Clone, Debug)]
pub struct VariableSpace {
    names: Arc<Vec<String>>,
}

impl PartialEq for VariableSpace {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.names, &other.names) || self.names == other.names
    }
}

impl Eq for VariableSpace {}

impl VariableSpace {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        for (i, n) in names.iter().enumerate() {
            if n.is_empty() || !n.chars().next().unwrap().is_alphabetic() {
                return Err(Error::structural(format!("invalid variable name `{n}`")));
            }
            if !n.chars().all(|c| c.is_alphanumeric() || c == '_') {
                return Err(Error::structural(format!("invalid variable name `{n}`")));
            }
            if names[..i].contains(n) {
                return Err(Error::structural(format!("duplicate variable name `{n}`")));
            }
        }
        Ok(Self { names: Arc::new(names) })
    }

    /// `prefix1 .. prefixN`.
    pub fn indexed(prefix: &str, n: usize) -> Self {
        Self::new((1..=n).map(|i| format!("{prefix}{i}"))).expect("generated names are valid")
    }

    /// Concatenation of several spaces; names must stay unique.
    pub fn concat(parts: &[&VariableSpace]) -> Result<Self> {
        Self::new(parts.iter().flat_map(|p| p.names.iter().cloned()))
    }

    pub fn arity(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// A copy of this space with every name passed through `rename`.
    pub fn renamed(&self, rename: impl Fn(&str) -> String) -> Result<Self> {
        Self::new(self.names.iter().map(|n| rename(n)))
    }
}

type Exps = SmallVec<[u8; 12]>;

/// Exponent vector. The derived ordering compares the cached total degree
/// first and the exponents lexicographically second, which is graded-lex.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial {
    degree: u32,
    exps: Exps,
}

impl Monomial {
    pub fn new(exps: &[u32]) -> Self {
        let degree = exps.iter().sum();
        let exps = exps.iter().map(|&e| u8::try_from(e).expect("exponent exceeds 255")).collect();
        Self { degree, exps }
    }

    pub fn one(arity: usize) -> Self {
        Self { degree: 0, exps: SmallVec::from_elem(0, arity) }
    }

    pub fn var(arity: usize, index: usize) -> Self {
        let mut m = Self::one(arity);
        m.exps[index] = 1;
        m.degree = 1;
        m
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn arity(&self) -> usize {
        self.exps.len()
    }

    pub fn exponent(&self, var: usize) -> u32 {
        u32::from(self.exps[var])
    }

    pub fn exponents(&self) -> impl Iterator<Item = u32> + '_ {
        self.exps.iter().map(|&e| u32::from(e))
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        debug_assert_eq!(self.arity(), other.arity());
        let exps =
            self.exps.iter().zip(&other.exps).map(|(a, b)| a.checked_add(*b).expect("exponent overflow")).collect();
        Monomial { degree: self.degree + other.degree, exps }
    }

    pub fn eval(&self, point: &[f64]) -> f64 {
        self.exps.iter().zip(point).filter(|(e, _)| **e > 0).map(|(&e, &x)| x.powi(i32::from(e))).product()
    }

    /// Embed into a larger arity: variable `i` of `self` becomes `map[i]`.
    pub fn remap(&self, map: &[usize], arity: usize) -> Monomial {
        let mut exps: Exps = SmallVec::from_elem(0, arity);
        for (i, &e) in self.exps.iter().enumerate() {
            exps[map[i]] += e;
        }
        Monomial { degree: self.degree, exps }
    }

    fn write_with(&self, names: &[String], f: &mut impl fmt::Write) -> fmt::Result {
        let mut first = true;
        for (i, &e) in self.exps.iter().enumerate() {
            if e == 0 {
                continue;
            }
            if !first {
                f.write_char('*')?;
            }
            first = false;
            f.write_str(&names[i])?;
            if e > 1 {
                write!(f, "^{e}")?;
            }
        }
        Ok(())
    }
}

/// All monomials of total degree at most `max_degree` in graded-lex order.
/// The length is `C(arity + max_degree, max_degree)`.
pub fn monomial_basis(arity: usize, max_degree: u32) -> Vec<Monomial> {
    let mut out = Vec::with_capacity(binomial(arity + max_degree as usize, max_degree as usize));
    for d in 0..=max_degree {
        let mut exps = vec![0u32; arity];
        push_degree(&mut out, &mut exps, 0, d);
    }
    out
}

// Emits monomials of exact degree `left` over positions `pos..` in increasing lex order.
fn push_degree(out: &mut Vec<Monomial>, exps: &mut [u32], pos: usize, left: u32) {
    if exps.is_empty() {
        if left == 0 {
            out.push(Monomial::new(exps));
        }
        return;
    }
    if pos == exps.len() - 1 {
        exps[pos] = left;
        out.push(Monomial::new(exps));
        exps[pos] = 0;
        return;
    }
    for e in 0..=left {
        exps[pos] = e;
        push_degree(out, exps, pos + 1, left - e);
    }
    exps[pos] = 0;
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

/// Polynomial with real coefficients in canonical form (no stored zeros).
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    space: VariableSpace,
    terms: BTreeMap<Monomial, f64>,
}

impl Polynomial {
    pub fn zero(space: &VariableSpace) -> Self {
        Self { space: space.clone(), terms: BTreeMap::new() }
    }

    pub fn constant(space: &VariableSpace, c: f64) -> Self {
        let mut p = Self::zero(space);
        p.add_term(Monomial::one(space.arity()), c);
        p
    }

    pub fn var(space: &VariableSpace, index: usize) -> Self {
        let mut p = Self::zero(space);
        p.add_term(Monomial::var(space.arity(), index), 1.0);
        p
    }

    pub fn monomial(space: &VariableSpace, m: Monomial, c: f64) -> Self {
        assert_eq!(m.arity(), space.arity());
        let mut p = Self::zero(space);
        p.add_term(m, c);
        p
    }

    pub fn from_terms(space: &VariableSpace, terms: impl IntoIterator<Item = (Monomial, f64)>) -> Result<Self> {
        let mut p = Self::zero(space);
        for (m, c) in terms {
            if m.arity() != space.arity() {
                return Err(Error::structural("monomial arity does not match space"));
            }
            p.add_term(m, c);
        }
        Ok(p)
    }

    pub fn space(&self) -> &VariableSpace {
        &self.space
    }

    pub fn terms(&self) -> &BTreeMap<Monomial, f64> {
        &self.terms
    }

    pub fn coefficient(&self, m: &Monomial) -> f64 {
        self.terms.get(m).copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Max term degree; the zero polynomial has degree 0.
    pub fn degree(&self) -> u32 {
        self.terms.keys().next_back().map_or(0, Monomial::degree)
    }

    /// Largest absolute coefficient (0 for the zero polynomial).
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |a, c| a.max(c.abs()))
    }

    pub fn add_term(&mut self, m: Monomial, c: f64) {
        if c == 0.0 {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                let s = *o.get() + c;
                if s == 0.0 {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    fn check_space(&self, other: &Polynomial) -> Result<()> {
        if self.space != other.space {
            return Err(Error::structural(format!(
                "variable space mismatch: {:?} vs {:?}",
                self.space.names(),
                other.space.names()
            )));
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_space(other)?;
        let mut out = self.clone();
        out.add_scaled(other, 1.0);
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_space(other)?;
        let mut out = self.clone();
        out.add_scaled(other, -1.0);
        Ok(out)
    }

    pub fn checked_mul(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_space(other)?;
        let mut out = Polynomial::zero(&self.space);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        Ok(out)
    }

    /// `self += s * other` in place. Panics on a space mismatch.
    pub fn add_scaled(&mut self, other: &Polynomial, s: f64) {
        assert_eq!(self.space, other.space, "variable space mismatch");
        if s == 0.0 {
            return;
        }
        for (m, c) in &other.terms {
            self.add_term(m.clone(), s * c);
        }
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        if s == 0.0 {
            return Polynomial::zero(&self.space);
        }
        let terms = self.terms.iter().map(|(m, c)| (m.clone(), c * s)).collect();
        Polynomial { space: self.space.clone(), terms }
    }

    pub fn pow(&self, e: u32) -> Polynomial {
        let mut acc = Polynomial::constant(&self.space, 1.0);
        for _ in 0..e {
            acc = acc.checked_mul(self).expect("same space");
        }
        acc
    }

    /// Evaluate by summing terms in graded-lex order.
    pub fn eval(&self, point: &[f64]) -> Result<f64> {
        if point.len() != self.space.arity() {
            return Err(Error::structural(format!(
                "point has length {}, expected {}",
                point.len(),
                self.space.arity()
            )));
        }
        Ok(self.eval_unchecked(point))
    }

    pub(crate) fn eval_unchecked(&self, point: &[f64]) -> f64 {
        self.terms.iter().map(|(m, c)| c * m.eval(point)).sum()
    }

    /// Substitute variable `i` by `images[i]`; every image lives in `target`.
    pub fn compose(&self, images: &[Polynomial], target: &VariableSpace) -> Result<Polynomial> {
        Composer::new(images, target)?.apply(self)
    }

    /// Re-express in `target`, sending variable `i` to `map[i]`.
    pub fn embed(&self, target: &VariableSpace, map: &[usize]) -> Result<Polynomial> {
        if map.len() != self.space.arity() || map.iter().any(|&j| j >= target.arity()) {
            return Err(Error::structural("embedding map does not match spaces"));
        }
        let mut out = Polynomial::zero(target);
        for (m, c) in &self.terms {
            out.add_term(m.remap(map, target.arity()), *c);
        }
        Ok(out)
    }

    /// Embed a polynomial whose variables are a contiguous block of `target`
    /// starting at `offset`.
    pub fn embed_block(&self, target: &VariableSpace, offset: usize) -> Result<Polynomial> {
        let map: Vec<usize> = (0..self.space.arity()).map(|i| i + offset).collect();
        self.embed(target, &map)
    }

    /// Text form, e.g. `-19.489*x1^2*y1 + 10.356`; highest graded-lex term first.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        if self.terms.is_empty() {
            return "0".to_string();
        }
        for (i, (m, c)) in self.terms.iter().rev().enumerate() {
            let (sign, mag) = if *c < 0.0 { ("-", -c) } else { ("+", *c) };
            if i == 0 {
                if sign == "-" {
                    s.push('-');
                }
            } else {
                s.push(' ');
                s.push_str(sign);
                s.push(' ');
            }
            s.push_str(&format!("{mag:?}"));
            if m.degree() > 0 {
                s.push('*');
                m.write_with(self.space.names(), &mut s).expect("string write");
            }
        }
        s
    }

    /// Parse the text form produced by [`Polynomial::to_text`] (any term order).
    pub fn parse(space: &VariableSpace, text: &str) -> Result<Polynomial> {
        let mut p = Polynomial::zero(space);
        let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        if compact == "0" {
            return Ok(p);
        }
        let bytes = compact.as_bytes();
        let mut start = 0;
        let mut i = 0;
        let mut terms = Vec::new();
        while i <= bytes.len() {
            let boundary = i == bytes.len()
                || (i > start && (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E' | b'^'));
            if boundary {
                terms.push(&compact[start..i]);
                start = i;
            }
            i += 1;
        }
        for term in terms {
            let (sign, body) = match term.as_bytes().first() {
                Some(b'-') => (-1.0, &term[1..]),
                Some(b'+') => (1.0, &term[1..]),
                _ => (1.0, term),
            };
            if body.is_empty() {
                return Err(Error::parse(0, format!("empty term in `{text}`")));
            }
            let mut coef = sign;
            let mut exps = vec![0u32; space.arity()];
            for factor in body.split('*') {
                if let Ok(v) = factor.parse::<f64>() {
                    coef *= v;
                    continue;
                }
                let (name, e) = match factor.split_once('^') {
                    Some((n, e)) => {
                        (n, e.parse::<u32>().map_err(|_| Error::parse(0, format!("bad exponent in `{factor}`")))?)
                    }
                    None => (factor, 1),
                };
                let idx = space.index_of(name).ok_or_else(|| Error::parse(0, format!("unknown variable `{name}`")))?;
                exps[idx] += e;
            }
            p.add_term(Monomial::new(&exps), coef);
        }
        Ok(p)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl std::ops::Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        self.checked_add(rhs).expect("variable space mismatch")
    }
}

impl std::ops::Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self.checked_sub(rhs).expect("variable space mismatch")
    }
}

impl std::ops::Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        self.checked_mul(rhs).expect("variable space mismatch")
    }
}

impl std::ops::Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

/// Reusable substitution with a cache of image powers, for composing many
/// polynomials through the same map.
pub struct Composer<'a> {
    images: &'a [Polynomial],
    target: VariableSpace,
    powers: Vec<Vec<Polynomial>>,
}

impl<'a> Composer<'a> {
    pub fn new(images: &'a [Polynomial], target: &VariableSpace) -> Result<Self> {
        if let Some(bad) = images.iter().find(|p| p.space() != target) {
            return Err(Error::structural(format!(
                "substitution image lives in {:?}, expected {:?}",
                bad.space().names(),
                target.names()
            )));
        }
        let powers = images.iter().map(|p| vec![Polynomial::constant(target, 1.0), p.clone()]).collect();
        Ok(Self { images, target: target.clone(), powers })
    }

    fn power(&mut self, var: usize, e: u32) -> &Polynomial {
        let e = e as usize;
        while self.powers[var].len() <= e {
            let next = self.powers[var].last().unwrap() * &self.images[var];
            self.powers[var].push(next);
        }
        &self.powers[var][e]
    }

    pub fn apply(&mut self, p: &Polynomial) -> Result<Polynomial> {
        if p.space().arity() != self.images.len() {
            return Err(Error::structural(format!(
                "substitution covers {} variables, polynomial has {}",
                self.images.len(),
                p.space().arity()
            )));
        }
        let mut out = Polynomial::zero(&self.target);
        for (m, c) in p.terms() {
            let mut acc = Polynomial::constant(&self.target, *c);
            for (v, e) in m.exponents().enumerate() {
                if e > 0 {
                    let pw = self.power(v, e).clone();
                    acc = &acc * &pw;
                }
            }
            out.add_scaled(&acc, 1.0);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> VariableSpace {
        VariableSpace::new(["x"]).unwrap()
    }

    #[test]
    fn additive_inverse_and_identity() {
        let s = x();
        let p = &Polynomial::var(&s, 0) + &Polynomial::constant(&s, 1.0);
        let q = -&p;
        assert!((&p + &q).is_zero());
        assert_eq!(&p + &Polynomial::zero(&s), p);
    }

    #[test]
    fn hand_expanded_sum() {
        let s = x();
        let p = Polynomial::parse(&s, "x^2 + 2*x").unwrap();
        let q = Polynomial::parse(&s, "x - 1").unwrap();
        assert_eq!(&p + &q, Polynomial::parse(&s, "x^2 + 3*x - 1").unwrap());
    }

    #[test]
    fn products() {
        let s = x();
        let a = Polynomial::parse(&s, "x + 1").unwrap();
        let b = Polynomial::parse(&s, "x - 1").unwrap();
        assert_eq!(&a * &b, Polynomial::parse(&s, "x^2 - 1").unwrap());
        assert_eq!(&Polynomial::constant(&s, 1.0) * &a, a);
        let s2 = VariableSpace::indexed("x", 2);
        let c = Polynomial::parse(&s2, "x1 + x2").unwrap();
        assert_eq!(c.pow(2), Polynomial::parse(&s2, "x1^2 + 2*x1*x2 + x2^2").unwrap());
    }

    #[test]
    fn space_mismatch_is_an_error() {
        let a = Polynomial::var(&x(), 0);
        let b = Polynomial::var(&VariableSpace::new(["y"]).unwrap(), 0);
        assert!(matches!(a.checked_add(&b), Err(Error::Structural(_))));
        assert!(a.checked_mul(&b).is_err());
    }

    #[test]
    fn compose_rotation_and_shear() {
        let pair = VariableSpace::new(["x1", "x2", "y1", "y2"]).unwrap();
        let p = Polynomial::parse(&pair, "x1*y1").unwrap();
        let v = |i| Polynomial::var(&pair, i);
        let images = vec![v(1), -&v(0), v(2), v(3)];
        assert_eq!(p.compose(&images, &pair).unwrap(), Polynomial::parse(&pair, "x2*y1").unwrap());
        let ident: Vec<_> = (0..4).map(v).collect();
        assert_eq!(p.compose(&ident, &pair).unwrap(), p);

        let s = VariableSpace::indexed("x", 2);
        let sq = Polynomial::parse(&s, "x1^2").unwrap();
        let shear = vec![Polynomial::parse(&s, "x1 + 0.1*x2").unwrap(), Polynomial::var(&s, 1)];
        let got = sq.compose(&shear, &s).unwrap();
        let want = Polynomial::parse(&s, "x1^2 + 0.2*x1*x2 + 0.01*x2^2").unwrap();
        assert!((&got - &want).max_abs_coeff() < 1e-15);
    }

    #[test]
    fn compose_requires_full_substitution() {
        let s = VariableSpace::indexed("x", 2);
        let p = Polynomial::var(&s, 0);
        assert!(p.compose(&[Polynomial::var(&s, 0)], &s).is_err());
    }

    #[test]
    fn eval_fig1_component() {
        let s = VariableSpace::new(["x", "y"]).unwrap();
        let t1 = Polynomial::parse(&s, "847.87*x*y - 883.63*y^2 - 3391.47*x + 4442.96*y - 3633.71").unwrap();
        assert!((t1.eval(&[0.0, 2.0]).unwrap() - 1717.69).abs() < 1e-9);
        assert!((t1.eval(&[0.0, 1.0]).unwrap() + 74.38).abs() < 1e-9);
        assert_eq!(Polynomial::zero(&s).eval(&[3.0, 4.0]).unwrap(), 0.0);
        assert!(t1.eval(&[1.0]).is_err());
    }

    #[test]
    fn basis_order_and_counts() {
        let b = monomial_basis(2, 1);
        assert_eq!(b, vec![Monomial::new(&[0, 0]), Monomial::new(&[0, 1]), Monomial::new(&[1, 0])]);
        assert_eq!(monomial_basis(4, 3).len(), 35);
        assert_eq!(monomial_basis(1, 2).len(), 3);
        // Matches the printed Kuramoto basis: 1, x3, x2, x1, x3^2, x2*x3, ...
        let s = VariableSpace::indexed("x", 3);
        let names: Vec<String> =
            monomial_basis(3, 2).into_iter().map(|m| Polynomial::monomial(&s, m, 1.0).to_text()).collect();
        assert_eq!(
            names,
            [
                "1.0",
                "1.0*x3",
                "1.0*x2",
                "1.0*x1",
                "1.0*x3^2",
                "1.0*x2*x3",
                "1.0*x2^2",
                "1.0*x1*x3",
                "1.0*x1*x2",
                "1.0*x1^2"
            ]
        );
    }

    #[test]
    fn text_round_trip_with_exponents_and_small_coefficients() {
        let s = VariableSpace::new(["x1", "y2"]).unwrap();
        let p = Polynomial::parse(&s, "1e-20*x1^3*y2 - 0.5*y2^2 + 3").unwrap();
        let text = p.to_text();
        assert_eq!(Polynomial::parse(&s, &text).unwrap(), p);
        assert_eq!(Polynomial::parse(&s, &Polynomial::zero(&s).to_text()).unwrap(), Polynomial::zero(&s));
    }

    #[test]
    fn zero_has_degree_zero() {
        assert_eq!(Polynomial::zero(&x()).degree(), 0);
    }
}
