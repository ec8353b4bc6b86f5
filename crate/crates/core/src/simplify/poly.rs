//! Sum-of-products normal form for number expressions.
//!
//! Any subterm that is not `+`, `-`, `*` or a constant is an atom. A
//! polynomial maps sorted atom multisets (monomials) to nonzero integer
//! coefficients. Arithmetic is checked; `None` means the coefficients
//! overflowed and the caller should keep the expression as written.

use std::collections::BTreeMap;

use crate::constraints::{NumExpr, NumOp};

pub type Monomial = Vec<NumExpr>;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Poly {
    terms: BTreeMap<Monomial, i64>,
}

impl Poly {
    pub fn constant(c: i64) -> Poly {
        let mut terms = BTreeMap::new();
        if c != 0 {
            terms.insert(Vec::new(), c);
        }
        Poly { terms }
    }

    pub fn atom(e: NumExpr) -> Poly {
        let mut terms = BTreeMap::new();
        terms.insert(vec![e], 1);
        Poly { terms }
    }

    /// Builds the polynomial of an expression whose non-arithmetic subterms
    /// are already simplified.
    pub fn from_expr(e: &NumExpr) -> Option<Poly> {
        match e {
            NumExpr::Const(c) => Some(Poly::constant(*c)),
            NumExpr::Bin(NumOp::Add, a, b) => Poly::from_expr(a)?.add(&Poly::from_expr(b)?),
            NumExpr::Bin(NumOp::Sub, a, b) => Poly::from_expr(a)?.sub(&Poly::from_expr(b)?),
            NumExpr::Bin(NumOp::Mul, a, b) => Poly::from_expr(a)?.mul(&Poly::from_expr(b)?),
            other => Some(Poly::atom(other.clone())),
        }
    }

    pub fn as_const(&self) -> Option<i64> {
        match self.terms.len() {
            0 => Some(0),
            1 => self.terms.get(&Vec::new()).copied(),
            _ => None,
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, i64)> {
        self.terms.iter().map(|(m, c)| (m, *c))
    }

    pub fn constant_term(&self) -> i64 {
        self.terms.get(&Vec::new()).copied().unwrap_or(0)
    }

    fn insert(&mut self, m: Monomial, c: i64) -> Option<()> {
        if c == 0 {
            return Some(());
        }
        let slot = self.terms.entry(m).or_insert(0);
        *slot = slot.checked_add(c)?;
        if *slot == 0 {
            self.terms.retain(|_, v| *v != 0);
        }
        Some(())
    }

    pub fn add(&self, o: &Poly) -> Option<Poly> {
        let mut out = self.clone();
        for (m, c) in &o.terms {
            out.insert(m.clone(), *c)?;
        }
        Some(out)
    }

    pub fn neg(&self) -> Option<Poly> {
        let mut out = Poly::default();
        for (m, c) in &self.terms {
            out.terms.insert(m.clone(), c.checked_neg()?);
        }
        Some(out)
    }

    pub fn sub(&self, o: &Poly) -> Option<Poly> {
        self.add(&o.neg()?)
    }

    pub fn mul(&self, o: &Poly) -> Option<Poly> {
        let mut out = Poly::default();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &o.terms {
                let mut m: Monomial = m1.iter().chain(m2.iter()).cloned().collect();
                m.sort();
                out.insert(m, c1.checked_mul(*c2)?)?;
            }
        }
        Some(out)
    }

    /// Exact quotient by a single-term polynomial, when every term of `self`
    /// is divisible by it.
    pub fn div_exact(&self, o: &Poly) -> Option<Poly> {
        if o.terms.len() != 1 {
            return None;
        }
        let (dm, dc) = o.terms.iter().next()?;
        let mut out = Poly::default();
        for (m, c) in &self.terms {
            if c % dc != 0 {
                return None;
            }
            let mut rest = m.clone();
            for atom in dm {
                let pos = rest.iter().position(|x| x == atom)?;
                rest.remove(pos);
            }
            out.insert(rest, c / dc)?;
        }
        Some(out)
    }

    /// Degree-1 view: coefficient per atom plus the constant, when no
    /// monomial has more than one atom.
    pub fn linear(&self) -> Option<(BTreeMap<&NumExpr, i64>, i64)> {
        let mut coeffs = BTreeMap::new();
        for (m, c) in &self.terms {
            match m.len() {
                0 => {}
                1 => {
                    coeffs.insert(&m[0], *c);
                }
                _ => return None,
            }
        }
        Some((coeffs, self.constant_term()))
    }

    pub fn to_expr(&self) -> NumExpr {
        let mut parts: Vec<(&Monomial, i64)> = self.terms.iter().filter(|(m, _)| !m.is_empty()).map(|(m, c)| (m, *c)).collect();
        let k = self.constant_term();
        let konst: Monomial = Vec::new();
        if k != 0 {
            parts.push((&konst, k));
        }
        let mut acc: Option<NumExpr> = None;
        for (m, c) in parts {
            acc = Some(match acc {
                None => term(m, c),
                Some(prev) if c < 0 && c != i64::MIN => NumExpr::bin(NumOp::Sub, prev, term(m, -c)),
                Some(prev) => NumExpr::bin(NumOp::Add, prev, term(m, c)),
            });
        }
        acc.unwrap_or(NumExpr::Const(0))
    }
}

fn term(m: &Monomial, c: i64) -> NumExpr {
    let mut it = m.iter().cloned();
    let product = match it.next() {
        None => return NumExpr::Const(c),
        Some(first) => it.fold(first, |acc, x| NumExpr::bin(NumOp::Mul, acc, x)),
    };
    if c == 1 {
        product
    } else {
        NumExpr::bin(NumOp::Mul, NumExpr::Const(c), product)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::{Sort, Symbol};

    fn v(id: u32) -> NumExpr {
        NumExpr::Sym(Symbol::new(id, Sort::Num, ""))
    }

    #[test]
    fn collects_like_terms() {
        let e = (v(0) * 1 + v(1)) - v(1) + v(0) * 2;
        let p = Poly::from_expr(&e).unwrap();
        assert_eq!(p.to_expr(), NumExpr::Const(3) * v(0));
    }

    #[test]
    fn exact_division() {
        let p = Poly::from_expr(&(v(0) * 784)).unwrap();
        let q = Poly::from_expr(&v(0)).unwrap();
        assert_eq!(p.div_exact(&q).unwrap().as_const(), Some(784));
        let r = Poly::from_expr(&(v(0) * 784 + 1)).unwrap();
        assert!(r.div_exact(&q).is_none());
    }

    #[test]
    fn normal_form_is_canonical() {
        let a = Poly::from_expr(&(v(1) * v(0) + 3)).unwrap().to_expr();
        let b = Poly::from_expr(&(NumExpr::Const(3) + v(0) * v(1))).unwrap().to_expr();
        assert_eq!(a, b);
        assert_eq!(Poly::from_expr(&a).unwrap().to_expr(), a);
    }
}
