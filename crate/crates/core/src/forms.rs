//! Exterior algebra over a coordinate chart with rational-function
//! coefficients. Coordinates are referred to by index; the chart only
//! matters for printing.

use std::collections::BTreeMap;
use std::fmt;

use crate::algebra::{Field, Poly, RatFunc, Rational};
use crate::error::{Error, Result};

/// A homogeneous differential form `Σ f_J dz^J`, `J` strictly increasing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiffForm {
    degree: usize,
    terms: BTreeMap<Vec<usize>, RatFunc>,
}

/// Sorts `idx` in place and returns the permutation sign, or `None` when an
/// index repeats.
fn canonicalize(idx: &mut [usize]) -> Option<i32> {
    let mut sign = 1;
    for i in 1..idx.len() {
        let mut j = i;
        while j > 0 && idx[j - 1] > idx[j] {
            idx.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if idx.windows(2).any(|w| w[0] == w[1]) {
        None
    } else {
        Some(sign)
    }
}

impl DiffForm {
    pub fn zero(degree: usize) -> Self {
        DiffForm { degree, terms: BTreeMap::new() }
    }

    /// A 0-form.
    pub fn function(f: RatFunc) -> Self {
        let mut out = DiffForm::zero(0);
        out.add_term(Vec::new(), f);
        out
    }

    /// `dz_i`
    pub fn d_coord(i: usize) -> Self {
        let mut out = DiffForm::zero(1);
        out.add_term(vec![i], RatFunc::one());
        out
    }

    /// The 1-form `Σ c_i dz_i`.
    pub fn one_form(coeffs: &[RatFunc]) -> Self {
        let mut out = DiffForm::zero(1);
        for (i, c) in coeffs.iter().enumerate() {
            out.add_term(vec![i], c.clone());
        }
        out
    }

    /// Adds `f dz^idx`, reordering `idx` with the matching sign.
    pub fn add_term(&mut self, mut idx: Vec<usize>, f: RatFunc) {
        assert_eq!(idx.len(), self.degree, "term degree differs from form degree");
        if f.is_zero() {
            return;
        }
        let Some(sign) = canonicalize(&mut idx) else { return };
        let f = if sign < 0 { f.neg() } else { f };
        match self.terms.get(&idx) {
            Some(old) => {
                let sum = old.add(&f);
                if sum.is_zero() {
                    self.terms.remove(&idx);
                } else {
                    self.terms.insert(idx, sum);
                }
            }
            None => {
                self.terms.insert(idx, f);
            }
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<usize>, &RatFunc)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, idx: &[usize]) -> RatFunc {
        let mut idx = idx.to_vec();
        match canonicalize(&mut idx) {
            Some(sign) => {
                let c = self.terms.get(&idx).cloned().unwrap_or_else(RatFunc::zero);
                if sign < 0 {
                    c.neg()
                } else {
                    c
                }
            }
            None => RatFunc::zero(),
        }
    }

    /// Largest coordinate index used by a differential or a coefficient.
    pub fn max_var(&self) -> Option<usize> {
        self.terms
            .iter()
            .flat_map(|(idx, f)| idx.iter().copied().chain(f.max_var()))
            .max()
    }

    pub fn add(&self, other: &DiffForm) -> DiffForm {
        assert_eq!(self.degree, other.degree, "adding forms of different degree");
        let mut out = self.clone();
        for (idx, f) in &other.terms {
            out.add_term(idx.clone(), f.clone());
        }
        out
    }

    pub fn sub(&self, other: &DiffForm) -> DiffForm {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> DiffForm {
        DiffForm { degree: self.degree, terms: self.terms.iter().map(|(k, f)| (k.clone(), f.neg())).collect() }
    }

    /// Multiplication by a function.
    pub fn scale(&self, f: &RatFunc) -> DiffForm {
        let mut out = DiffForm::zero(self.degree);
        for (idx, c) in &self.terms {
            out.add_term(idx.clone(), c.mul(f));
        }
        out
    }

    pub fn wedge(&self, other: &DiffForm) -> DiffForm {
        let mut out = DiffForm::zero(self.degree + other.degree);
        for (a, f) in &self.terms {
            for (b, g) in &other.terms {
                let mut idx = a.clone();
                idx.extend_from_slice(b);
                out.add_term(idx, f.mul(g));
            }
        }
        out
    }

    /// `df` for a function `f`.
    pub fn differential(f: &RatFunc) -> DiffForm {
        let mut out = DiffForm::zero(1);
        let mut vars = f.num().vars();
        vars.extend(f.den().vars());
        vars.sort_unstable();
        vars.dedup();
        for v in vars {
            out.add_term(vec![v], f.partial(v));
        }
        out
    }

    /// Exterior derivative.
    pub fn d(&self) -> DiffForm {
        let mut out = DiffForm::zero(self.degree + 1);
        for (idx, f) in &self.terms {
            for (dv, c) in DiffForm::differential(f).terms {
                let mut j = dv;
                j.extend_from_slice(idx);
                out.add_term(j, c);
            }
        }
        out
    }

    /// Interior product `X ⌟ ω`; `x[i]` is the component along `∂/∂z_i`.
    pub fn interior(&self, x: &[RatFunc]) -> DiffForm {
        if self.degree == 0 {
            return DiffForm::zero(0);
        }
        let mut out = DiffForm::zero(self.degree - 1);
        for (idx, f) in &self.terms {
            for (r, &j) in idx.iter().enumerate() {
                let Some(xj) = x.get(j) else { continue };
                if xj.is_zero() {
                    continue;
                }
                let mut rest = idx.clone();
                rest.remove(r);
                let c = f.mul(xj);
                out.add_term(rest, if r % 2 == 1 { c.neg() } else { c });
            }
        }
        out
    }

    /// Full contraction with `degree` vectors, `ω(X_1, …, X_p)`.
    pub fn evaluate(&self, vectors: &[Vec<RatFunc>]) -> RatFunc {
        assert_eq!(vectors.len(), self.degree, "wrong number of vectors");
        let mut form = self.clone();
        for v in vectors {
            form = form.interior(v);
        }
        form.coefficient(&[])
    }

    /// Coefficients of a 1-form as a dense row of length `n`.
    pub fn row(&self, n: usize) -> Result<Vec<RatFunc>> {
        if self.degree != 1 {
            return Err(Error::Shape(format!("expected a 1-form, got degree {}", self.degree)));
        }
        let mut out = vec![RatFunc::zero(); n];
        for (idx, f) in &self.terms {
            let slot = out
                .get_mut(idx[0])
                .ok_or_else(|| Error::Shape(format!("differential #{} outside a chart of {n} coordinates", idx[0])))?;
            *slot = f.clone();
        }
        Ok(out)
    }

    /// Pullback along `z_i = images[i]`, a polynomial map into this chart.
    pub fn pullback(&self, images: &[Poly]) -> DiffForm {
        let sub = |v: usize| images.get(v).cloned();
        let diffs: BTreeMap<usize, DiffForm> = self
            .terms
            .keys()
            .flatten()
            .map(|&j| (j, DiffForm::differential(&RatFunc::from_poly(images[j].clone()))))
            .collect();
        let mut out = DiffForm::zero(self.degree);
        for (idx, f) in &self.terms {
            let mut piece = DiffForm::function(f.substitute(&sub));
            for j in idx {
                piece = piece.wedge(&diffs[j]);
            }
            out = out.add(&piece);
        }
        out
    }

    /// Renames coordinate indices in differentials and coefficients.
    pub fn remap(&self, f: &dyn Fn(usize) -> usize) -> DiffForm {
        let mut out = DiffForm::zero(self.degree);
        for (idx, c) in &self.terms {
            out.add_term(idx.iter().map(|&i| f(i)).collect(), c.remap(f));
        }
        out
    }

    /// Evaluates coefficients at a point; `None` on a vanishing denominator.
    pub fn eval(&self, point: &[Rational]) -> Result<Option<BTreeMap<Vec<usize>, Rational>>> {
        let mut out = BTreeMap::new();
        for (idx, f) in &self.terms {
            match f.eval(point)? {
                Some(v) => {
                    if !Field::is_zero(&v) {
                        out.insert(idx.clone(), v);
                    }
                }
                None => return Ok(None),
            }
        }
        Ok(Some(out))
    }

    pub fn display_with(&self, name: &dyn Fn(usize) -> String) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (n, (idx, f)) in self.terms.iter().enumerate() {
            let diffs = idx.iter().map(|&i| format!("d({})", name(i))).collect::<Vec<_>>().join("^");
            let mut coef = f.display_with(name);
            let negative = coef.starts_with('-') && f.num().len() == 1;
            if negative {
                coef.remove(0);
            }
            if n > 0 {
                out.push_str(if negative { " - " } else { " + " });
            } else if negative {
                out.push('-');
            }
            if diffs.is_empty() {
                out.push_str(&coef);
                continue;
            }
            if coef != "1" {
                if f.num().len() > 1 || !f.is_polynomial() {
                    out.push_str(&format!("({coef})*"));
                } else {
                    out.push_str(&coef);
                    out.push('*');
                }
            }
            out.push_str(&diffs);
        }
        out
    }
}

impl fmt::Display for DiffForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display_with(&|v| format!("z{v}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::rat;

    fn p(v: usize) -> RatFunc {
        RatFunc::from_poly(Poly::var(v))
    }

    // coordinates x=0, y=1, z=2
    fn darboux() -> DiffForm {
        DiffForm::d_coord(1).sub(&DiffForm::d_coord(0).scale(&p(2)))
    }

    #[test]
    fn exterior_derivative_examples() {
        let dw = darboux().d();
        assert_eq!(dw, DiffForm::d_coord(0).wedge(&DiffForm::d_coord(2)));
        assert!(DiffForm::d_coord(1).d().is_zero());
        let xdy = DiffForm::d_coord(1).scale(&p(0));
        assert_eq!(xdy.d(), DiffForm::d_coord(0).wedge(&DiffForm::d_coord(1)));
        assert!(dw.d().is_zero());
    }

    #[test]
    fn wedge_signs() {
        let dx = DiffForm::d_coord(0);
        let dy = DiffForm::d_coord(1);
        assert_eq!(dx.wedge(&dy), dy.wedge(&dx).neg());
        assert!(dx.wedge(&dx).is_zero());
    }

    #[test]
    fn interior_and_evaluation() {
        let dxdz = DiffForm::d_coord(0).wedge(&DiffForm::d_coord(2));
        let e = |i: usize| (0..3).map(|j| if i == j { RatFunc::one() } else { RatFunc::zero() }).collect::<Vec<_>>();
        assert_eq!(dxdz.evaluate(&[e(0), e(2)]), RatFunc::one());
        assert_eq!(dxdz.evaluate(&[e(2), e(0)]), RatFunc::one().neg());
        assert_eq!(dxdz.interior(&e(0)), DiffForm::d_coord(2));
    }

    #[test]
    fn pullback_along_a_curve() {
        // (x, y, z) = (t, t²/2, t) pulls dy − z dx back to 0
        let t = Poly::var(0);
        let images = vec![t.clone(), (&t * &t).scale(&rat(1, 2)), t];
        assert!(darboux().pullback(&images).is_zero());
    }

    #[test]
    fn display() {
        let names = ["x", "y", "z"];
        let nm = |v: usize| names[v].to_string();
        assert_eq!(darboux().display_with(&nm), "-z*d(x) + d(y)");
        assert_eq!(darboux().d().display_with(&nm), "d(x)^d(z)");
    }
}
