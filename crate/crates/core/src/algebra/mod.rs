//! Exact arithmetic kernel: rationals, sparse polynomials, rational
//! functions and linear algebra over ℚ and ℚ(vars).

mod linalg;
mod poly;
mod ratfunc;

use std::collections::{BTreeMap, HashMap};

pub use linalg::{clear_vector, generic_rank, generic_rank_ratfunc, Field, Matrix};
pub use poly::{Monomial, Poly};
pub use ratfunc::RatFunc;

use crate::error::{Error, Result};

/// Arbitrary precision rational number.
pub type Rational = num_rational::BigRational;

/// Shorthand for `n/d`.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

/// Ordered list of named coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chart {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl Chart {
    pub fn new(names: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(names.len());
        for (i, n) in names.iter().enumerate() {
            if index.insert(n.clone(), i).is_some() {
                return Err(Error::Shape(format!("duplicate coordinate name `{n}`")));
            }
        }
        Ok(Chart { names, index })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.index.get(name).copied().ok_or_else(|| Error::ChartMismatch(name.to_string()))
    }

    /// Checks that `p` only uses coordinates of this chart.
    pub fn check(&self, p: &Poly) -> Result<()> {
        match p.max_var() {
            Some(v) if v >= self.len() => Err(Error::ChartMismatch(format!("#{v}"))),
            _ => Ok(()),
        }
    }

    /// Turns a named assignment into a dense point.
    pub fn point(&self, assignment: &BTreeMap<String, Rational>) -> Result<Vec<Rational>> {
        for k in assignment.keys() {
            self.index_of(k)?;
        }
        self.names
            .iter()
            .map(|n| assignment.get(n).cloned().ok_or_else(|| Error::IncompletePoint(n.clone())))
            .collect()
    }

    pub fn display(&self, p: &Poly) -> String {
        p.display_with(&|v| self.names.get(v).cloned().unwrap_or_else(|| format!("#{v}")))
    }
}

/// `∂p/∂v` for a named variable of the chart.
pub fn poly_partial(p: &Poly, chart: &Chart, v: &str) -> Result<Poly> {
    Ok(p.partial(chart.index_of(v)?))
}

/// Exact evaluation at a named point covering the whole chart.
pub fn poly_eval(p: &Poly, chart: &Chart, point: &BTreeMap<String, Rational>) -> Result<Rational> {
    chart.check(p)?;
    p.eval(&chart.point(point)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn chart() -> Chart {
        Chart::new(vec!["x".into(), "u".into(), "u1".into()]).unwrap()
    }

    #[test]
    fn named_operations() {
        let c = chart();
        let p = Poly::var(0).pow(2) + Poly::var(1);
        assert!(matches!(poly_partial(&p, &c, "y"), Err(Error::ChartMismatch(_))));
        let mut pt = BTreeMap::new();
        pt.insert("x".to_string(), rat(2, 1));
        pt.insert("u".to_string(), rat(1, 1));
        assert!(matches!(poly_eval(&p, &c, &pt), Err(Error::IncompletePoint(_))));
        pt.insert("u1".to_string(), rat(7, 1));
        assert_eq!(poly_eval(&p, &c, &pt).unwrap(), rat(5, 1));
        assert_eq!(c.display(&poly_partial(&p, &c, "x").unwrap()), "2*x");
    }

    fn arb_poly(nvars: usize) -> impl Strategy<Value = Poly> {
        prop::collection::vec(
            (prop::collection::vec(0u32..3, nvars), -5i64..6, 1i64..4),
            0..5,
        )
        .prop_map(|terms| {
            Poly::from_terms(terms.into_iter().map(|(e, n, d)| (Monomial::from_exponents(&e), rat(n, d))))
        })
    }

    fn arb_qmatrix() -> impl Strategy<Value = Matrix<Rational>> {
        (1usize..5, 1usize..5).prop_flat_map(|(r, c)| {
            prop::collection::vec(prop::collection::vec(-2i64..3, c), r)
                .prop_map(move |rows| Matrix::from_rows(c, rows.into_iter().map(|r| r.into_iter().map(|x| rat(x, 1)).collect()).collect()))
        })
    }

    proptest! {
        #[test]
        fn leibniz_rule(p in arb_poly(3), q in arb_poly(3), v in 0usize..3) {
            let lhs = (&p * &q).partial(v);
            let rhs = &(&p.partial(v) * &q) + &(&p * &q.partial(v));
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn rank_nullity(m in arb_qmatrix()) {
            let k = m.kernel_basis();
            prop_assert_eq!(m.rank() + k.len(), m.cols());
            for v in &k {
                prop_assert!(m.mul_vec(v).iter().all(Field::is_zero));
            }
        }

        #[test]
        fn generic_rank_dominates_point_rank(
            entries in prop::collection::vec(arb_poly(2), 6),
            pts in prop::collection::vec((-4i64..5, -4i64..5), 20),
        ) {
            let m = Matrix::from_rows(3, vec![entries[0..3].to_vec(), entries[3..6].to_vec()]);
            let g = generic_rank(&m).unwrap();
            let mut hit = false;
            for (a, b) in pts {
                let r = m.eval(&[rat(a, 1), rat(b, 1)]).unwrap().rank();
                prop_assert!(r <= g);
                hit |= r == g;
            }
            prop_assert!(hit);
        }
    }
}
