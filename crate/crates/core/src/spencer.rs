//! Symbols, the Spencer δ-complex and Cartan characters.
//!
//! Elements of `S^qT*⊗ℝᵐ` are written in derivative coordinates `v^a_α`
//! (the values of the top-order jet directions). In these coordinates the
//! Spencer map has no factorials:
//! `(δv)^a_{β,iJ} = Σ_i ± v^a_{β+1_i}`, i.e. `δ(e_α⊗dx^J) = Σ_{α_i>0} e_{α−1_i}⊗dx^i∧dx^J`.
//! Under `e_α ↔ ξ^α/α!` this is the usual `Σ α_i e_{α−1_i}⊗dx^i∧dx^J`.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;

use crate::algebra::{generic_rank, Field, Matrix, Monomial, Poly, RatFunc, Rational};
use crate::error::{Error, Result};
use crate::jet::{binomial, multi_indices_of_order, MultiIndex};
use crate::pde::{prolong, PdeSystem};

/// Where a symbol is computed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum At {
    Generic,
    Point(Vec<Rational>),
}

/// `p`-subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, p: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, p: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == p {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, p, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, p, &mut Vec::new(), &mut out);
    out
}

/// Basis bookkeeping for `S^qT*⊗ℝᵐ`: position of `(α, a)` is `pos(α)·m + a`.
#[derive(Clone, Debug)]
struct Ambient {
    m: usize,
    alphas: Vec<MultiIndex>,
    pos: HashMap<MultiIndex, usize>,
}

impl Ambient {
    fn new(n: usize, m: usize, q: usize) -> Self {
        let alphas = multi_indices_of_order(n, q);
        let pos = alphas.iter().enumerate().map(|(i, a)| (a.clone(), i)).collect();
        Ambient { m, alphas, pos }
    }

    fn dim(&self) -> usize {
        self.alphas.len() * self.m
    }

    fn index(&self, alpha: &MultiIndex, a: usize) -> usize {
        self.pos[alpha] * self.m + a
    }
}

/// Matrix of `δ: S^qT*⊗ℝᵐ⊗Λ^p → S^{q−1}T*⊗ℝᵐ⊗Λ^{p+1}`.
///
/// Column `(α, a, J)` sits at `index(α, a)·C(n,p) + pos(J)`; rows likewise.
pub fn ambient_delta_matrix(n: usize, m: usize, q: usize, p: usize) -> Matrix<Rational> {
    let src = Ambient::new(n, m, q);
    let src_forms = subsets(n, p);
    let dst_forms = subsets(n, p + 1);
    let dst_form_pos: HashMap<Vec<usize>, usize> =
        dst_forms.iter().enumerate().map(|(i, j)| (j.clone(), i)).collect();
    let cols = src.dim() * src_forms.len();
    if q == 0 || p >= n {
        return Matrix::zeros(0, cols);
    }
    let dst = Ambient::new(n, m, q - 1);
    let rows = dst.dim() * dst_forms.len();
    let mut out = Matrix::zeros(rows, cols);
    for alpha in &src.alphas {
        for a in 0..m {
            for (jp, jset) in src_forms.iter().enumerate() {
                let col = src.index(alpha, a) * src_forms.len() + jp;
                for i in 0..n {
                    if alpha.exponents()[i] == 0 || jset.contains(&i) {
                        continue;
                    }
                    let lowered = alpha.lowered(i).expect("positive exponent");
                    let below = jset.iter().filter(|&&j| j < i).count();
                    let mut target = jset.clone();
                    target.push(i);
                    target.sort_unstable();
                    let row = dst.index(&lowered, a) * dst_forms.len() + dst_form_pos[&target];
                    let sign = if below % 2 == 0 { Field::one() } else { <Rational as Field>::one().neg() };
                    out.set(row, col, sign);
                }
            }
        }
    }
    out
}

/// `g_q ⊂ S^qT*⊗ℝᵐ`, the kernel of the top-order linearization.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolSpace {
    n: usize,
    m: usize,
    order: usize,
    at: At,
    constraints: Matrix<Poly>,
    dim: usize,
}

impl SymbolSpace {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn at(&self) -> &At {
        &self.at
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ambient_dim(&self) -> usize {
        self.m * binomial(self.n + self.order - 1, self.order)
    }

    /// Rows `∂F/∂u^a_α`, `|α| = q`, over the ambient basis.
    pub fn constraints(&self) -> &Matrix<Poly> {
        &self.constraints
    }

    /// An exact basis, over ℚ(coordinates) for generic symbols.
    pub fn basis(&self) -> Vec<Vec<RatFunc>> {
        let amb = self.ambient_dim();
        if self.constraints.rows() == 0 {
            return (0..amb)
                .map(|i| (0..amb).map(|j| if i == j { RatFunc::one() } else { RatFunc::zero() }).collect())
                .collect();
        }
        self.constraints.to_ratfunc().kernel_basis()
    }

    /// Constraints of `g_q⊗Λ^p` inside `S^qT*⊗ℝᵐ⊗Λ^p`.
    fn tensor_constraints(&self, p: usize) -> Matrix<Poly> {
        let forms = binomial(self.n, p);
        let cols = self.ambient_dim() * forms;
        let mut rows = Vec::new();
        for r in 0..self.constraints.rows() {
            for jp in 0..forms {
                let mut row = vec![Poly::zero(); cols];
                for (c, v) in self.constraints.row(r).iter().enumerate() {
                    row[c * forms + jp] = v.clone();
                }
                rows.push(row);
            }
        }
        Matrix::from_rows(cols, rows)
    }

    /// `dim ker(δ)` on `g_q⊗Λ^p`.
    fn delta_kernel_dim(&self, p: usize) -> Result<usize> {
        let forms = binomial(self.n, p);
        let cols = self.ambient_dim() * forms;
        let delta = ambient_delta_matrix(self.n, self.m, self.order, p).map(|c| Poly::constant(c.clone()));
        let stacked = self.tensor_constraints(p).stack(&delta);
        Ok(cols - generic_rank(&stacked)?)
    }
}

/// Symbol of `S` at order `q ≥ k`. A point may lie on any chart of order at
/// least `q`.
pub fn symbol(s: &PdeSystem, q: usize, at: &At) -> Result<SymbolSpace> {
    let k = s.order();
    if q < k {
        return Err(Error::Usage(format!("symbol order {q} is below the system order {k}")));
    }
    let p = prolong(s, q - k);
    let chart = p.chart();
    let (n, m) = (chart.n(), chart.m());
    let amb = Ambient::new(n, m, q);
    let columns: Vec<usize> =
        amb.alphas.iter().flat_map(|alpha| (0..m).map(move |a| chart.u(a, alpha))).collect();
    // points on higher-order charts are cut down to their prefix
    let at = match at {
        At::Point(pt) if pt.len() > chart.dimension() => &At::Point(pt[..chart.dimension()].to_vec()),
        other => other,
    };
    if let At::Point(pt) = at {
        p.check_on_locus(pt)?;
    }
    let mut rows = Vec::new();
    for f in p.equations() {
        let mut row: Vec<Poly> = columns.iter().map(|&c| f.partial(c)).collect();
        if let At::Point(pt) = at {
            row = row.iter().map(|e| e.eval(pt).map(Poly::constant)).collect::<Result<_>>()?;
        }
        if row.iter().any(|e| !e.is_zero()) {
            rows.push(row);
        }
    }
    let constraints = Matrix::from_rows(amb.dim(), rows);
    let dim = amb.dim() - generic_rank(&constraints)?;
    Ok(SymbolSpace { n, m, order: q, at: at.clone(), constraints, dim })
}

/// `δ` restricted to `g_q⊗Λ^p`: columns are `b ⊗ dx^J` for the basis of `g_q`.
pub fn delta_map(g: &SymbolSpace, p: usize) -> Matrix<RatFunc> {
    let forms = subsets(g.n, p);
    let basis = g.basis();
    let amb = ambient_delta_matrix(g.n, g.m, g.order, p).map(|c| RatFunc::constant(c.clone()));
    let cols = basis.len() * forms.len();
    let mut domain = Matrix::filled(amb.cols(), cols, RatFunc::zero());
    for (b, v) in basis.iter().enumerate() {
        for jp in 0..forms.len() {
            for (c, x) in v.iter().enumerate() {
                domain.set(c * forms.len() + jp, b * forms.len() + jp, x.clone());
            }
        }
    }
    amb.mul(&domain)
}

/// Cohomology table of the δ-complex of a system.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpencerReport {
    pub symbol_dims: BTreeMap<usize, usize>,
    /// `H^{q,p}` dimensions.
    pub cohomology: BTreeMap<(usize, usize), usize>,
    /// First `q₀` with `H^{q,1} = H^{q,2} = 0` for every `q ≥ q₀` in range.
    pub acyclic_from: Option<usize>,
}

/// `H^{q,p}` at `g_q⊗Λ^p` of `g_{q+1}⊗Λ^{p−1} → g_q⊗Λ^p → S^{q−1}⊗Λ^{p+1}`.
pub fn spencer_cohomology(s: &PdeSystem, qs: std::ops::RangeInclusive<usize>, ps: std::ops::RangeInclusive<usize>, at: &At) -> Result<SpencerReport> {
    let n = s.chart().n();
    if qs.is_empty() || ps.is_empty() || *ps.end() > n {
        return Err(Error::Usage(format!("need nonempty ranges with form degree at most {n}")));
    }
    let (q_lo, q_hi) = (*qs.start(), *qs.end());
    let symbols: Vec<SymbolSpace> = (q_lo..=q_hi + 1).map(|q| symbol(s, q, at)).collect::<Result<_>>()?;
    let mut report = SpencerReport { symbol_dims: BTreeMap::new(), cohomology: BTreeMap::new(), acyclic_from: None };
    for (i, q) in (q_lo..=q_hi).enumerate() {
        let g = &symbols[i];
        let next = &symbols[i + 1];
        report.symbol_dims.insert(q, g.dim());
        for p in ps.clone() {
            let kernel = g.delta_kernel_dim(p)?;
            let image = if p == 0 { 0 } else { next.dim() * binomial(n, p - 1) - next.delta_kernel_dim(p - 1)? };
            let h = kernel.checked_sub(image).ok_or_else(|| {
                Error::Invariant(format!("δ image exceeds kernel at (q, p) = ({q}, {p})"))
            })?;
            report.cohomology.insert((q, p), h);
        }
    }
    let vanishes = |q: usize| [1, 2].iter().all(|p| report.cohomology.get(&(q, *p)).is_none_or(|h| *h == 0));
    let mut q0 = None;
    for q in (q_lo..=q_hi).rev() {
        if vanishes(q) {
            q0 = Some(q);
        } else {
            break;
        }
    }
    report.acyclic_from = q0;
    Ok(report)
}

/// Result of Cartan's test at the order of the system.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CartanReport {
    pub order: usize,
    pub characters: Vec<usize>,
    pub next_symbol_dim: usize,
    pub involutive: bool,
    /// Rows of the flag matrix that produced the characters.
    pub flag: Vec<Vec<Rational>>,
}

/// `T[β][α]`: coefficient of `η^β` in `Π_i (Σ_j B_ij η_j)^{α_i}`.
fn substitution_matrix(b: &Matrix<Rational>, q: usize) -> (Vec<MultiIndex>, Matrix<Rational>) {
    let n = b.rows();
    let alphas = multi_indices_of_order(n, q);
    let lin: Vec<Poly> = (0..n)
        .map(|i| (0..n).fold(Poly::zero(), |acc, j| acc + Poly::var(j).scale(b.get(i, j))))
        .collect();
    let mut t = Matrix::zeros(alphas.len(), alphas.len());
    for (c, alpha) in alphas.iter().enumerate() {
        let mut prod = Poly::one();
        for (i, &e) in alpha.exponents().iter().enumerate() {
            prod = &prod * &lin[i].pow(e);
        }
        for (r, beta) in alphas.iter().enumerate() {
            t.set(r, c, prod.coefficient(&Monomial::from_exponents(beta.exponents())));
        }
    }
    (alphas, t)
}

fn characters_for_flag(g: &SymbolSpace, b: &Matrix<Rational>) -> Result<Vec<usize>> {
    let (n, m, q) = (g.n, g.m, g.order);
    let (alphas, t) = substitution_matrix(b, q);
    let amb = alphas.len() * m;
    // rows in the new frame: r'_(β,a) = Σ_α r_(α,a) T[β][α]
    let mut rows: Vec<Vec<Poly>> = Vec::new();
    for r in 0..g.constraints.rows() {
        let old = g.constraints.row(r);
        let mut new = vec![Poly::zero(); amb];
        for (bi, _) in alphas.iter().enumerate() {
            for a in 0..m {
                let mut acc = Poly::zero();
                for ai in 0..alphas.len() {
                    let c = t.get(bi, ai);
                    if !Field::is_zero(c) {
                        acc = acc + old[ai * m + a].scale(c);
                    }
                }
                new[bi * m + a] = acc;
            }
        }
        rows.push(new);
    }
    let mut dims = Vec::with_capacity(n + 1);
    for j in 0..=n {
        let mut stacked = rows.clone();
        for (bi, beta) in alphas.iter().enumerate() {
            if beta.exponents()[..j].iter().any(|&e| e > 0) {
                for a in 0..m {
                    let mut e = vec![Poly::zero(); amb];
                    e[bi * m + a] = Poly::one();
                    stacked.push(e);
                }
            }
        }
        dims.push(amb - generic_rank(&Matrix::from_rows(amb, stacked))?);
    }
    Ok((1..=n).map(|j| dims[j - 1] - dims[j]).collect())
}

/// Cartan characters of `g_k` for a seeded random flag, redrawn up to five
/// times keeping the lexicographically largest vector.
pub fn cartan_characters(s: &PdeSystem, at: &At, rng: &mut impl Rng) -> Result<CartanReport> {
    let k = s.order();
    let n = s.chart().n();
    let g = symbol(s, k, at)?;
    let next = symbol(s, k + 1, at)?;
    let mut best: Option<(Vec<usize>, Matrix<Rational>)> = None;
    let mut draws = 0;
    while draws < 5 {
        let b = Matrix::from_rows(
            n,
            (0..n).map(|_| (0..n).map(|_| Rational::from_integer(rng.gen_range(-3i64..=3).into())).collect()).collect(),
        );
        if b.rank() < n {
            continue;
        }
        draws += 1;
        let ch = characters_for_flag(&g, &b)?;
        if best.as_ref().is_none_or(|(c, _)| ch > *c) {
            best = Some((ch, b));
        }
    }
    let (characters, b) = best.expect("at least one draw");
    let weighted: usize = characters.iter().enumerate().map(|(i, a)| (i + 1) * a).sum();
    Ok(CartanReport {
        order: k,
        involutive: next.dim() == weighted,
        next_symbol_dim: next.dim(),
        characters,
        flag: b.row_vecs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::JetChart;
    use crate::pde::jet_index;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn laplace() -> PdeSystem {
        let c = JetChart::standard(2, 1, 2);
        let eq = Poly::var(jet_index(&c, 0, &[2, 0])) + Poly::var(jet_index(&c, 0, &[0, 2]));
        PdeSystem::new(c, vec![eq]).unwrap()
    }

    #[test]
    fn symbol_dimensions() {
        assert_eq!(symbol(&laplace(), 2, &At::Generic).unwrap().dim(), 2);
        assert_eq!(symbol(&laplace(), 3, &At::Generic).unwrap().dim(), 2);
        let free = PdeSystem::free(JetChart::standard(3, 2, 1));
        assert_eq!(symbol(&free, 3, &At::Generic).unwrap().dim(), 2 * 10);
    }

    #[test]
    fn delta_squares_to_zero() {
        for n in 1..=3 {
            for q in 2..=4 {
                for p in 0..n {
                    let d1 = ambient_delta_matrix(n, 2, q, p);
                    let d2 = ambient_delta_matrix(n, 2, q - 1, p + 1);
                    if d2.rows() > 0 {
                        assert!(d2.mul(&d1).is_zero());
                    }
                }
            }
        }
        // n = 1: S^q → S^{q−1}⊗T* is bijective
        assert_eq!(ambient_delta_matrix(1, 1, 3, 0).rank(), 1);
    }

    #[test]
    fn restricted_delta() {
        let g = symbol(&laplace(), 3, &At::Generic).unwrap();
        let d = delta_map(&g, 1);
        let next = ambient_delta_matrix(2, 1, 2, 2).map(|c| RatFunc::constant(c.clone()));
        assert!(next.mul(&d).is_zero());
    }

    #[test]
    fn laplace_cohomology() {
        let r = spencer_cohomology(&laplace(), 2..=4, 0..=2, &At::Generic).unwrap();
        for q in 2..=4 {
            assert_eq!(r.symbol_dims[&q], 2);
            for p in 0..=2 {
                assert_eq!(r.cohomology[&(q, p)], 0, "H^({q},{p})");
            }
        }
        assert_eq!(r.acyclic_from, Some(2));
    }

    #[test]
    fn characters() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let c = cartan_characters(&laplace(), &At::Generic, &mut rng).unwrap();
        assert_eq!((c.characters.clone(), c.involutive), (vec![2, 0], true));
        let free = PdeSystem::free(JetChart::standard(1, 1, 1));
        let c = cartan_characters(&free, &At::Generic, &mut rng).unwrap();
        assert_eq!((c.characters, c.involutive), (vec![1], true));
        let ch = JetChart::standard(2, 1, 1);
        let fin = PdeSystem::new(
            ch.clone(),
            vec![Poly::var(jet_index(&ch, 0, &[1, 0])), Poly::var(jet_index(&ch, 0, &[0, 1]))],
        )
        .unwrap();
        let c = cartan_characters(&fin, &At::Generic, &mut rng).unwrap();
        assert_eq!((c.characters, c.involutive), (vec![0, 0], true));
    }
}
